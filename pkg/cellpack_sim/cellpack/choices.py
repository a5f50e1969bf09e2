from django.db import models


class Chemistry(models.TextChoices):
    LFP = 'lfp', 'Lithium iron phosphate'
    LMO = 'lmo', 'Lithium manganese oxide'


class Direction(models.TextChoices):
    CHARGE = 'charge', 'Charge'
    DISCHARGE = 'discharge', 'Discharge'


class Strategy(models.TextChoices):
    SOC_BALANCE = 'soc_balance', 'SOC balancing'
    SOC_SOH_AWARE = 'soc_soh_aware', 'SOC-SOH-aware'


class ChargeMode(models.TextChoices):
    AC = 'ac', 'AC'
    DC_FAST = 'dc_fast', 'DC fast'


class Modulation(models.TextChoices):
    SINUSOIDAL = 'sinusoidal', 'Sinusoidal'
    DC = 'dc', 'DC'


class LpStatus(models.TextChoices):
    OPTIMAL = 'optimal', 'Optimal'
    INFEASIBLE = 'infeasible', 'Infeasible'
    UNBOUNDED = 'unbounded', 'Unbounded'


class Balancing(models.TextChoices):
    CAPACITY = 'capacity', 'Remaining-capacity balancing'
    SOC = 'soc', 'SOC balancing'
    SOH = 'soh', 'SOH balancing'
    EQUAL = 'equal', 'Equal throughput'
