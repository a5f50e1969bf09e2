"""
Per-event capacity-fade models for LFP and LMO cells.

LFP time is in hours; the calendar term integrates ``dt / (2 sqrt(t))`` exactly so any
partition of a storage interval telescopes to ``sqrt(t_total)``. LMO time is in seconds
(``k_t`` is per second) and cyclic damage is accumulated over an open half cycle that is
closed on a throughput reversal or at the end of a session.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .choices import Chemistry
from .exceptions import AgingDomainError, InvalidParameterError

logger = logging.getLogger(__name__)

HALF_CYCLE_LOG_SIZE = 10000
KNEE_SLOPE = 50.0
GAMMA_FLOOR = 0.5
SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class LfpAgingParams:
    a: float = 2.0916e-8
    b: float = -1.2179e-5
    c: float = 0.0018
    d: float = -1.7082e-6
    e: float = 0.0556
    f: float = 5.9808e6
    g: float = 0.6898
    h: float = -6464.7


@dataclass(frozen=True)
class LmoAgingParams:
    alpha_sei: float = 5.75e-2
    beta_sei: float = 121.0
    k_delta1: float = 1.40e5
    k_delta2: float = -0.501
    k_delta3: float = -1.23e5
    k_sigma: float = 1.04
    sigma_ref: float = 0.50
    k_T: float = 6.93e-2
    T_ref: float = 298.15
    k_t: float = 4.14e-10


@dataclass(frozen=True)
class AgingParams:
    lfp: LfpAgingParams = field(default_factory=LfpAgingParams)
    lmo: LmoAgingParams = field(default_factory=LmoAgingParams)
    calendar_multiplier: float = 1.0
    cyclic_multiplier: float = 1.0

    def scaled(self, calendar=1.0, cyclic=1.0):
        return replace(
            self,
            calendar_multiplier=self.calendar_multiplier * calendar,
            cyclic_multiplier=self.cyclic_multiplier * cyclic,
        )


@dataclass(frozen=True)
class AgingEvent:
    delta_soc: float
    mean_soc: float
    crate: float
    temperature_k: float
    duration_h: float

    def __post_init__(self):
        if not -1e-9 <= self.mean_soc <= 1 + 1e-9:
            raise InvalidParameterError(f'mean_soc {self.mean_soc} is outside [0, 1].')
        if self.duration_h < 0:
            raise InvalidParameterError('duration_h must be non-negative.')
        if not self.temperature_k > 0:
            raise InvalidParameterError('temperature_k must be positive.')
        object.__setattr__(self, 'mean_soc', min(max(self.mean_soc, 0.0), 1.0))

    @classmethod
    def rest(cls, soc, temperature_k, duration_h):
        return cls(0.0, soc, 0.0, temperature_k, duration_h)


@dataclass(frozen=True)
class HalfCycle:
    swing: float = 0.0
    mean_soc: float = 0.0
    fc: float = 0.0
    direction: int = 0


@dataclass
class AgingAccumulator:
    calendar_time_h: float = 0.0
    half_cycles: deque = field(default_factory=lambda: deque(maxlen=HALF_CYCLE_LOG_SIZE))
    fc_sum: float = 0.0
    ft_sum: float = 0.0
    soh: float = 1.0
    open_half_cycle: HalfCycle = field(default_factory=HalfCycle)
    half_cycle_count: int = 0

    def close_half_cycle(self):
        if self.open_half_cycle.swing > 0:
            self.half_cycles.append((self.open_half_cycle.swing, self.open_half_cycle.mean_soc))
            self.half_cycle_count += 1
        self.open_half_cycle = HalfCycle()


def lfp_terms(event, acc, p):
    """Returns the (cyclic, calendar) LFP decrements before multipliers."""
    T = event.temperature_k
    cyclic = (p.a * T ** 2 + p.b * T + p.c) * math.exp((p.d * T + p.e) * event.crate) * abs(event.delta_soc) / 4.6
    t = acc.calendar_time_h
    calendar = (p.f / 2.3) * math.exp(p.g * event.mean_soc + p.h / T) * (
        math.sqrt(t + event.duration_h) - math.sqrt(t)
    )
    return max(cyclic, 0.0), max(calendar, 0.0)


def lfp_delta_soh(event, acc, p, calendar_multiplier=1.0, cyclic_multiplier=1.0):
    cyclic, calendar = lfp_terms(event, acc, p)
    return cyclic_multiplier * cyclic + calendar_multiplier * calendar


def lmo_stress(mean_soc, temperature_k, p):
    return math.exp(
        p.k_sigma * (mean_soc - p.sigma_ref)
        + p.k_T * p.T_ref * (temperature_k - p.T_ref) / temperature_k
    )


def lmo_cycle_damage(swing, mean_soc, temperature_k, p):
    if swing <= 0:
        return 0.0
    denominator = p.k_delta1 * swing ** p.k_delta2 + p.k_delta3
    if denominator <= 0:
        raise AgingDomainError(f'A half cycle with |dSOC| = {swing:.4f} lies outside the LMO kernel region.')
    return 0.5 / denominator * lmo_stress(mean_soc, temperature_k, p)


def lmo_prefactor(acc, p):
    total = acc.ft_sum + acc.fc_sum
    return p.alpha_sei * p.beta_sei * math.exp(-p.beta_sei * total) + (1 - p.alpha_sei) * math.exp(-total)


def extend_half_cycle(event, acc, p):
    """
    Returns the open half cycle after ``event`` and the cyclic damage it adds. A reversal
    starts a new half cycle; the caller closes the previous one.
    """
    swing = abs(event.delta_soc)
    if swing == 0:
        return acc.open_half_cycle, 0.0
    direction = 1 if event.delta_soc > 0 else -1
    current = acc.open_half_cycle
    if current.swing > 0 and current.direction != direction:
        current = HalfCycle()
    total = current.swing + swing
    mean_soc = (current.mean_soc * current.swing + event.mean_soc * swing) / total
    fc = lmo_cycle_damage(total, mean_soc, event.temperature_k, p)
    increment = max(fc - current.fc, 0.0)
    return HalfCycle(total, mean_soc, max(fc, current.fc), direction), increment


def lmo_terms(event, acc, p):
    """Returns the (cyclic, calendar) LMO decrements before multipliers."""
    _, fc_increment = extend_half_cycle(event, acc, p)
    ft_increment = p.k_t * lmo_stress(event.mean_soc, event.temperature_k, p) * event.duration_h * SECONDS_PER_HOUR
    prefactor = lmo_prefactor(acc, p)
    return prefactor * fc_increment, prefactor * ft_increment


def lmo_delta_soh(event, acc, p, calendar_multiplier=1.0, cyclic_multiplier=1.0):
    cyclic, calendar = lmo_terms(event, acc, p)
    return cyclic_multiplier * cyclic + calendar_multiplier * calendar


def augment(delta_soh, cell, knee_soh):
    if delta_soh < 0:
        raise InvalidParameterError('delta_soh must be non-negative.')
    return cell.params.gamma * (1 + KNEE_SLOPE * max(knee_soh - cell.state.soh, 0.0)) * delta_soh


def apply_event(cell, event, params, knee_soh=0.75):
    """Ages ``cell`` in place by one event and returns its state."""
    acc = cell.state.aging
    if cell.params.chemistry == Chemistry.LFP:
        delta = lfp_delta_soh(
            event, acc, params.lfp,
            calendar_multiplier=params.calendar_multiplier, cyclic_multiplier=params.cyclic_multiplier,
        )
    else:
        if event.delta_soc != 0 and acc.open_half_cycle.swing > 0:
            if (event.delta_soc > 0) != (acc.open_half_cycle.direction > 0):
                acc.close_half_cycle()
        delta = lmo_delta_soh(
            event, acc, params.lmo,
            calendar_multiplier=params.calendar_multiplier, cyclic_multiplier=params.cyclic_multiplier,
        )
        acc.open_half_cycle, fc_increment = extend_half_cycle(event, acc, params.lmo)
        acc.fc_sum += fc_increment
        acc.ft_sum += (
            params.lmo.k_t * lmo_stress(event.mean_soc, event.temperature_k, params.lmo)
            * event.duration_h * SECONDS_PER_HOUR
        )
    acc.calendar_time_h += event.duration_h
    if delta > 0:
        cell.state.set_soh(cell.state.soh - augment(delta, cell, knee_soh))
    return cell.state


def apply_events(pack, events, params, knee_soh=0.75, close_half_cycles=False):
    for cell, event in zip(pack.cells, events):
        apply_event(cell, event, params, knee_soh)
        if close_half_cycles:
            cell.state.aging.close_half_cycle()


def sample_gammas(rng, n_cells, sigma):
    if sigma < 0:
        raise InvalidParameterError('sigma_gamma must be non-negative.')
    return np.maximum(rng.normal(1.0, sigma, n_cells), GAMMA_FLOOR)
