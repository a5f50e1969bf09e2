"""
Battery-pack data model: per-cell parameters and state, OCV curves, the
charging C-rate envelope and the pack-level SOH/SOC aggregates.
"""
import copy
from dataclasses import dataclass, field

import numpy as np

from .aging import AgingAccumulator
from .choices import Chemistry
from .exceptions import InvalidParameterError, OcvDomainError

SOC_FLOOR = 1e-4
KELVIN = 273.15

CRATE_INTERCEPT, CRATE_SLOPE, CRATE_FLOOR = 2.6963, 2.5795, 0.05
STATE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CellParams:
    nominal_capacity_ah: float = 2.3
    internal_resistance_ohm: float = 0.01
    chemistry: str = Chemistry.LFP
    gamma: float = 1.0
    temperature_active_c: float = 35.0
    temperature_rest_c: float = 25.0

    def __post_init__(self):
        if not self.nominal_capacity_ah > 0:
            raise InvalidParameterError('nominal_capacity_ah must be positive.')
        if self.internal_resistance_ohm < 0:
            raise InvalidParameterError('internal_resistance_ohm must be non-negative.')
        if not self.gamma > 0:
            raise InvalidParameterError('gamma must be positive.')
        if self.chemistry not in Chemistry.values:
            raise InvalidParameterError(f'Unknown chemistry "{self.chemistry}".')

    @property
    def temperature_active_k(self):
        return self.temperature_active_c + KELVIN

    @property
    def temperature_rest_k(self):
        return self.temperature_rest_c + KELVIN


@dataclass
class CellState:
    """
    Charge and capacity are authoritative; ``soc`` and ``soh`` are derived views
    refreshed by every mutation method.
    """
    remaining_charge_ah: float
    max_capacity_ah: float
    nominal_capacity_ah: float
    soh: float = field(init=False)
    soc: float = field(init=False)
    aging: AgingAccumulator = field(default_factory=AgingAccumulator)

    def __post_init__(self):
        if not 0 <= self.max_capacity_ah <= self.nominal_capacity_ah + STATE_TOLERANCE:
            raise InvalidParameterError('max_capacity_ah must lie in [0, nominal_capacity_ah].')
        if not -STATE_TOLERANCE <= self.remaining_charge_ah <= self.max_capacity_ah + STATE_TOLERANCE:
            raise InvalidParameterError('remaining_charge_ah must lie in [0, max_capacity_ah].')
        self.remaining_charge_ah = min(max(self.remaining_charge_ah, 0.0), self.max_capacity_ah)
        self._refresh()

    @classmethod
    def from_fractions(cls, nominal_capacity_ah, soh=1.0, soc=0.0):
        if not 0 <= soh <= 1 or not 0 <= soc <= 1:
            raise InvalidParameterError('soh and soc must lie in [0, 1].')
        max_capacity = soh * nominal_capacity_ah
        state = cls(soc * max_capacity, max_capacity, nominal_capacity_ah)
        state.aging.soh = state.soh
        return state

    def _refresh(self):
        self.soh = self.max_capacity_ah / self.nominal_capacity_ah
        self.soc = self.remaining_charge_ah / self.max_capacity_ah if self.max_capacity_ah > 0 else 0.0

    @property
    def headroom_ah(self):
        return self.max_capacity_ah - self.remaining_charge_ah

    def set_charge(self, remaining_charge_ah):
        self.remaining_charge_ah = min(max(remaining_charge_ah, 0.0), self.max_capacity_ah)
        self._refresh()

    def add_charge(self, delta_ah):
        """Applies a signed Ah delta clamped to [0, max_capacity]; returns the applied delta."""
        before = self.remaining_charge_ah
        self.set_charge(before + delta_ah)
        return self.remaining_charge_ah - before

    def set_soh(self, soh):
        soh = min(max(soh, 0.0), self.soh)
        self.max_capacity_ah = soh * self.nominal_capacity_ah
        self.remaining_charge_ah = min(self.remaining_charge_ah, self.max_capacity_ah)
        self._refresh()
        self.aging.soh = self.soh


@dataclass
class Cell:
    params: CellParams
    state: CellState

    @classmethod
    def fresh(cls, params=None, soh=1.0, soc=0.0):
        params = params or CellParams()
        return cls(params, CellState.from_fractions(params.nominal_capacity_ah, soh, soc))

    @property
    def soc(self):
        return self.state.soc

    @property
    def soh(self):
        return self.state.soh


@dataclass
class PackState:
    cells: list
    soh_eol: float = 0.70
    phase_count: int = 1

    def __post_init__(self):
        if not 0 < self.soh_eol < 1:
            raise InvalidParameterError('soh_eol must lie in (0, 1).')
        if self.phase_count != 1:
            raise InvalidParameterError('Only the single simulated phase is supported.')

    def __len__(self):
        return len(self.cells)

    @property
    def soh(self):
        return np.array([cell.state.soh for cell in self.cells])

    @property
    def soc(self):
        return np.array([cell.state.soc for cell in self.cells])

    @property
    def remaining(self):
        return np.array([cell.state.remaining_charge_ah for cell in self.cells])

    @property
    def max_capacity(self):
        return np.array([cell.state.max_capacity_ah for cell in self.cells])

    @property
    def nominal_capacity(self):
        return np.array([cell.params.nominal_capacity_ah for cell in self.cells])

    @property
    def bypassed(self):
        return self.soh <= self.soh_eol

    @property
    def active(self):
        return ~self.bypassed

    def apply_charge(self, deltas):
        return np.array([cell.state.add_charge(delta) for cell, delta in zip(self.cells, deltas)])

    def copy(self):
        return copy.deepcopy(self)


@dataclass(frozen=True)
class OcvCurve:
    chemistry: str = Chemistry.LFP

    def __call__(self, soc):
        return ocv(self, soc)


def pack_soh(pack):
    nominal = pack.nominal_capacity
    return float(pack.max_capacity[pack.active].sum() / nominal.sum())


def pack_soc(pack):
    active = pack.active
    capacity = pack.max_capacity[active].sum()
    if capacity <= 0:
        return 0.0
    return float(pack.remaining[active].sum() / capacity)


def ocv(curve, soc):
    soc = np.asarray(soc, dtype=float)
    if np.any((soc < 0) | (soc > 1)) or np.any(np.isnan(soc)):
        raise OcvDomainError(f'SOC {soc} is outside [0, 1].')
    s = np.clip(soc, SOC_FLOOR, 1.0)
    if curve.chemistry == Chemistry.LFP:
        with np.errstate(divide='ignore'):
            knee = np.exp(-0.008 / (1.0 - s))
        voltage = -0.5863 * np.exp(-21.9 * s) + 3.414 + 0.1102 * s - 0.1718 * knee
    elif curve.chemistry == Chemistry.LMO:
        voltage = 3.875 - 0.335 * (-np.log(s)) ** 0.653 - 0.5332 * s + 0.8315 * np.exp(0.6 * (s - 1.0))
    else:
        raise InvalidParameterError(f'Unknown chemistry "{curve.chemistry}".')
    return float(voltage) if voltage.ndim == 0 else voltage


def max_charge_crate(soc):
    crate = np.maximum(CRATE_INTERCEPT - CRATE_SLOPE * np.asarray(soc, dtype=float), CRATE_FLOOR)
    return float(crate) if crate.ndim == 0 else crate


def inverse_crate_envelope(crate):
    soc = np.clip((CRATE_INTERCEPT - np.asarray(crate, dtype=float)) / CRATE_SLOPE, 0.0, 1.0)
    return float(soc) if soc.ndim == 0 else soc


def build_pack(n_cells, *, soh=1.0, soc=0.0, soh_eol=0.70, **params):
    """Builds a pack of cells sharing ``params``; ``soh``/``soc`` may be scalars or per-cell sequences."""
    soh = np.broadcast_to(np.asarray(soh, dtype=float), (n_cells,))
    soc = np.broadcast_to(np.asarray(soc, dtype=float), (n_cells,))
    gammas = np.broadcast_to(np.asarray(params.pop('gamma', 1.0), dtype=float), (n_cells,))
    temps = np.broadcast_to(np.asarray(params.pop('temperature_active_c', 35.0), dtype=float), (n_cells,))
    cells = [
        Cell.fresh(
            CellParams(gamma=float(gamma), temperature_active_c=float(temp), **params),
            soh=float(h), soc=float(s),
        )
        for h, s, gamma, temp in zip(soh, soc, gammas, temps)
    ]
    return PackState(cells, soh_eol=soh_eol)
