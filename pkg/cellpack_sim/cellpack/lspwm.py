"""
Level-shifted PWM duty model, the achievability test for a target charge split and the
greedy per-period level assignments.

Levels are 1-based: level 1 carries the largest duty.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .choices import Direction
from .exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-9
ACHIEVABILITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class DutyCyclePattern:
    duties: np.ndarray

    def __post_init__(self):
        duties = np.asarray(self.duties, dtype=float)
        if duties.ndim != 1:
            raise InvalidParameterError('Duties must be a one-dimensional sequence.')
        if np.any(duties < 0) or np.any(duties > 1):
            raise InvalidParameterError('Duties must lie in [0, 1].')
        if np.any(np.diff(duties) > 1e-12):
            raise InvalidParameterError('Duties must be non-increasing by level.')
        duties.setflags(write=False)
        object.__setattr__(self, 'duties', duties)

    def __len__(self):
        return len(self.duties)

    @property
    def total(self):
        return float(self.duties.sum())

    def padded(self, n_levels):
        """Top ``n_levels`` duties, zero-filled when the pattern is shorter."""
        duties = np.zeros(n_levels)
        size = min(n_levels, len(self.duties))
        duties[:size] = self.duties[:size]
        return DutyCyclePattern(duties)

    def shares(self):
        total = self.total
        if total <= 0:
            return np.zeros(len(self.duties))
        return np.cumsum(self.duties) / total


@dataclass(frozen=True)
class LevelAssignment:
    level_of_cell: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.level_of_cell, dtype=int)
        if sorted(levels.tolist()) != list(range(1, len(levels) + 1)):
            raise InvalidParameterError('A level assignment must be a bijection onto 1..n.')
        levels.setflags(write=False)
        object.__setattr__(self, 'level_of_cell', levels)

    def __len__(self):
        return len(self.level_of_cell)

    def as_tuple(self):
        return tuple(int(level) for level in self.level_of_cell)


def _check_voltages(u_ter, u_phase, n_levels):
    if not u_ter > 0 or u_phase < 0 or n_levels < 1:
        raise InvalidParameterError('Expected u_ter > 0, u_phase >= 0 and n_levels >= 1.')


def sinusoidal_duties(u_ter, u_phase, n_levels):
    _check_voltages(u_ter, u_phase, n_levels)
    if u_phase == 0:
        return DutyCyclePattern(np.zeros(n_levels))
    levels = np.arange(1, n_levels + 1)
    ratio = np.minimum((2 * levels - 1) * u_ter / (2 * u_phase), 1.0)
    return DutyCyclePattern((2 / np.pi) * np.arccos(ratio))


def dc_duties(u_ter, u_phase, n_levels):
    _check_voltages(u_ter, u_phase, n_levels)
    levels = np.arange(1, n_levels + 1)
    duties = np.clip((u_phase - (levels - 1) * u_ter) / u_ter, 0.0, 1.0)
    duties[(levels - 1) * u_ter > u_phase] = 0.0
    duties[levels * u_ter < u_phase] = 1.0
    return DutyCyclePattern(duties)


def is_achievable(delta_q, duties, tol=ACHIEVABILITY_TOLERANCE):
    """
    A split of charge gains is achievable under constant duties iff the k largest gains
    never take a larger share of the total than the k highest duties.
    """
    delta_q = np.asarray(delta_q, dtype=float)
    if np.any(delta_q < 0):
        raise InvalidParameterError('Charge gains must be non-negative.')
    total = delta_q.sum()
    if total <= 0:
        return True
    pattern = duties.padded(len(delta_q))
    if pattern.total <= 0:
        logger.warning('Achievability check on %.6g Ah with all duties at zero', total)
        return False
    gain_shares = np.cumsum(np.sort(delta_q)[::-1]) / total
    return bool(np.all(gain_shares <= pattern.shares() + tol))


def rank_levels(keys, descending, tie_rotation=0, bypassed=None, tol=TIE_TOLERANCE):
    """
    Maps the j-th ranked key to level j. Keys within ``tol`` of a group's leader are tied;
    the p-th tied cell (by index) takes the group's ((p + tie_rotation) mod size)-th level.
    Bypassed cells take the lowest levels.
    """
    keys = np.asarray(keys, dtype=float)
    n = len(keys)
    if n == 0:
        raise InvalidParameterError('Cannot assign levels to an empty pack.')
    bypassed = np.zeros(n, dtype=bool) if bypassed is None else np.asarray(bypassed, dtype=bool)
    active = np.flatnonzero(~bypassed)
    order = active[np.argsort(-keys[active] if descending else keys[active], kind='stable')]
    levels = np.empty(n, dtype=int)
    start = 0
    while start < len(order):
        end = start + 1
        while end < len(order) and abs(keys[order[end]] - keys[order[start]]) <= tol:
            end += 1
        group = np.sort(order[start:end])
        size = len(group)
        for position, cell in enumerate(group):
            levels[cell] = start + (position + tie_rotation) % size + 1
        start = end
    levels[np.flatnonzero(bypassed)] = np.arange(len(active) + 1, n + 1)
    return LevelAssignment(levels)


def assign_strategy1(remaining_gain, tie_rotation=0, bypassed=None):
    return rank_levels(remaining_gain, True, tie_rotation, bypassed)


def assign_strategy2(remaining_capacity, direction, tie_rotation=0, bypassed=None):
    return rank_levels(remaining_capacity, direction == Direction.DISCHARGE, tie_rotation, bypassed)


def assign_strategy3(soc, direction, tie_rotation=0, bypassed=None):
    return rank_levels(soc, direction == Direction.DISCHARGE, tie_rotation, bypassed)


def step_period(assignment, duties, line_current, period, direction=Direction.CHARGE, bypassed=None):
    """Signed per-cell Ah moved during one modulation period of ``period`` hours."""
    if not period > 0:
        raise InvalidParameterError('The modulation period must be positive.')
    pattern = duties.padded(len(assignment))
    deltas = line_current * pattern.duties[assignment.level_of_cell - 1] * period
    if bypassed is not None:
        deltas = np.where(bypassed, 0.0, deltas)
    return deltas if direction == Direction.CHARGE else -deltas
