"""Synthetic charging-session records standing in for a vehicle's charging log."""
from dataclasses import dataclass

import numpy as np

from .choices import ChargeMode
from .exceptions import InvalidParameterError

DEFAULT_RECORD_COUNT = 255
DEFAULT_DC_FRACTION = 81 / 255
STREAM_SPAN_H = 2.5 * 365.25 * 24
GAP_SHAPE = 2.0

AC_START, AC_END, AC_CRATE = (0.1, 0.5), (0.7, 0.95), (0.05, 0.3)
DC_START, DC_END, DC_CRATE = (0.1, 0.4), (0.6, 0.9), (0.3, 1.5)


@dataclass(frozen=True)
class ChargingRecord:
    start_soc: float
    end_soc: float
    duration_h: float
    mode: str
    gap_to_next_h: float

    def __post_init__(self):
        if not 0 <= self.start_soc < self.end_soc <= 1:
            raise InvalidParameterError('A record needs 0 <= start_soc < end_soc <= 1.')
        if not self.duration_h > 0:
            raise InvalidParameterError('A record needs a positive duration.')
        if self.gap_to_next_h < 0:
            raise InvalidParameterError('gap_to_next_h must be non-negative.')
        if self.mode not in ChargeMode.values:
            raise InvalidParameterError(f'Unknown charging mode "{self.mode}".')

    @property
    def average_crate(self):
        return (self.end_soc - self.start_soc) / self.duration_h


def generate_records(seed, n_records=DEFAULT_RECORD_COUNT, dc_fraction=DEFAULT_DC_FRACTION,
                     span_h=STREAM_SPAN_H):
    """
    Draws a record stream whose gaps are scaled so that charging plus gaps spans ``span_h``.
    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if n_records < 1:
        raise InvalidParameterError('n_records must be at least 1.')
    if not 0 <= dc_fraction <= 1:
        raise InvalidParameterError('dc_fraction must lie in [0, 1].')
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_dc = int(round(n_records * dc_fraction))
    modes = np.array([ChargeMode.DC_FAST] * n_dc + [ChargeMode.AC] * (n_records - n_dc), dtype=object)
    modes = modes[rng.permutation(n_records)]
    is_dc = modes == ChargeMode.DC_FAST

    start = np.where(is_dc, rng.uniform(*DC_START, n_records), rng.uniform(*AC_START, n_records))
    end = np.where(is_dc, rng.uniform(*DC_END, n_records), rng.uniform(*AC_END, n_records))
    crate = np.where(is_dc, rng.uniform(*DC_CRATE, n_records), rng.uniform(*AC_CRATE, n_records))
    duration = (end - start) / crate

    gaps = rng.gamma(GAP_SHAPE, 1.0, n_records)
    idle = max(span_h - duration.sum(), 0.0)
    gaps *= idle / gaps.sum()
    return [
        ChargingRecord(float(s), float(e), float(d), str(mode), float(g))
        for s, e, d, mode, g in zip(start, end, duration, modes, gaps)
    ]
