"""
Drive-cycle demonstration, long-term aging campaigns and the two-cell control comparison.

Everything here takes explicit arguments; the management commands resolve settings and files
before calling in.
"""
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import pandas as pd

from .aging import AgingEvent, AgingParams, apply_events, sample_gammas
from .charging import (
    ChargingSession, OptimizerConfig, charge_with_strategy, crate_for_duration, discharge_with_strategy,
    execute_charge_plan, optimize_charge_plan,
)
from .choices import Balancing, ChargeMode, Chemistry, Modulation, Strategy
from .exceptions import InvalidParameterError, RuntimeGuardError
from .pack import build_pack, pack_soc, pack_soh
from .records import DEFAULT_DC_FRACTION, DEFAULT_RECORD_COUNT, generate_records

logger = logging.getLogger(__name__)

HOURS_PER_YEAR = 8766.0
SECONDS_PER_HOUR = 3600.0
DRIVE_CYCLE_SOH = (0.98, 0.80)
DRIVE_CYCLE_CELLS = 10
DRIVE_CYCLE_TARGET = 0.7
DRIVE_CYCLE_REST_H = 6.0
BALANCE_TOLERANCE_AH = 0.01 * 2.3


@dataclass(frozen=True)
class ScenarioConfig:
    chemistry: str = Chemistry.LFP
    n_cells: int = 20
    q_no: float = 2.3
    r0: float = 0.01
    soh_eol: float = 0.70
    knee_soh: float = 0.75
    sigma_gamma: float = 0.10
    temp_mean_c: float = 35.0
    temp_std_c: float = 2.0
    rest_temp_c: float = 25.0
    soh_noise_std: float = 0.0
    strategy: str = Strategy.SOC_SOH_AWARE
    dc_fast_fraction: float = DEFAULT_DC_FRACTION
    calendar_multiplier: float = 1.0
    cyclic_multiplier: float = 1.0
    seed: int = 0
    n_records: int = DEFAULT_RECORD_COUNT
    discharge_crate: float = 0.3
    stages: int = 4
    conservative_discharge: bool = False

    def __post_init__(self):
        if self.chemistry not in Chemistry.values:
            raise InvalidParameterError(f'Unknown chemistry "{self.chemistry}".')
        if self.strategy not in Strategy.values:
            raise InvalidParameterError(f'Unknown strategy "{self.strategy}".')
        if self.n_cells < 2:
            raise InvalidParameterError('A scenario needs at least two cells.')
        if not 0 < self.soh_eol < 1:
            raise InvalidParameterError('soh_eol must lie in (0, 1).')
        if min(self.sigma_gamma, self.temp_std_c, self.soh_noise_std) < 0:
            raise InvalidParameterError('Standard deviations must be non-negative.')
        if not self.discharge_crate > 0:
            raise InvalidParameterError('discharge_crate must be positive.')

    def with_overrides(self, **overrides):
        return replace(self, **overrides)

    def as_dict(self):
        return asdict(self)

    @property
    def proposed(self):
        return self.strategy == Strategy.SOC_SOH_AWARE


@dataclass
class SimResult:
    scenario: ScenarioConfig
    lifetime_days: float
    lifetime_efc: float
    times_h: np.ndarray
    soh_trajectories: np.ndarray
    pack_soh_trajectory: np.ndarray
    sessions: int = 0
    sessions_unoptimized: int = 0
    final_soh_spread: float = 0.0
    failed_cells_at_eol: int = 0
    stalls: int = 0

    def trajectory_frame(self):
        frame = pd.DataFrame(
            self.soh_trajectories, columns=[f'soh_{i}' for i in range(self.soh_trajectories.shape[1])],
        )
        frame.insert(0, 'pack_soh', self.pack_soh_trajectory)
        frame.insert(0, 'time_h', self.times_h)
        return frame


@dataclass
class DriveCycleResult:
    window_h: float
    trajectory: pd.DataFrame
    end_of_charge_soc: np.ndarray
    end_of_charge_ah: np.ndarray
    stranded_ah: float
    pack_capacity_ah: float
    balanced_at_fraction: float = None
    optimized: bool = True
    profile_source: str = 'synthetic'
    charge_duration_h: float = 0.0
    discharge_duration_h: float = 0.0

    @property
    def end_of_charge_variance(self):
        return float(np.var(self.end_of_charge_soc))


@dataclass
class _Streams:
    gamma: np.random.Generator
    temperature: np.random.Generator
    records: np.random.Generator
    noise: np.random.Generator

    @classmethod
    def spawn(cls, seed):
        return cls(*(np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(4)))


@dataclass
class _Campaign:
    pack: object
    params: AgingParams
    knee_soh: float
    elapsed_h: float = 0.0
    charged_ah: float = 0.0
    stalls: int = 0
    unoptimized: int = 0
    times: list = field(default_factory=list)
    soh: list = field(default_factory=list)

    def age(self, stage_events):
        for events in stage_events:
            apply_events(self.pack, events, self.params, self.knee_soh)
        for cell in self.pack.cells:
            cell.state.aging.close_half_cycle()

    def snapshot(self):
        self.times.append(self.elapsed_h)
        self.soh.append(self.pack.soh)


def improvement(proposed, baseline):
    """Relative lifetime gain of ``proposed`` over ``baseline`` in simulated days."""
    if not baseline.lifetime_days > 0:
        raise InvalidParameterError('The baseline lifetime must be positive.')
    return proposed.lifetime_days / baseline.lifetime_days - 1


def _downsample(times, soh, samples):
    index = np.unique(np.linspace(0, len(times) - 1, min(samples, len(times))).round().astype(int))
    return np.asarray(times)[index], np.asarray(soh)[index]


def _build_scenario_pack(scenario, streams, start_soc):
    return build_pack(
        scenario.n_cells, soh=1.0, soc=start_soc, soh_eol=scenario.soh_eol,
        nominal_capacity_ah=scenario.q_no, internal_resistance_ohm=scenario.r0, chemistry=scenario.chemistry,
        gamma=sample_gammas(streams.gamma, scenario.n_cells, scenario.sigma_gamma),
        temperature_active_c=streams.temperature.normal(scenario.temp_mean_c, scenario.temp_std_c, scenario.n_cells),
        temperature_rest_c=scenario.rest_temp_c,
    )


def _charge_session(campaign, scenario, record, noise, cfg, period_h, index):
    pack = campaign.pack
    balancing = Balancing.CAPACITY if scenario.proposed else Balancing.SOC
    if record.mode == ChargeMode.DC_FAST:
        leg = charge_with_strategy(
            pack, record.end_soc, balancing=balancing, period_h=period_h, modulation=Modulation.DC,
        )
        return [leg.events], leg.duration_h, leg.applied, leg.stalled

    if scenario.proposed:
        soh_estimate = np.clip(pack.soh + noise, 0.0, 1.0) if scenario.soh_noise_std > 0 else None
        session = ChargingSession(record.end_soc, record.duration_h, soh_estimate=soh_estimate)
        plan = optimize_charge_plan(pack, session, cfg)
        if plan is not None:
            result = execute_charge_plan(plan, pack)
            return result.events, result.duration_h, result.applied, bool(result.stalls)
        campaign.unoptimized += 1
        logger.warning('Session %d fell back to greedy capacity balancing', index)

    crate = crate_for_duration(pack, record.end_soc, record.duration_h)
    leg = charge_with_strategy(pack, record.end_soc, balancing=balancing, period_h=period_h, crate=crate)
    return [leg.events], leg.duration_h, leg.applied, leg.stalled


def _rest_events(pack, duration_h):
    return [AgingEvent.rest(cell.state.soc, cell.params.temperature_rest_k, duration_h) for cell in pack.cells]


def run_longterm(scenario, *, records=None, aging_params=None, period_s=60.0, guard_years=30.0,
                 samples=500, lp_method='highs'):
    """
    Cycles the record stream (charge, rest, discharge to the next session's start SOC) until the
    pack SOH drops to the scenario's EOL threshold.
    """
    streams = _Streams.spawn(scenario.seed)
    if records is None:
        records = generate_records(streams.records, scenario.n_records, scenario.dc_fast_fraction)
    if not records:
        raise InvalidParameterError('A long-term run needs at least one charging record.')
    params = (aging_params or AgingParams()).scaled(scenario.calendar_multiplier, scenario.cyclic_multiplier)
    pack = _build_scenario_pack(scenario, streams, records[0].start_soc)
    cfg = OptimizerConfig(
        m=scenario.stages, discharge_avg_crate=scenario.discharge_crate,
        conservative_discharge=scenario.conservative_discharge, lp_method=lp_method,
    )
    campaign = _Campaign(pack, params, scenario.knee_soh)
    campaign.snapshot()
    period_h, guard_h = period_s / SECONDS_PER_HOUR, guard_years * HOURS_PER_YEAR
    discharge_balancing = Balancing.CAPACITY if scenario.proposed else Balancing.SOC
    logger.info('Long-term run: %s, %s, seed %d', scenario.chemistry, scenario.strategy, scenario.seed)

    session = 0
    while pack_soh(pack) > scenario.soh_eol:
        if campaign.elapsed_h > guard_h:
            logger.error('Runtime guard tripped after %d sessions', session)
            raise RuntimeGuardError(
                f'Pack SOH is still {pack_soh(pack):.4f} after {guard_years:g} simulated years.'
            )
        record, following = records[session % len(records)], records[(session + 1) % len(records)]
        noise = (
            streams.noise.normal(0.0, scenario.soh_noise_std, len(pack))
            if record.mode == ChargeMode.AC else np.zeros(len(pack))
        )
        stage_events, charge_h, applied, stalled = _charge_session(
            campaign, scenario, record, noise, cfg, period_h, session,
        )
        campaign.age(stage_events)
        campaign.charged_ah += float(np.clip(applied, 0.0, None).sum())
        campaign.stalls += int(stalled)

        plugged_h = max(record.duration_h - charge_h, 0.0)
        campaign.age([_rest_events(pack, plugged_h)])
        leg = discharge_with_strategy(
            pack, balancing=discharge_balancing, period_h=period_h, crate=scenario.discharge_crate,
            target_pack_soc=following.start_soc,
        )
        campaign.age([leg.events])
        campaign.stalls += int(leg.stalled)
        # the gap holds the drive; parking fills what the leg leaves of it
        parked_h = max(record.gap_to_next_h - leg.duration_h, 0.0)
        campaign.age([_rest_events(pack, parked_h)])
        campaign.elapsed_h += charge_h + plugged_h + leg.duration_h + parked_h
        campaign.snapshot()
        session += 1

    times, soh = _downsample(campaign.times, campaign.soh, samples)
    final = pack.soh
    result = SimResult(
        scenario=scenario,
        lifetime_days=campaign.elapsed_h / 24.0,
        lifetime_efc=campaign.charged_ah / pack.nominal_capacity.sum(),
        times_h=times,
        soh_trajectories=soh,
        pack_soh_trajectory=np.array([
            sample[sample > scenario.soh_eol].sum() * scenario.q_no / pack.nominal_capacity.sum() for sample in soh
        ]),
        sessions=session,
        sessions_unoptimized=campaign.unoptimized,
        final_soh_spread=float(final.max() - final.min()),
        failed_cells_at_eol=int(pack.bypassed.sum()),
        stalls=campaign.stalls,
    )
    logger.info('Pack reached EOL after %.1f days (%d sessions)', result.lifetime_days, session)
    return result


def synthetic_drive_profile(seconds=1800, seed=0):
    """
    Synthetic per-second discharge C-rate profile: an urban stretch, a highway stretch and
    stops, with seeded jitter. Stands in for a recorded driving test.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(seconds)
    urban = 0.35 + 0.3 * np.sin(2 * np.pi * t / 90.0) ** 2
    highway = 0.9 + 0.1 * np.sin(2 * np.pi * t / 600.0)
    profile = np.where(t < seconds / 2, urban, highway)
    profile[(t % 300) < 20] = 0.0
    profile = profile + rng.normal(0.0, 0.05, seconds)
    return np.clip(profile, 0.0, 2.0)


class _Recorder:
    def __init__(self, pack):
        self.rows, self.offset_s, self.phase = [], 0.0, 'charge'
        self.add(0.0, pack)

    def add(self, elapsed_h, pack):
        self.rows.append((self.offset_s + elapsed_h * SECONDS_PER_HOUR, self.phase, *pack.soc, *pack.remaining))

    def rest(self, pack, seconds):
        row = (self.phase, *pack.soc, *pack.remaining)
        self.rows.extend((self.offset_s + s, *row) for s in range(1, int(seconds) + 1))
        self.offset_s += seconds

    def frame(self, n_cells):
        columns = ['time_s', 'phase'] + [f'soc_{i}' for i in range(n_cells)] + [f'ah_{i}' for i in range(n_cells)]
        return pd.DataFrame(self.rows, columns=columns)


def _balanced_fraction(trajectory, n_cells, start_s):
    discharge = trajectory[trajectory['time_s'] >= start_s]
    ah = discharge[[f'ah_{i}' for i in range(n_cells)]].to_numpy()
    removed = ah[0].sum() - ah.sum(axis=1)
    balanced = np.flatnonzero(ah.max(axis=1) - ah.min(axis=1) <= BALANCE_TOLERANCE_AH)
    if not len(balanced) or not removed[-1] > 0:
        return None
    return float(removed[balanced[0]] / removed[-1])


def run_drive_cycle(window_h=1.5, *, profile=None, profile_source='synthetic', period_s=1.0,
                    lp_method='highs', rest_h=DRIVE_CYCLE_REST_H):
    """
    Charges ten LFP cells ranked by SOH from empty to 70 % pack SOC within ``window_h``, rests,
    then discharges to depletion with remaining-capacity balancing, sampling every period. The
    discharge keeps the duty pattern the plan's final state was checked against.
    """
    pack = build_pack(
        DRIVE_CYCLE_CELLS, soh=np.linspace(*DRIVE_CYCLE_SOH, DRIVE_CYCLE_CELLS), soc=0.0,
        chemistry=Chemistry.LFP,
    )
    n, period_h = len(pack), period_s / SECONDS_PER_HOUR
    profile = synthetic_drive_profile() if profile is None else np.asarray(profile, dtype=float)
    recorder = _Recorder(pack)

    plan = optimize_charge_plan(pack, ChargingSession(DRIVE_CYCLE_TARGET, window_h), OptimizerConfig(lp_method=lp_method))
    if plan is None:
        logger.warning('No feasible plan for a %.2f h window; charging with capacity balancing', window_h)
        leg = charge_with_strategy(
            pack, DRIVE_CYCLE_TARGET, balancing=Balancing.CAPACITY, period_h=period_h,
            crate=crate_for_duration(pack, DRIVE_CYCLE_TARGET, window_h), on_step=recorder.add,
        )
        charge_h = leg.duration_h
    else:
        charge_h = execute_charge_plan(plan, pack, period_h, on_step=recorder.add).duration_h
    end_soc, end_ah = pack.soc, pack.remaining

    recorder.offset_s += charge_h * SECONDS_PER_HOUR
    recorder.phase = 'rest'
    recorder.rest(pack, rest_h * SECONDS_PER_HOUR)
    recorder.phase = 'discharge'
    discharge_start_s = recorder.offset_s
    leg = discharge_with_strategy(
        pack, balancing=Balancing.CAPACITY, period_h=period_h, crate=profile, on_step=recorder.add,
        duties=None if plan is None else plan.discharge_duties,
    )
    trajectory = recorder.frame(n)
    return DriveCycleResult(
        window_h=window_h, trajectory=trajectory, end_of_charge_soc=end_soc, end_of_charge_ah=end_ah,
        stranded_ah=leg.residual_ah, pack_capacity_ah=float(pack.max_capacity.sum()),
        balanced_at_fraction=_balanced_fraction(trajectory, n, discharge_start_s),
        optimized=plan is not None, profile_source=profile_source,
        charge_duration_h=charge_h, discharge_duration_h=leg.duration_h,
    )


TWO_CELL_CONTROLS = {
    'equal': (Balancing.EQUAL, Balancing.EQUAL),
    'capacity': (Balancing.CAPACITY, Balancing.CAPACITY),
    'soc': (Balancing.SOC, Balancing.SOC),
    'soh': (Balancing.SOH, Balancing.SOH),
    'soc_soh_aware': (Balancing.SOH, Balancing.CAPACITY),
}


def run_two_cell_comparison(soh=(0.8, 1.0), start_soc=0.3, target_soc=0.7, crate=0.5, period_s=10.0):
    """
    Charges a weak and a healthy 1 Ah cell from ``start_soc`` to ``target_soc`` with one fixed
    line current, then discharges to depletion, once per control. Returns one row per control.
    """
    period_h = period_s / SECONDS_PER_HOUR
    rows = []
    for name, (charge_balancing, discharge_balancing) in TWO_CELL_CONTROLS.items():
        pack = build_pack(2, soh=soh, soc=start_soc, nominal_capacity_ah=1.0)
        healthy = int(np.argmax(pack.soh))
        charge = charge_with_strategy(pack, target_soc, balancing=charge_balancing, period_h=period_h, crate=crate)
        discharge = discharge_with_strategy(pack, balancing=discharge_balancing, period_h=period_h, crate=crate)
        charged, discharged = charge.applied, -discharge.applied
        rows.append({
            'control': name,
            'stranded_ah': discharge.residual_ah,
            'healthy_charge_share': float(charged[healthy] / charged.sum()) if charged.sum() > 0 else 0.0,
            'healthy_discharge_share': (
                float(discharged[healthy] / discharged.sum()) if discharged.sum() > 0 else 0.0
            ),
            'charge_duration_h': charge.duration_h,
            'discharge_duration_h': discharge.duration_h,
        })
    return pd.DataFrame(rows).set_index('control')


SENSITIVITY_ROWS = {
    'default': {},
    'calendar_x2': {'calendar_multiplier': 2.0},
    'cyclic_x2': {'cyclic_multiplier': 2.0},
    'knee_85': {'knee_soh': 0.85},
    'no_knee': {'knee_soh': 0.0},
    'cells_40': {'n_cells': 40},
    'sigma_gamma_015': {'sigma_gamma': 0.15},
    'r0_01': {'r0': 0.1},
    'fast_charge_50': {'dc_fast_fraction': 0.5},
    'temp_45': {'temp_mean_c': 45.0},
    'temp_std_4': {'temp_std_c': 4.0},
    'eol_80': {'soh_eol': 0.80},
    'eol_75': {'soh_eol': 0.75},
    'eol_65': {'soh_eol': 0.65},
}
