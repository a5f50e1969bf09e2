"""
SOH-aware CCCV charge planning and execution.

A session's charge is split into one CC stage and ``m`` CV stages. A linear program picks
the per-cell, per-stage allocations that favour healthy cells while every stage split stays
achievable by level-shifted PWM, the session fits its time limit and the final state can
still be fully discharged. Plans are then executed with the greedy level assignments.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .aging import AgingEvent
from .choices import Balancing, Direction, Modulation
from .exceptions import InvalidParameterError
from .lp import LpProblem, solve_lp
from .lspwm import (
    DutyCyclePattern, assign_strategy1, assign_strategy2, assign_strategy3, dc_duties, is_achievable,
    rank_levels, sinusoidal_duties, step_period,
)
from .pack import (
    CRATE_INTERCEPT, CRATE_FLOOR, OcvCurve, inverse_crate_envelope, max_charge_crate, ocv, pack_soc,
)

logger = logging.getLogger(__name__)

CELL_VOLTAGE_STEP = 3.0
I_CC_GRID_SIZE, I_CC_GRID_MIN_CRATE = 8, 0.2
CHARGE_TOLERANCE = 1e-9
TIE_TOLERANCE = 1e-9
VALIDATION_TOLERANCE = 1e-6
MAX_LEG_HOURS = 72.0


@dataclass(frozen=True)
class StageGrid:
    m: int
    soc_max: np.ndarray
    crate_avg: np.ndarray

    @property
    def n_stages(self):
        return self.m + 1


@dataclass(frozen=True)
class OptimizerConfig:
    m: int = 4
    kappa: float = 0.1
    epsilon: float = 1e-3
    big_m: float = 1e6
    u_phase_max: float = None
    u_phase_step: float = None
    i_cc_grid: tuple = None
    discharge_avg_crate: float = 0.3
    conservative_discharge: bool = False
    u_dis_phase: float = None
    lp_method: str = 'highs'

    def __post_init__(self):
        if self.m < 1:
            raise InvalidParameterError('The CV stage count m must be at least 1.')
        if not (self.kappa > 0 and self.epsilon > 0 and self.big_m > 0):
            raise InvalidParameterError('kappa, epsilon and big_m must be positive.')

    @property
    def discharge_crate(self):
        return CRATE_INTERCEPT if self.conservative_discharge else self.discharge_avg_crate

    def phase_voltage_max(self, n_active):
        return self.u_phase_max if self.u_phase_max is not None else n_active * CELL_VOLTAGE_STEP

    def discharge_phase_voltage(self, n_active):
        return self.u_dis_phase if self.u_dis_phase is not None else self.phase_voltage_max(n_active)

    def phase_voltage_step(self, curve):
        return self.u_phase_step if self.u_phase_step is not None else ocv(curve, 0.5)

    def currents(self, q_no):
        if self.i_cc_grid is not None:
            return sorted(float(current) for current in self.i_cc_grid)
        return list(q_no * np.geomspace(I_CC_GRID_MIN_CRATE, CRATE_INTERCEPT, I_CC_GRID_SIZE))


@dataclass
class ChargingSession:
    target_pack_soc: float
    t_total: float
    q_initial: np.ndarray = None
    soh_estimate: np.ndarray = None
    fast_charge: bool = False

    def __post_init__(self):
        if not 0 <= self.target_pack_soc <= 1:
            raise InvalidParameterError('target_pack_soc must lie in [0, 1].')
        if not self.t_total > 0:
            raise InvalidParameterError('t_total must be positive.')


@dataclass(frozen=True)
class ChargeTargets:
    q_initial: np.ndarray
    q_final_sum: float


@dataclass
class ChargePlan:
    q: np.ndarray
    u_phase: float
    i_cc: float
    stage_durations: np.ndarray
    objective_value: float
    grid: StageGrid
    stage_duties: list
    discharge_duties: DutyCyclePattern
    active: np.ndarray

    @property
    def total_charge(self):
        return float(self.q.sum())

    @property
    def duration_h(self):
        return float(self.stage_durations.sum())


@dataclass
class ExecutionResult:
    applied: np.ndarray
    events: list
    stalls: int = 0
    duration_h: float = 0.0


@dataclass
class LegResult:
    applied: np.ndarray
    events: list
    duration_h: float = 0.0
    crate_avg: float = 0.0
    depleted: bool = False
    stalled: bool = False
    residual_ah: float = 0.0


@dataclass
class _ActiveView:
    """Cells the optimizer may use, with the capacities implied by the SOH estimate."""
    index: np.ndarray
    q_initial: np.ndarray
    q_max: np.ndarray
    soh: np.ndarray
    q_no: float
    r0: float
    curve: OcvCurve
    soh_eol: float
    order: np.ndarray = field(init=False)

    def __post_init__(self):
        self.order = np.lexsort((np.arange(len(self.soh)), -self.soh))

    @classmethod
    def build(cls, pack, q_initial=None, soh_estimate=None):
        active = np.flatnonzero(pack.active)
        q_initial = pack.remaining if q_initial is None else np.asarray(q_initial, dtype=float)
        soh = pack.soh if soh_estimate is None else np.clip(np.asarray(soh_estimate, dtype=float), 0.0, 1.0)
        nominal = pack.nominal_capacity
        params = pack.cells[0].params
        return cls(
            index=active,
            q_initial=q_initial[active],
            q_max=np.maximum(soh[active] * nominal[active], q_initial[active]),
            soh=soh[active],
            q_no=params.nominal_capacity_ah,
            r0=params.internal_resistance_ohm,
            curve=OcvCurve(params.chemistry),
            soh_eol=pack.soh_eol,
        )

    @property
    def n(self):
        return len(self.index)


def build_stage_grid(i_cc, q_no, m):
    """
    Below the envelope value at full charge the CC stage never meets the envelope: the CV range
    collapses to zero width and every stage runs at the CC current.
    """
    if not i_cc > 0 or not q_no > 0 or m < 1:
        raise InvalidParameterError('Expected i_cc > 0, q_no > 0 and m >= 1.')
    crate = i_cc / q_no
    soc_cc = inverse_crate_envelope(crate)
    if soc_cc >= 1:
        logger.debug('A %.4f C constant current leaves no CV range', crate)
        return StageGrid(m, np.ones(m + 1), np.full(m + 1, crate))
    soc_max = np.concatenate([[soc_cc], soc_cc + (1 - soc_cc) * np.arange(1, m + 1) / m])
    soc_max[-1] = 1.0
    envelope = max_charge_crate(soc_max)
    crate_avg = np.concatenate([[crate], (envelope[:-1] + envelope[1:]) / 2])
    return StageGrid(m, soc_max, crate_avg)


def stage_terminal_voltage(grid, stage, q_initial_sum, q_final_sum, q_max_sum, r0, q_no, curve):
    if not q_max_sum > 0:
        raise InvalidParameterError('q_max_sum must be positive.')
    mid_soc = min(max((q_final_sum + q_initial_sum) / (2 * q_max_sum), 0.0), 1.0)
    return ocv(curve, mid_soc) + q_no * grid.crate_avg[stage] * r0


def build_weights(soh, grid, soh_eol, cfg):
    soh = np.asarray(soh, dtype=float)
    stress = 1 + cfg.kappa * grid.crate_avg
    margin = soh - soh_eol
    healthy = margin > cfg.epsilon
    inverse = np.where(healthy, 1.0 / np.where(healthy, margin, 1.0) ** 2, cfg.big_m)
    return np.outer(inverse, stress)


def _stage_duties(view, grid, u_phase, q_final_sum):
    q_initial_sum, q_max_sum = view.q_initial.sum(), view.q_max.sum()
    return [
        sinusoidal_duties(
            stage_terminal_voltage(grid, j, q_initial_sum, q_final_sum, q_max_sum, view.r0, view.q_no, view.curve),
            u_phase, view.n,
        )
        for j in range(grid.n_stages)
    ]


def _discharge_duties(view, q_final_sum, u_phase, cfg):
    mid_soc = min(max(q_final_sum / (2 * view.q_max.sum()), 0.0), 1.0)
    u_ter = ocv(view.curve, mid_soc) - view.q_no * cfg.discharge_crate * view.r0
    if not u_ter > 0:
        raise InvalidParameterError('The discharge terminal voltage is not positive.')
    return sinusoidal_duties(u_ter, cfg.discharge_phase_voltage(view.n), view.n)


class _Rows:
    def __init__(self):
        self.rows, self.cols, self.vals, self.rhs = [], [], [], []

    def add(self, entries, bound):
        row = len(self.rhs)
        for col, val in entries:
            self.rows.append(row)
            self.cols.append(col)
            self.vals.append(val)
        self.rhs.append(bound)

    def matrix(self, n_vars):
        return sparse.csr_matrix((self.vals, (self.rows, self.cols)), shape=(len(self.rhs), n_vars))


def _assemble(view, q_final_sum, grid, u_phase, cfg, t_total):
    n, n_stages = view.n, grid.n_stages
    n_q = n * n_stages
    block = n + 1
    n_vars = n_q + n_stages * (n - 1) * block

    def q(i, j):
        return i * n_stages + j

    def epigraph(j, k):
        return n_q + (j * (n - 1) + (k - 1)) * block

    duties = _stage_duties(view, grid, u_phase, q_final_sum)
    discharge = _discharge_duties(view, q_final_sum, u_phase, cfg)
    weights = build_weights(view.soh, grid, view.soh_eol, cfg)

    c = np.zeros(n_vars)
    c[:n_q] = weights.reshape(-1)
    lower, upper = np.zeros(n_vars), np.full(n_vars, np.inf)
    ub = _Rows()

    # charging-time limit
    time_entries = []
    for j, pattern in enumerate(duties):
        if pattern.total > 0:
            rate = 1.0 / (view.q_no * grid.crate_avg[j] * pattern.total)
            time_entries.extend((q(i, j), rate) for i in range(n))
        else:
            upper[[q(i, j) for i in range(n)]] = 0.0
    ub.add(time_entries, 0.0)
    time_row = len(ub.rhs) - 1

    # cumulative SOC caps
    for i in range(n):
        for k in range(n_stages):
            headroom = max(view.q_max[i] * grid.soc_max[k] - view.q_initial[i], 0.0)
            ub.add([(q(i, j), 1.0) for j in range(k + 1)], headroom)

    # stage achievability: sum of the k largest Q_{., j} via k t + sum s
    for j, pattern in enumerate(duties):
        shares = pattern.shares()
        for k in range(1, n):
            base = epigraph(j, k)
            lower[base] = -np.inf
            for i in range(n):
                ub.add([(q(i, j), 1.0), (base, -1.0), (base + 1 + i, -1.0)], 0.0)
            entries = [(base, float(k))] + [(base + 1 + i, 1.0) for i in range(n)]
            entries += [(q(i, j), -shares[k - 1]) for i in range(n)]
            ub.add(entries, 0.0)

    # final stored charge ordered by SOH
    order = view.order
    for higher, lower_cell in zip(order[:-1], order[1:]):
        entries = [(q(lower_cell, j), 1.0) for j in range(n_stages)]
        entries += [(q(higher, j), -1.0) for j in range(n_stages)]
        ub.add(entries, view.q_initial[higher] - view.q_initial[lower_cell])

    # full discharge of the final state, top-k taken along the SOH order
    discharge_shares = discharge.shares()
    prefix_initial = np.cumsum(view.q_initial[order])
    for k in range(1, n):
        entries = [(q(cell, j), 1.0) for cell in order[:k] for j in range(n_stages)]
        ub.add(entries, discharge_shares[k - 1] * q_final_sum - prefix_initial[k - 1])

    demand = q_final_sum - view.q_initial.sum()
    a_eq = sparse.csr_matrix((np.ones(n_q), (np.zeros(n_q, dtype=int), np.arange(n_q))), shape=(1, n_vars))
    b_ub = np.asarray(ub.rhs, dtype=float)
    b_ub[time_row] = t_total
    problem = LpProblem(c, ub.matrix(n_vars), b_ub, a_eq, [demand], lower, upper)
    return problem, duties, discharge, weights


def assemble_lp(pack, targets, grid, u_phase, cfg, t_total, soh_estimate=None):
    if not u_phase > 0:
        raise InvalidParameterError('u_phase must be positive.')
    view = _ActiveView.build(pack, targets.q_initial, soh_estimate)
    if targets.q_final_sum < view.q_initial.sum() - CHARGE_TOLERANCE:
        raise InvalidParameterError('q_final_sum is below the charge already stored.')
    return _assemble(view, targets.q_final_sum, grid, u_phase, cfg, t_total)[0]


def _average_ties(q, view):
    """Gives identical allocations to runs of cells tied in SOH estimate and initial charge."""
    order = view.order
    start = 0
    while start < len(order):
        end = start + 1
        while end < len(order) and (
            abs(view.soh[order[end]] - view.soh[order[start]]) <= TIE_TOLERANCE
            and abs(view.q_initial[order[end]] - view.q_initial[order[start]]) <= TIE_TOLERANCE
        ):
            end += 1
        if end - start > 1:
            q[order[start:end]] = q[order[start:end]].mean(axis=0)
        start = end
    return q


def _solve_at(view, i_cc, u_phase, q_final_sum, t_total, cfg, n_cells):
    grid = build_stage_grid(i_cc, view.q_no, cfg.m)
    problem, duties, discharge, weights = _assemble(view, q_final_sum, grid, u_phase, cfg, t_total)
    solution = solve_lp(problem, cfg.lp_method)
    if not solution.is_optimal:
        return None
    n_q = view.n * grid.n_stages
    q_active = _average_ties(np.maximum(solution.x[:n_q], 0.0).reshape(view.n, grid.n_stages), view)
    stage_rates = np.array([
        view.q_no * grid.crate_avg[j] * pattern.total for j, pattern in enumerate(duties)
    ])
    stage_totals = q_active.sum(axis=0)
    durations = np.divide(stage_totals, stage_rates, out=np.zeros_like(stage_totals), where=stage_rates > 0)
    q = np.zeros((n_cells, grid.n_stages))
    q[view.index] = q_active
    active = np.zeros(n_cells, dtype=bool)
    active[view.index] = True
    return ChargePlan(
        q=q, u_phase=float(u_phase), i_cc=float(i_cc), stage_durations=durations,
        objective_value=float((weights * q_active).sum()), grid=grid,
        stage_duties=duties, discharge_duties=discharge, active=active,
    )


def optimize_charge_plan(pack, session, cfg=None):
    """
    Lowers the phase voltage from its maximum until the LP is feasible at the largest CC
    current, then keeps the current with the lowest objective. Returns ``None`` when no
    phase voltage works.
    """
    cfg = cfg or OptimizerConfig()
    view = _ActiveView.build(pack, session.q_initial, session.soh_estimate)
    if view.n == 0:
        return None
    q_final_sum = session.target_pack_soc * view.q_max.sum()
    demand = q_final_sum - view.q_initial.sum()
    if demand > (view.q_max - view.q_initial).sum() + CHARGE_TOLERANCE:
        logger.debug('Target pack SOC %.3f is out of reach', session.target_pack_soc)
        return None
    currents = cfg.currents(view.q_no)
    u_phase, step = cfg.phase_voltage_max(view.n), cfg.phase_voltage_step(view.curve)
    if demand <= CHARGE_TOLERANCE:
        return _idle_plan(view, len(pack), currents[-1], u_phase, q_final_sum, cfg)

    best = None
    while u_phase > 0:
        grid = build_stage_grid(currents[-1], view.q_no, cfg.m)
        if all(pattern.total <= 0 for pattern in _stage_duties(view, grid, u_phase, q_final_sum)):
            break
        best = _solve_at(view, currents[-1], u_phase, q_final_sum, session.t_total, cfg, len(pack))
        if best is not None:
            break
        u_phase -= step
    if best is None:
        return None
    if not session.fast_charge:
        for i_cc in currents[:-1]:
            candidate = _solve_at(view, i_cc, best.u_phase, q_final_sum, session.t_total, cfg, len(pack))
            if candidate is not None and candidate.objective_value < best.objective_value:
                best = candidate
    logger.debug(
        'Plan at u_phase=%.2f V, i_cc=%.3f A, objective %.6g', best.u_phase, best.i_cc, best.objective_value,
    )
    return best


def _idle_plan(view, n_cells, i_cc, u_phase, q_final_sum, cfg):
    grid = build_stage_grid(i_cc, view.q_no, cfg.m)
    active = np.zeros(n_cells, dtype=bool)
    active[view.index] = True
    return ChargePlan(
        q=np.zeros((n_cells, grid.n_stages)), u_phase=float(u_phase), i_cc=float(i_cc),
        stage_durations=np.zeros(grid.n_stages), objective_value=0.0, grid=grid,
        stage_duties=_stage_duties(view, grid, u_phase, q_final_sum),
        discharge_duties=_discharge_duties(view, q_final_sum, u_phase, cfg), active=active,
    )


def _stage_events(pack, soc_start, crate, duration_h):
    soc_end = pack.soc
    return [
        AgingEvent(
            delta_soc=float(end - start), mean_soc=float((end + start) / 2), crate=float(crate),
            temperature_k=cell.params.temperature_active_k, duration_h=float(duration_h),
        )
        for cell, start, end in zip(pack.cells, soc_start, soc_end)
    ]


def execute_charge_plan(plan, pack, period_h=None, on_step=None):
    """
    Applies ``plan`` to ``pack`` stage by stage and returns the applied Ah with one list of
    per-cell aging events per stage. With ``period_h`` each stage is run period by period
    with Strategy 1; otherwise stage allocations are applied as a whole.
    """
    n = len(pack)
    bypassed = ~plan.active
    q_no = pack.cells[0].params.nominal_capacity_ah
    applied = np.zeros(n)
    events, stalls, total_duration = [], 0, 0.0
    carry = np.zeros(n)
    rotation = 0
    for j in range(plan.grid.n_stages):
        soc_start = pack.soc
        if period_h is None:
            applied += pack.apply_charge(plan.q[:, j])
            duration = float(plan.stage_durations[j])
        else:
            remaining = plan.q[:, j] + carry
            current = q_no * plan.grid.crate_avg[j]
            duties = plan.stage_duties[j]
            rate = current * duties.total
            planned = remaining.sum() / rate if rate > 0 else plan.stage_durations[j]
            budget = int(math.ceil(planned / period_h) * 1.25) + 10
            steps = 0
            while remaining.max(initial=0.0) > CHARGE_TOLERANCE and steps < budget:
                assignment = assign_strategy1(remaining, rotation, bypassed)
                deltas = np.minimum(step_period(assignment, duties, current, period_h, bypassed=bypassed),
                                    np.maximum(remaining, 0.0))
                moved = pack.apply_charge(deltas)
                remaining -= moved
                applied += moved
                remaining[pack.max_capacity - pack.remaining <= CHARGE_TOLERANCE] = 0.0
                rotation += 1
                if on_step is not None:
                    on_step(total_duration + (steps + 1) * period_h, pack)
                steps += 1
            carry = np.maximum(remaining, 0.0)
            if carry.max(initial=0.0) > CHARGE_TOLERANCE:
                stalls += 1
                logger.warning('Stage %d stalled with %.6g Ah undelivered', j, carry.sum())
            else:
                carry = np.zeros(n)
            duration = steps * period_h
        events.append(_stage_events(pack, soc_start, plan.grid.crate_avg[j], duration))
        total_duration += duration
    return ExecutionResult(applied, events, stalls, total_duration)


def validate_plan(plan, pack, session, cfg=None, tol=VALIDATION_TOLERANCE):
    """Re-checks every constraint family of ``plan`` against the pre-charge ``pack``."""
    cfg = cfg or OptimizerConfig()
    violations = []
    q = plan.q
    active = pack.soh > pack.soh_eol
    q_initial = pack.remaining if session.q_initial is None else np.asarray(session.q_initial, dtype=float)
    soh = pack.soh if session.soh_estimate is None else np.clip(np.asarray(session.soh_estimate, dtype=float), 0, 1)
    q_max = np.maximum(soh * pack.nominal_capacity, q_initial)
    q_no = pack.cells[0].params.nominal_capacity_ah
    params = pack.cells[0].params
    curve = OcvCurve(params.chemistry)
    n_active = int(active.sum())

    if q.min(initial=0.0) < -tol:
        violations.append('negative allocation')
    if np.abs(q[~active]).sum() > tol:
        violations.append('allocation to a bypassed cell')
    q_final_sum = session.target_pack_soc * q_max[active].sum()
    demand = q_final_sum - q_initial[active].sum()
    if abs(q.sum() - max(demand, 0.0)) > tol:
        violations.append(f'total added charge {q.sum():.9f} differs from demand {demand:.9f}')

    grid = build_stage_grid(plan.i_cc, q_no, plan.grid.m)
    charge_time = 0.0
    for j in range(grid.n_stages):
        u_ter = stage_terminal_voltage(
            grid, j, q_initial[active].sum(), q_final_sum, q_max[active].sum(),
            params.internal_resistance_ohm, q_no, curve,
        )
        duties = sinusoidal_duties(u_ter, plan.u_phase, n_active)
        stage_q = q[active, j]
        if stage_q.sum() > tol:
            if duties.total <= 0:
                violations.append(f'stage {j} charges with every duty at zero')
                continue
            charge_time += stage_q.sum() / (q_no * grid.crate_avg[j] * duties.total)
            if not is_achievable(stage_q, duties, tol):
                violations.append(f'stage {j} split is not achievable')
    if charge_time > session.t_total + tol:
        violations.append(f'charging time {charge_time:.6f} h exceeds {session.t_total:.6f} h')

    cumulative = q_initial[:, None] + np.cumsum(q, axis=1)
    caps = np.maximum(q_max[:, None] * grid.soc_max[None, :], q_initial[:, None])
    if np.any((cumulative - caps)[active] > tol):
        violations.append('stage SOC cap exceeded')

    q_final = q_initial + q.sum(axis=1)
    index = np.flatnonzero(active)
    ranked = index[np.lexsort((index, -soh[index]))]
    if np.any(np.diff(q_final[ranked]) > tol):
        violations.append('final stored charge is not ordered by SOH')

    mid_soc = min(max(q_final_sum / (2 * q_max[active].sum()), 0.0), 1.0)
    u_dis_ter = ocv(curve, mid_soc) - q_no * cfg.discharge_crate * params.internal_resistance_ohm
    u_dis_phase = cfg.discharge_phase_voltage(n_active)
    if not is_achievable(q_final[active], sinusoidal_duties(u_dis_ter, u_dis_phase, n_active), tol):
        violations.append('final state cannot be fully discharged')
    return violations


def _assign(balancing, pack, direction, rotation, bypassed):
    if balancing == Balancing.SOC:
        return assign_strategy3(pack.soc, direction, rotation, bypassed)
    if balancing == Balancing.SOH:
        return rank_levels(pack.soh, True, rotation, bypassed)
    if balancing == Balancing.EQUAL:
        return rank_levels(np.zeros(len(pack)), True, rotation, bypassed)
    return assign_strategy2(pack.remaining, direction, rotation, bypassed)


def _leg_setup(pack, u_phase):
    params = pack.cells[0].params
    active = pack.active
    n_active = int(active.sum())
    u_phase = u_phase if u_phase is not None else n_active * CELL_VOLTAGE_STEP
    return params, OcvCurve(params.chemistry), active, n_active, u_phase


def crate_for_duration(pack, target_pack_soc, duration_h, u_phase=None):
    """Line C-rate that would bring the pack to ``target_pack_soc`` in ``duration_h`` hours."""
    params, curve, active, n_active, u_phase = _leg_setup(pack, u_phase)
    if not n_active or not duration_h > 0:
        return CRATE_FLOOR
    demand = target_pack_soc * pack.max_capacity[active].sum() - pack.remaining[active].sum()
    duties = sinusoidal_duties(ocv(curve, pack_soc(pack)), u_phase, n_active)
    if demand <= 0 or duties.total <= 0:
        return CRATE_FLOOR
    crate = demand / (params.nominal_capacity_ah * duties.total * duration_h)
    return float(min(max(crate, CRATE_FLOOR), CRATE_INTERCEPT))


def charge_with_strategy(pack, target_pack_soc, *, balancing=Balancing.CAPACITY, period_h, crate=None,
                         modulation=Modulation.SINUSOIDAL, u_phase=None, on_step=None):
    """
    Greedy CCCV charge to ``target_pack_soc``: Strategy 2 for capacity balancing, Strategy 3 for
    SOC balancing. The line current follows ``crate`` under the C-rate envelope of the fullest
    cell still taking charge. DC modulation runs every level fully on but the last.
    """
    params, curve, active, n_active, u_phase = _leg_setup(pack, u_phase)
    n = len(pack)
    applied = np.zeros(n)
    soc_start = pack.soc
    bypassed = ~active
    if not n_active:
        return LegResult(applied, _stage_events(pack, soc_start, 0.0, 0.0))
    demand = target_pack_soc * pack.max_capacity[active].sum() - pack.remaining[active].sum()
    elapsed, crate_time, rotation, stalled = 0.0, 0.0, 0, False
    max_steps = int(math.ceil(MAX_LEG_HOURS / period_h))
    while demand > CHARGE_TOLERANCE:
        headroom = pack.max_capacity - pack.remaining
        open_cells = active & (headroom > CHARGE_TOLERANCE)
        if not open_cells.any() or rotation >= max_steps:
            stalled = True
            break
        crate_now = max_charge_crate(pack.soc[open_cells].max())
        if crate is not None:
            crate_now = min(crate_now, crate)
        current = params.nominal_capacity_ah * crate_now
        u_ter = ocv(curve, pack_soc(pack)) + current * params.internal_resistance_ohm
        if modulation == Modulation.DC:
            duties = dc_duties(u_ter, (n_active - 0.5) * u_ter, n_active)
        else:
            duties = sinusoidal_duties(u_ter, u_phase, n_active)
        assignment = _assign(balancing, pack, Direction.CHARGE, rotation, bypassed)
        deltas = np.minimum(step_period(assignment, duties, current, period_h, bypassed=bypassed), headroom)
        total = deltas.sum()
        if total <= 0:
            stalled = True
            break
        if total > demand:
            deltas *= demand / total
        moved = pack.apply_charge(deltas)
        applied += moved
        demand -= moved.sum()
        elapsed += period_h
        crate_time += crate_now * period_h
        rotation += 1
        if on_step is not None:
            on_step(elapsed, pack)
    if stalled:
        logger.warning('Charging leg stalled %.6g Ah short of its target', max(demand, 0.0))
    crate_avg = crate_time / elapsed if elapsed > 0 else 0.0
    return LegResult(
        applied, _stage_events(pack, soc_start, crate_avg, elapsed), elapsed, crate_avg, stalled=stalled,
    )


def discharge_with_strategy(pack, *, balancing=Balancing.CAPACITY, period_h, crate, target_pack_soc=None,
                            u_phase=None, duties=None, on_step=None):
    """
    Greedy discharge down to ``target_pack_soc``, or to depletion when it is ``None``. ``crate``
    is a line C-rate or a per-period profile that repeats. A fixed ``duties`` pattern, such as
    the discharge pattern a charge plan was checked against, replaces the one ``u_phase`` and
    the terminal voltage give. The pack is depleted as soon as a cell on a level with non-zero
    duty cannot supply its share of a period.
    """
    params, curve, active, n_active, u_phase = _leg_setup(pack, u_phase)
    n = len(pack)
    applied = np.zeros(n)
    soc_start = pack.soc
    bypassed = ~active
    profile = np.atleast_1d(np.asarray(crate, dtype=float))
    if np.any(profile < 0):
        raise InvalidParameterError('Discharge C-rates must be non-negative.')
    if duties is not None and len(duties.duties) != n_active:
        raise InvalidParameterError(f'The duty pattern has {len(duties.duties)} levels for {n_active} active cells.')
    if not n_active:
        return LegResult(applied, _stage_events(pack, soc_start, 0.0, 0.0), depleted=True)
    capacity = pack.max_capacity[active].sum()
    elapsed, crate_time, step, depleted, stalled = 0.0, 0.0, 0, False, False
    max_steps = int(math.ceil(MAX_LEG_HOURS / period_h))
    while True:
        removable = np.inf
        if target_pack_soc is not None:
            removable = pack.remaining[active].sum() - target_pack_soc * capacity
            if removable <= CHARGE_TOLERANCE:
                break
        if step >= max_steps:
            stalled = True
            break
        crate_now = profile[step % len(profile)]
        current = params.nominal_capacity_ah * crate_now
        pattern = duties
        if pattern is None:
            u_ter = max(ocv(curve, pack_soc(pack)) - current * params.internal_resistance_ohm, 1e-3)
            pattern = sinusoidal_duties(u_ter, u_phase, n_active)
        assignment = _assign(balancing, pack, Direction.DISCHARGE, step, bypassed)
        amounts = -step_period(assignment, pattern, current, period_h, Direction.DISCHARGE, bypassed)
        if np.any((amounts > 0) & (amounts > pack.remaining + CHARGE_TOLERANCE)):
            depleted = True
            break
        total = amounts.sum()
        if total > removable:
            amounts *= removable / total
        moved = pack.apply_charge(-amounts)
        applied += moved
        elapsed += period_h
        crate_time += crate_now * period_h
        step += 1
        if on_step is not None:
            on_step(elapsed, pack)
    if stalled:
        logger.warning('Discharge leg hit the %.0f h limit', MAX_LEG_HOURS)
    crate_avg = crate_time / elapsed if elapsed > 0 else 0.0
    return LegResult(
        applied, _stage_events(pack, soc_start, crate_avg, elapsed), elapsed, crate_avg,
        depleted=depleted, stalled=stalled, residual_ah=float(pack.remaining[active].sum()),
    )
