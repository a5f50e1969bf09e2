"""
Linear programs of the form::

    min c @ x   s.t.   A_ub @ x <= b_ub,   A_eq @ x == b_eq,   lower <= x <= upper

``solve_lp`` runs either the built-in two-phase revised simplex (Bland's rule) or
SciPy's HiGHS dual simplex. Both return vertex solutions and both are checked against
the original constraints before an optimal status is reported.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .choices import LpStatus
from .exceptions import InvalidParameterError, LpNumericalError

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-9
FEASIBILITY_TOLERANCE = 1e-6
HIGHS_STATUSES = {0: LpStatus.OPTIMAL, 2: LpStatus.INFEASIBLE, 3: LpStatus.UNBOUNDED}
METHODS = ('simplex', 'highs')


def _as_matrix(matrix, n_vars):
    if matrix is None:
        return sparse.csr_matrix((0, n_vars))
    return sparse.csr_matrix(matrix, dtype=float)


def _as_vector(vector, size, fill):
    if vector is None:
        return np.full(size, fill, dtype=float)
    return np.asarray(vector, dtype=float).reshape(-1)


@dataclass
class LpProblem:
    c: np.ndarray
    a_ub: sparse.csr_matrix = None
    b_ub: np.ndarray = None
    a_eq: sparse.csr_matrix = None
    b_eq: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.n_vars
        self.a_ub, self.a_eq = _as_matrix(self.a_ub, n), _as_matrix(self.a_eq, n)
        self.b_ub = _as_vector(self.b_ub, self.a_ub.shape[0], 0.0)
        self.b_eq = _as_vector(self.b_eq, self.a_eq.shape[0], 0.0)
        self.lower, self.upper = _as_vector(self.lower, n, 0.0), _as_vector(self.upper, n, np.inf)
        if self.a_ub.shape != (len(self.b_ub), n) or self.a_eq.shape != (len(self.b_eq), n):
            raise InvalidParameterError('LP constraint dimensions are inconsistent.')
        if len(self.lower) != n or len(self.upper) != n:
            raise InvalidParameterError('LP bound dimensions are inconsistent.')
        finite = [self.c, self.a_ub.data, self.a_eq.data, self.b_ub, self.b_eq]
        if not all(np.all(np.isfinite(part)) for part in finite):
            raise InvalidParameterError('LP coefficients must be finite.')
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)) or np.any(self.lower == np.inf):
            raise InvalidParameterError('LP bounds are malformed.')

    @property
    def n_vars(self):
        return len(self.c)

    def residual(self, x):
        """Largest violation of any constraint or bound at ``x``."""
        violations = [0.0]
        if self.a_ub.shape[0]:
            violations.append(float(np.max(self.a_ub @ x - self.b_ub)))
        if self.a_eq.shape[0]:
            violations.append(float(np.max(np.abs(self.a_eq @ x - self.b_eq))))
        violations.append(float(np.max(self.lower - x, initial=0.0)))
        violations.append(float(np.max(x - self.upper, initial=0.0)))
        return max(violations)


@dataclass
class LpSolution:
    status: str
    x: np.ndarray = None
    objective_value: float = None
    iterations: int = 0
    method: str = field(default='simplex')

    @property
    def is_optimal(self):
        return self.status == LpStatus.OPTIMAL


def solve_lp(problem, method='simplex'):
    if method not in METHODS:
        raise InvalidParameterError(f'Unknown LP method "{method}".')
    solution = _solve_highs(problem) if method == 'highs' else _solve_simplex(problem)
    if solution.is_optimal:
        residual = problem.residual(solution.x)
        if residual > FEASIBILITY_TOLERANCE:
            raise LpNumericalError(f'{method} returned a point violating its constraints by {residual:.3g}.')
    else:
        logger.debug('LP with %d variables is %s', problem.n_vars, solution.status)
    return solution


def _solve_highs(problem):
    bounds = [
        (None if np.isinf(low) else low, None if np.isinf(high) else high)
        for low, high in zip(problem.lower, problem.upper)
    ]
    result = linprog(
        problem.c,
        A_ub=problem.a_ub if problem.a_ub.shape[0] else None,
        b_ub=problem.b_ub if problem.a_ub.shape[0] else None,
        A_eq=problem.a_eq if problem.a_eq.shape[0] else None,
        b_eq=problem.b_eq if problem.a_eq.shape[0] else None,
        bounds=bounds,
        method='highs-ds',
        options={'primal_feasibility_tolerance': 1e-9, 'dual_feasibility_tolerance': 1e-9},
    )
    status = HIGHS_STATUSES.get(result.status)
    if status is None and 'infeasible' in result.message.lower():
        # presolve may only prove "unbounded or infeasible"; the charging LPs are bounded
        status = LpStatus.INFEASIBLE
    if status is None:
        raise LpNumericalError(f'HiGHS stopped with status {result.status}: {result.message}')
    if status != LpStatus.OPTIMAL:
        return LpSolution(status, iterations=int(getattr(result, 'nit', 0)), method='highs')
    return LpSolution(status, np.asarray(result.x), float(result.fun), int(result.nit), method='highs')


class _StandardForm:
    """
    Rewrites a problem as ``min c @ y, A @ y == b, y >= 0, b >= 0`` with
    ``x = offset + transform @ y``. Columns are ordered (structural, slack).
    """

    def __init__(self, problem):
        n = problem.n_vars
        lower, upper = problem.lower, problem.upper
        columns, offset = [], np.zeros(n)
        bound_rows = []
        for j in range(n):
            unit = np.zeros(n)
            unit[j] = 1.0
            if np.isfinite(lower[j]):
                offset[j] = lower[j]
                columns.append(unit)
                if np.isfinite(upper[j]):
                    bound_rows.append((len(columns) - 1, upper[j] - lower[j]))
            elif np.isfinite(upper[j]):
                offset[j] = upper[j]
                columns.append(-unit)
            else:
                columns.extend([unit, -unit])
        transform = np.column_stack(columns) if columns else np.zeros((n, 0))
        n_struct = transform.shape[1]

        a_ub = problem.a_ub.toarray() @ transform
        b_ub = problem.b_ub - problem.a_ub @ offset
        for column, width in bound_rows:
            row = np.zeros(n_struct)
            row[column] = 1.0
            a_ub = np.vstack([a_ub, row])
            b_ub = np.append(b_ub, width)
        a_eq = problem.a_eq.toarray() @ transform
        b_eq = problem.b_eq - problem.a_eq @ offset

        m_ub, m_eq = len(b_ub), len(b_eq)
        self.a = np.block([
            [a_ub, np.eye(m_ub)],
            [a_eq, np.zeros((m_eq, m_ub))],
        ]) if m_ub + m_eq else np.zeros((0, n_struct))
        self.b = np.concatenate([b_ub, b_eq])
        self.c = np.concatenate([transform.T @ problem.c, np.zeros(m_ub)])
        flip = self.b < 0
        self.a[flip] *= -1
        self.b[flip] *= -1
        # a slack can start basic only where its row kept the + sign
        self.slack_basis = {row: n_struct + row for row in range(m_ub) if not flip[row]}
        self.offset, self.transform, self.n_struct = offset, transform, n_struct
        self.constant = float(problem.c @ offset)

    def recover(self, y):
        return self.offset + self.transform @ y[:self.n_struct]


def _iterate(a, b, c, basis, allowed, max_iter):
    """Revised simplex from a feasible basis. Returns (status, basis, iterations)."""
    m = a.shape[0]
    for iteration in range(max_iter):
        if m == 0:
            x_b = np.zeros(0)
            duals = np.zeros(0)
        else:
            basis_matrix = a[:, basis]
            x_b = np.linalg.solve(basis_matrix, b)
            duals = np.linalg.solve(basis_matrix.T, c[basis])
        reduced = c - a.T @ duals
        in_basis = np.zeros(a.shape[1], dtype=bool)
        in_basis[basis] = True
        entering = np.flatnonzero((reduced < -PIVOT_TOLERANCE) & allowed & ~in_basis)
        if not len(entering):
            return LpStatus.OPTIMAL, basis, iteration
        q = entering[0]
        direction = np.linalg.solve(a[:, basis], a[:, q]) if m else np.zeros(0)
        positive = direction > PIVOT_TOLERANCE
        if not positive.any():
            return LpStatus.UNBOUNDED, basis, iteration
        ratios = np.full(m, np.inf)
        ratios[positive] = np.maximum(x_b[positive], 0.0) / direction[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + PIVOT_TOLERANCE)
        leaving = ties[np.argmin(np.asarray(basis)[ties])]
        basis[leaving] = q
    raise LpNumericalError(f'Simplex did not converge within {max_iter} iterations.')


def _solve_simplex(problem):
    form = _StandardForm(problem)
    a, b = form.a, form.b
    m, n_cols = a.shape
    max_iter = 50 * (m + n_cols + 1)

    artificial_rows = [row for row in range(m) if row not in form.slack_basis]
    a1 = np.hstack([a, np.eye(m)[:, artificial_rows]]) if artificial_rows else a.copy()
    c1 = np.concatenate([np.zeros(n_cols), np.ones(len(artificial_rows))])
    basis = [
        form.slack_basis[row] if row in form.slack_basis else n_cols + artificial_rows.index(row)
        for row in range(m)
    ]
    allowed = np.ones(a1.shape[1], dtype=bool)
    status, basis, it1 = _iterate(a1, b, c1, basis, allowed, max_iter)
    x_b = np.linalg.solve(a1[:, basis], b) if m else np.zeros(0)
    if c1[basis] @ x_b > FEASIBILITY_TOLERANCE:
        return LpSolution(LpStatus.INFEASIBLE, iterations=it1)

    rows = list(range(m))
    position = 0
    while position < len(basis):
        if basis[position] < n_cols:
            position += 1
            continue
        tableau_row = np.linalg.solve(a1[np.ix_(rows, basis)], np.eye(len(rows)))[position] @ a1[rows][:, :n_cols]
        candidates = [j for j in np.flatnonzero(np.abs(tableau_row) > PIVOT_TOLERANCE) if j not in basis]
        if candidates:
            basis[position] = candidates[0]
            position += 1
        else:
            # the artificial's own row is a combination of the others
            rows.remove(artificial_rows[basis[position] - n_cols])
            del basis[position]

    a2, b2 = a[rows], b[rows]
    status, basis, it2 = _iterate(a2, b2, form.c, basis, np.ones(n_cols, dtype=bool), max_iter)
    if status != LpStatus.OPTIMAL:
        return LpSolution(status, iterations=it1 + it2)
    y = np.zeros(n_cols)
    if len(rows):
        y[basis] = np.maximum(np.linalg.solve(a2[:, basis], b2), 0.0)
    x = form.recover(y)
    return LpSolution(status, x, float(problem.c @ x), it1 + it2)


def dump_problem(problem, stream):
    """Writes ``problem`` as a plain-text matrix dump, one section per block."""
    def write_block(title, matrix, rhs=None):
        stream.write(f'{title} {matrix.shape[0]} {matrix.shape[1]}\n')
        for index, row in enumerate(matrix):
            values = ' '.join(f'{value:.17g}' for value in row)
            if rhs is not None:
                values = f'{values} | {rhs[index]:.17g}'
            stream.write(values + '\n')

    stream.write(f'# lp n_vars={problem.n_vars} n_ub={len(problem.b_ub)} n_eq={len(problem.b_eq)}\n')
    write_block('OBJECTIVE', problem.c.reshape(1, -1))
    write_block('UB', problem.a_ub.toarray(), problem.b_ub)
    write_block('EQ', problem.a_eq.toarray(), problem.b_eq)
    write_block('BOUNDS', np.column_stack([problem.lower, problem.upper]))
