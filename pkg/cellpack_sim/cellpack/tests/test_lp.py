import io
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from ..choices import LpStatus
from ..exceptions import InvalidParameterError, LpNumericalError
from ..lp import LpProblem, LpSolution, dump_problem, solve_lp

METHODS = ('simplex', 'highs')


def top_k_problem(values, k):
    """min k t + sum(s) subject to s_i >= v_i - t, s_i >= 0, t free."""
    n = len(values)
    c = np.concatenate([[float(k)], np.ones(n)])
    a_ub = np.hstack([-np.ones((n, 1)), -np.eye(n)])
    lower = np.concatenate([[-np.inf], np.zeros(n)])
    return LpProblem(c, a_ub, -np.asarray(values, dtype=float), lower=lower)


class TestSolveLp(SimpleTestCase):
    _c, _a_ub, _b_ub = [-1.0, -1.0], [[1.0, 2.0], [3.0, 1.0]], [4.0, 6.0]

    def test_small_problem(self):
        for method in METHODS:
            solution = solve_lp(LpProblem(self._c, self._a_ub, self._b_ub), method)
            self.assertTrue(solution.is_optimal, method)
            np.testing.assert_allclose(solution.x, [1.6, 1.2], atol=1e-9)
            self.assertAlmostEqual(solution.objective_value, -2.8)
            self.assertEqual(solution.method, method)

    def test_infeasible(self):
        problem = LpProblem([1.0], [[1.0]], [-1.0])
        for method in METHODS:
            self.assertEqual(solve_lp(problem, method).status, LpStatus.INFEASIBLE, method)

    def test_unbounded(self):
        problem = LpProblem([-1.0, 0.0], [[0.0, 1.0]], [1.0])
        solution = solve_lp(problem, 'simplex')
        self.assertEqual(solution.status, LpStatus.UNBOUNDED)
        self.assertIsNone(solution.x)

    def test_free_and_upper_bounded_variables(self):
        problem = LpProblem([1.0, 0.0], a_eq=[[1.0, 1.0]], b_eq=[1.0], lower=[-np.inf, 0.0], upper=[np.inf, 3.0])
        for method in METHODS:
            solution = solve_lp(problem, method)
            np.testing.assert_allclose(solution.x, [-2.0, 3.0], atol=1e-9)

    def test_redundant_equalities(self):
        problem = LpProblem([1.0, 0.0], a_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[2.0, 4.0])
        solution = solve_lp(problem, 'simplex')
        self.assertTrue(solution.is_optimal)
        np.testing.assert_allclose(solution.x, [0.0, 2.0], atol=1e-9)

    def test_negative_lower_bound(self):
        problem = LpProblem([1.0], [[-1.0]], [5.0], lower=[-10.0], upper=[10.0])
        for method in METHODS:
            self.assertAlmostEqual(solve_lp(problem, method).x[0], -5.0)

    def test_unknown_method(self):
        with self.assertRaises(InvalidParameterError):
            solve_lp(LpProblem(self._c), 'interior')

    def test_residual_is_checked(self):
        problem = LpProblem(self._c, self._a_ub, self._b_ub)
        bogus = LpSolution(LpStatus.OPTIMAL, np.array([10.0, 10.0]), -20.0, method='highs')
        with mock.patch('cellpack.lp._solve_highs', return_value=bogus):
            with self.assertRaises(LpNumericalError):
                solve_lp(problem, 'highs')

    def test_malformed_problem(self):
        with self.assertRaises(InvalidParameterError):
            LpProblem([1.0, 1.0], [[1.0]], [1.0])
        with self.assertRaises(InvalidParameterError):
            LpProblem([np.nan])
        with self.assertRaises(InvalidParameterError):
            LpProblem([1.0], lower=[np.inf])


class TestTopKEpigraph(SimpleTestCase):
    _vectors, _simplex_vectors = 1000, 100

    def test_matches_sorting(self):
        rng = np.random.default_rng(3)
        for index in range(self._vectors):
            values = rng.normal(0.0, 1.0, int(rng.integers(2, 7)))
            k = int(rng.integers(1, len(values) + 1))
            method = 'simplex' if index < self._simplex_vectors else 'highs'
            solution = solve_lp(top_k_problem(values, k), method)
            self.assertAlmostEqual(solution.objective_value, np.sort(values)[::-1][:k].sum(), places=9)


class TestDumpProblem(SimpleTestCase):

    def test_sections(self):
        stream = io.StringIO()
        dump_problem(LpProblem([1.0, 2.0], [[1.0, 1.0]], [3.0], [[1.0, -1.0]], [0.0]), stream)
        lines = stream.getvalue().splitlines()
        self.assertEqual(lines[0], '# lp n_vars=2 n_ub=1 n_eq=1')
        self.assertEqual(lines[1], 'OBJECTIVE 1 2')
        self.assertEqual(lines[2], '1 2')
        self.assertEqual(lines[3], 'UB 1 2')
        self.assertEqual(lines[4], '1 1 | 3')
        self.assertEqual(lines[5], 'EQ 1 2')
        self.assertEqual(lines[6], '1 -1 | 0')
        self.assertEqual(lines[7], 'BOUNDS 2 2')
        self.assertEqual(lines[8], '0 inf')
