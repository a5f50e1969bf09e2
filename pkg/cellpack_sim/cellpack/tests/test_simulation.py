import numpy as np
from django.test import SimpleTestCase

from ..choices import Chemistry, Strategy
from ..exceptions import InvalidParameterError, RuntimeGuardError
from ..records import ChargingRecord
from ..simulation import (
    SENSITIVITY_ROWS, ScenarioConfig, SimResult, _build_scenario_pack, _Streams, improvement, run_drive_cycle,
    run_longterm, run_two_cell_comparison, synthetic_drive_profile,
)


def small_scenario(**overrides):
    return ScenarioConfig(n_cells=4, n_records=8, **overrides)


class TestScenarioConfig(SimpleTestCase):

    def test_defaults(self):
        scenario = ScenarioConfig()
        self.assertEqual((scenario.n_cells, scenario.q_no, scenario.soh_eol), (20, 2.3, 0.70))
        self.assertEqual(scenario.strategy, Strategy.SOC_SOH_AWARE)
        self.assertTrue(scenario.proposed)
        self.assertFalse(scenario.with_overrides(strategy=Strategy.SOC_BALANCE).proposed)
        self.assertEqual(scenario.as_dict()['chemistry'], Chemistry.LFP)

    def test_validation(self):
        for overrides in ({'chemistry': 'nmc'}, {'strategy': 'fastest'}, {'n_cells': 1}, {'soh_eol': 1.0},
                          {'sigma_gamma': -0.1}, {'discharge_crate': 0.0}):
            with self.assertRaises(InvalidParameterError):
                ScenarioConfig(**overrides)

    def test_sensitivity_rows_are_scenarios(self):
        for row, overrides in SENSITIVITY_ROWS.items():
            self.assertIsInstance(ScenarioConfig().with_overrides(**overrides), ScenarioConfig, row)


class TestLongterm(SimpleTestCase):
    _options = {'period_s': 600.0}

    def test_reaches_eol(self):
        scenario = small_scenario()
        result = run_longterm(scenario, **self._options)
        self.assertGreater(result.lifetime_days, 0.0)
        self.assertGreater(result.lifetime_efc, 0.0)
        self.assertGreater(result.sessions, 0)
        self.assertTrue(np.all(np.diff(result.soh_trajectories, axis=0) <= 0.0))
        self.assertTrue(np.all(np.diff(result.pack_soh_trajectory) <= 1e-12))
        self.assertLessEqual(result.pack_soh_trajectory[-1], scenario.soh_eol)
        self.assertAlmostEqual(result.times_h[-1] / 24.0, result.lifetime_days)
        self.assertAlmostEqual(
            result.final_soh_spread, result.soh_trajectories[-1].max() - result.soh_trajectories[-1].min(),
        )
        frame = result.trajectory_frame()
        self.assertEqual(list(frame.columns[:3]), ['time_h', 'pack_soh', 'soh_0'])

    def test_deterministic(self):
        scenario = small_scenario(strategy=Strategy.SOC_BALANCE)
        first, second = run_longterm(scenario, **self._options), run_longterm(scenario, **self._options)
        self.assertEqual(first.lifetime_days, second.lifetime_days)
        np.testing.assert_array_equal(first.soh_trajectories, second.soh_trajectories)

    def test_strategies_share_random_streams(self):
        proposed = _build_scenario_pack(small_scenario(), _Streams.spawn(9), 0.3)
        baseline = _build_scenario_pack(small_scenario(strategy=Strategy.SOC_BALANCE), _Streams.spawn(9), 0.3)
        self.assertEqual(
            [cell.params for cell in proposed.cells], [cell.params for cell in baseline.cells],
        )

    def test_samples_are_capped(self):
        result = run_longterm(small_scenario(), samples=3, **self._options)
        self.assertLessEqual(len(result.times_h), 3)
        self.assertEqual(result.soh_trajectories.shape, (len(result.times_h), 4))

    def test_runtime_guard(self):
        with self.assertRaises(RuntimeGuardError):
            run_longterm(small_scenario(), guard_years=1e-6, **self._options)

    def test_external_records(self):
        records = [
            ChargingRecord(0.3, 0.8, 5.0, 'ac', 400.0),
            ChargingRecord(0.2, 0.7, 0.5, 'dc_fast', 300.0),
        ]
        result = run_longterm(small_scenario(), records=records, **self._options)
        self.assertGreater(result.sessions, 2)
        with self.assertRaises(InvalidParameterError):
            run_longterm(small_scenario(), records=[], **self._options)

    def test_sessions_follow_record_clock(self):
        records = [
            ChargingRecord(0.3, 0.8, 5.0, 'ac', 400.0),
            ChargingRecord(0.3, 0.75, 6.0, 'ac', 300.0),
        ]
        result = run_longterm(small_scenario(), records=records, **self._options)
        expected = sum(
            records[session % 2].duration_h + records[session % 2].gap_to_next_h for session in range(result.sessions)
        )
        self.assertAlmostEqual(result.lifetime_days * 24.0, expected, delta=1e-6 * expected)

    def test_improvement(self):
        def stub(days):
            return SimResult(ScenarioConfig(), days, 1.0, np.zeros(1), np.ones((1, 2)), np.ones(1))

        self.assertAlmostEqual(improvement(stub(120.0), stub(100.0)), 0.2)
        with self.assertRaises(InvalidParameterError):
            improvement(stub(1.0), stub(0.0))


class TestDriveCycle(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.results = {window: run_drive_cycle(window) for window in (1.0, 1.5)}

    def test_trajectory(self):
        trajectory = self.results[1.0].trajectory
        self.assertEqual(list(trajectory.columns[:3]), ['time_s', 'phase', 'soc_0'])
        self.assertEqual(set(trajectory['phase']), {'charge', 'rest', 'discharge'})
        self.assertTrue(np.all(np.diff(trajectory['time_s']) > 0))
        socs = trajectory[[f'soc_{i}' for i in range(10)]].to_numpy()
        self.assertTrue(np.all((socs >= 0.0) & (socs <= 1.0)))

    def test_charge_follows_health(self):
        for window, result in self.results.items():
            self.assertTrue(result.optimized, window)
            self.assertTrue(np.all(np.diff(result.end_of_charge_ah) <= 1e-6), window)
            self.assertAlmostEqual(result.end_of_charge_ah.sum(), 0.7 * result.pack_capacity_ah, places=4)
            self.assertLessEqual(result.charge_duration_h, 1.02 * window)

    def test_full_discharge(self):
        for window, result in self.results.items():
            self.assertLess(result.stranded_ah, 0.01 * result.pack_capacity_ah, window)
            self.assertIsNotNone(result.balanced_at_fraction, window)
            self.assertLessEqual(result.balanced_at_fraction, 1.0)

    def test_remaining_spread_never_grows(self):
        for window, result in self.results.items():
            trajectory = result.trajectory
            ah = trajectory[trajectory['phase'] == 'discharge'][[f'ah_{i}' for i in range(10)]].to_numpy()
            spread = ah.max(axis=1) - ah.min(axis=1)
            self.assertTrue(np.all(np.diff(spread) <= 1e-7), window)
            self.assertLess(spread[-1], 0.01 * 2.3, window)

    def test_longer_window_spreads_soc(self):
        self.assertGreater(self.results[1.5].end_of_charge_variance, self.results[1.0].end_of_charge_variance)

    def test_synthetic_profile(self):
        profile = synthetic_drive_profile()
        self.assertEqual(len(profile), 1800)
        self.assertGreaterEqual(profile.min(), 0.0)
        np.testing.assert_array_equal(profile, synthetic_drive_profile())


class TestTwoCell(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.table = run_two_cell_comparison()

    def test_controls(self):
        self.assertEqual(list(self.table.index), ['equal', 'capacity', 'soc', 'soh', 'soc_soh_aware'])

    def test_capacity_balancing_extracts_everything(self):
        stranded = self.table['stranded_ah']
        self.assertLess(stranded['capacity'], 0.01)
        self.assertLess(stranded['soc_soh_aware'], 0.01)
        self.assertGreater(stranded['equal'], stranded['capacity'])
        self.assertGreater(stranded['soh'], stranded['soc_soh_aware'])

    def test_healthy_cell_takes_more_charge(self):
        share = self.table['healthy_charge_share']
        self.assertGreater(share['soc_soh_aware'], 0.6)
        self.assertGreater(share['soh'], share['capacity'])
        self.assertAlmostEqual(share['equal'], 0.5, places=2)
