import math

import numpy as np
from django.test import SimpleTestCase

from ..aging import (
    AgingAccumulator, AgingEvent, AgingParams, LfpAgingParams, LmoAgingParams, apply_event, apply_events, augment,
    lfp_terms, lmo_cycle_damage, lmo_prefactor, lmo_stress, sample_gammas,
)
from ..choices import Chemistry
from ..exceptions import AgingDomainError, InvalidParameterError
from ..pack import Cell, CellParams, build_pack


def lmo_cell(gamma=1.0):
    return Cell.fresh(CellParams(chemistry=Chemistry.LMO, gamma=gamma), soh=1.0, soc=0.5)


class TestLfp(SimpleTestCase):
    _params, _temperature, _soc = LfpAgingParams(), 298.15, 0.5

    def test_single_event_oracle(self):
        p, T = self._params, self._temperature
        event = AgingEvent(delta_soc=0.5, mean_soc=self._soc, crate=0.5, temperature_k=T, duration_h=1.0)
        cyclic, calendar = lfp_terms(event, AgingAccumulator(), p)
        expected_cyclic = (
            (2.0916e-8 * T ** 2 - 1.2179e-5 * T + 0.0018) * math.exp((-1.7082e-6 * T + 0.0556) * 0.5) * 0.5 / 4.6
        )
        expected_calendar = 5.9808e6 / 2.3 * math.exp(0.6898 * 0.5 - 6464.7 / T)
        self.assertAlmostEqual(cyclic / expected_cyclic, 1.0, places=12)
        self.assertAlmostEqual(calendar / expected_calendar, 1.0, places=12)
        self.assertTrue(1.3e-3 < calendar < 1.5e-3)

    def test_calendar_telescopes(self):
        rng = np.random.default_rng(5)
        durations = rng.uniform(0.1, 200.0, 400)
        acc, total = AgingAccumulator(), 0.0
        for duration in durations:
            _, calendar = lfp_terms(AgingEvent.rest(self._soc, self._temperature, duration), acc, self._params)
            total += calendar
            acc.calendar_time_h += duration
        closed_form = (
            self._params.f / 2.3 * math.exp(self._params.g * self._soc + self._params.h / self._temperature)
            * math.sqrt(durations.sum())
        )
        self.assertAlmostEqual(total / closed_form, 1.0, places=12)

    def test_apply_event_ages_cell(self):
        cell = Cell.fresh(soh=1.0, soc=0.5)
        apply_event(cell, AgingEvent.rest(0.5, 298.15, 1000.0), AgingParams())
        self.assertLess(cell.state.soh, 1.0)
        self.assertEqual(cell.state.aging.calendar_time_h, 1000.0)
        self.assertEqual(cell.state.aging.soh, cell.state.soh)

    def test_multipliers_scale_their_part(self):
        event = AgingEvent.rest(0.5, 298.15, 100.0)
        single, double = Cell.fresh(soc=0.5), Cell.fresh(soc=0.5)
        apply_event(single, event, AgingParams())
        apply_event(double, event, AgingParams().scaled(calendar=2.0))
        self.assertAlmostEqual(1 - double.state.soh, 2 * (1 - single.state.soh))
        cyclic_only = Cell.fresh(soc=0.5)
        apply_event(cyclic_only, event, AgingParams().scaled(cyclic=5.0))
        self.assertAlmostEqual(cyclic_only.state.soh, single.state.soh)


class TestLmo(SimpleTestCase):
    _params = LmoAgingParams()

    def test_fresh_prefactor(self):
        self.assertAlmostEqual(lmo_prefactor(AgingAccumulator(), self._params), 7.9)

    def test_reference_stress(self):
        self.assertAlmostEqual(lmo_stress(0.5, 298.15, self._params), 1.0)
        self.assertGreater(lmo_stress(0.9, 318.15, self._params), 1.0)

    def test_cycle_damage_domain(self):
        self.assertAlmostEqual(lmo_cycle_damage(1.0, 0.5, 298.15, self._params), 0.5 / 17000.0)
        self.assertEqual(lmo_cycle_damage(0.0, 0.5, 298.15, self._params), 0.0)
        with self.assertRaises(AgingDomainError):
            lmo_cycle_damage(1.3, 0.5, 298.15, self._params)

    def test_split_half_cycle_matches_whole(self):
        whole, split = lmo_cell(), lmo_cell()
        apply_event(whole, AgingEvent(0.4, 0.5, 0.5, 298.15, 0.0), AgingParams())
        for _ in range(2):
            apply_event(split, AgingEvent(0.2, 0.5, 0.5, 298.15, 0.0), AgingParams())
        self.assertAlmostEqual(whole.state.aging.fc_sum, split.state.aging.fc_sum, places=15)
        self.assertEqual(split.state.aging.open_half_cycle.swing, 0.4)

    def test_reversal_closes_half_cycle(self):
        cell = lmo_cell()
        apply_event(cell, AgingEvent(0.3, 0.5, 0.5, 298.15, 0.5), AgingParams())
        apply_event(cell, AgingEvent(-0.2, 0.5, 0.3, 298.15, 0.5), AgingParams())
        acc = cell.state.aging
        self.assertEqual(acc.half_cycle_count, 1)
        self.assertEqual(acc.open_half_cycle.direction, -1)
        self.assertAlmostEqual(acc.half_cycles[-1][0], 0.3)
        self.assertGreater(acc.ft_sum, 0.0)
        acc.close_half_cycle()
        self.assertEqual(acc.half_cycle_count, 2)
        self.assertEqual(acc.open_half_cycle.swing, 0.0)


class TestAugmentation(SimpleTestCase):

    def test_knee(self):
        healthy = Cell.fresh(CellParams(gamma=1.2), soh=0.9)
        worn = Cell.fresh(CellParams(gamma=1.2), soh=0.7)
        self.assertAlmostEqual(augment(1e-3, healthy, 0.75), 1.2e-3)
        self.assertAlmostEqual(augment(1e-3, worn, 0.75), 1.2e-3 * (1 + 50 * 0.05))
        with self.assertRaises(InvalidParameterError):
            augment(-1.0, healthy, 0.75)

    def test_apply_events_per_cell(self):
        pack = build_pack(2, soh=1.0, soc=0.5, gamma=[1.0, 2.0])
        events = [AgingEvent.rest(0.5, 298.15, 500.0)] * 2
        apply_events(pack, events, AgingParams())
        losses = 1 - pack.soh
        self.assertAlmostEqual(losses[1] / losses[0], 2.0)

    def test_sample_gammas(self):
        gammas = sample_gammas(np.random.default_rng(0), 1000, 2.0)
        self.assertGreaterEqual(gammas.min(), 0.5)
        np.testing.assert_array_equal(sample_gammas(np.random.default_rng(0), 3, 0.0), np.ones(3))
        with self.assertRaises(InvalidParameterError):
            sample_gammas(np.random.default_rng(0), 3, -0.1)

    def test_event_validation(self):
        with self.assertRaises(InvalidParameterError):
            AgingEvent(0.1, 1.5, 0.1, 298.15, 1.0)
        with self.assertRaises(InvalidParameterError):
            AgingEvent(0.1, 0.5, 0.1, 298.15, -1.0)
        self.assertEqual(AgingEvent(0.1, 1.0 + 1e-12, 0.1, 298.15, 1.0).mean_soc, 1.0)
