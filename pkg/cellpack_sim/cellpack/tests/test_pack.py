import numpy as np
from django.test import SimpleTestCase

from ..choices import Chemistry
from ..exceptions import InvalidParameterError, OcvDomainError
from ..pack import (
    CRATE_INTERCEPT, CRATE_SLOPE, Cell, CellParams, CellState, OcvCurve, build_pack, inverse_crate_envelope,
    max_charge_crate, ocv, pack_soc, pack_soh,
)


class TestCellState(SimpleTestCase):
    _nominal, _soh, _soc = 2.3, 0.9, 0.5

    def test_derived_fractions(self):
        state = CellState.from_fractions(self._nominal, self._soh, self._soc)
        self.assertAlmostEqual(state.max_capacity_ah, 2.07)
        self.assertAlmostEqual(state.remaining_charge_ah, 1.035)
        self.assertAlmostEqual(state.soh, self._soh)
        self.assertAlmostEqual(state.soc, self._soc)
        self.assertAlmostEqual(state.aging.soh, self._soh)

    def test_add_charge_is_clamped(self):
        state = CellState.from_fractions(self._nominal, self._soh, self._soc)
        applied = state.add_charge(5.0)
        self.assertAlmostEqual(applied, 2.07 - 1.035)
        self.assertAlmostEqual(state.soc, 1.0)
        applied = state.add_charge(-10.0)
        self.assertAlmostEqual(applied, -2.07)
        self.assertEqual(state.soc, 0.0)

    def test_soh_never_increases(self):
        state = CellState.from_fractions(self._nominal, self._soh, 1.0)
        state.set_soh(0.95)
        self.assertAlmostEqual(state.soh, self._soh)
        state.set_soh(0.8)
        self.assertAlmostEqual(state.soh, 0.8)
        self.assertAlmostEqual(state.remaining_charge_ah, 0.8 * self._nominal)
        self.assertAlmostEqual(state.soc, 1.0)

    def test_invalid_state(self):
        with self.assertRaises(InvalidParameterError):
            CellState(3.0, 2.0, 2.3)
        with self.assertRaises(InvalidParameterError):
            CellState(1.0, 2.5, 2.3)
        with self.assertRaises(InvalidParameterError):
            CellState.from_fractions(2.3, 1.2, 0.5)

    def test_invalid_params(self):
        for kwargs in ({'nominal_capacity_ah': 0}, {'internal_resistance_ohm': -1}, {'gamma': 0},
                       {'chemistry': 'nmc'}):
            with self.assertRaises(InvalidParameterError):
                CellParams(**kwargs)
        self.assertAlmostEqual(CellParams(temperature_rest_c=25.0).temperature_rest_k, 298.15)


class TestPackState(SimpleTestCase):
    _soh = [1.0, 0.8, 0.6]

    def test_bypass_and_pack_soh(self):
        pack = build_pack(3, soh=self._soh, soc=0.5, soh_eol=0.7)
        self.assertEqual(pack.bypassed.tolist(), [False, False, True])
        self.assertAlmostEqual(pack_soh(pack), (2.3 + 1.84) / 6.9)
        at_eol = build_pack(3, soh=[0.9, 0.8, 0.7], soc=0.5, soh_eol=0.7)
        self.assertAlmostEqual(pack_soh(at_eol), 0.5667, places=4)

    def test_pack_soc_ignores_bypassed_cells(self):
        pack = build_pack(3, soh=self._soh, soc=[0.5, 0.5, 1.0], soh_eol=0.7)
        self.assertAlmostEqual(pack_soc(pack), 0.5)
        empty = build_pack(2, soh=0.6, soc=0.5, soh_eol=0.7)
        self.assertEqual(pack_soc(empty), 0.0)

    def test_apply_charge_and_copy(self):
        pack = build_pack(2, soh=1.0, soc=0.5)
        clone = pack.copy()
        moved = pack.apply_charge([0.1, -0.2])
        np.testing.assert_allclose(moved, [0.1, -0.2])
        np.testing.assert_allclose(clone.remaining, [1.15, 1.15])

    def test_build_pack_broadcasts(self):
        pack = build_pack(4, soh=0.9, soc=[0.1, 0.2, 0.3, 0.4], gamma=[1.0, 1.1, 1.2, 1.3], chemistry=Chemistry.LMO)
        self.assertEqual(len(pack), 4)
        self.assertEqual([cell.params.gamma for cell in pack.cells], [1.0, 1.1, 1.2, 1.3])
        self.assertTrue(all(cell.params.chemistry == Chemistry.LMO for cell in pack.cells))
        self.assertIsInstance(pack.cells[0], Cell)

    def test_invalid_eol(self):
        with self.assertRaises(InvalidParameterError):
            build_pack(2, soh_eol=1.0)


class TestCurves(SimpleTestCase):
    _grid = np.linspace(0.01, 0.999, 500)

    def test_ocv_full_charge(self):
        self.assertAlmostEqual(ocv(OcvCurve(Chemistry.LFP), 1.0), 3.5242, places=8)
        self.assertAlmostEqual(ocv(OcvCurve(Chemistry.LMO), 1.0), 4.1733, places=8)

    def test_ocv_is_increasing(self):
        for chemistry in Chemistry.values:
            voltages = OcvCurve(chemistry)(self._grid)
            self.assertTrue(np.all(np.diff(voltages) > 0), chemistry)

    def test_ocv_domain(self):
        for soc in (-0.1, 1.1, float('nan')):
            with self.assertRaises(OcvDomainError):
                ocv(OcvCurve(), soc)
        self.assertTrue(np.isfinite(ocv(OcvCurve(Chemistry.LMO), 0.0)))

    def test_crate_envelope(self):
        self.assertAlmostEqual(max_charge_crate(0.0), CRATE_INTERCEPT)
        self.assertAlmostEqual(max_charge_crate(1.0), CRATE_INTERCEPT - CRATE_SLOPE)
        self.assertAlmostEqual(inverse_crate_envelope(CRATE_INTERCEPT), 0.0)
        self.assertAlmostEqual(inverse_crate_envelope(max_charge_crate(0.4)), 0.4)
        self.assertEqual(inverse_crate_envelope(0.01), 1.0)
