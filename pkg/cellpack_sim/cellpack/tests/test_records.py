import numpy as np
from django.test import SimpleTestCase

from ..choices import ChargeMode
from ..exceptions import InvalidParameterError
from ..records import STREAM_SPAN_H, ChargingRecord, generate_records


class TestGenerateRecords(SimpleTestCase):
    _seed = 42

    def test_default_mix(self):
        records = generate_records(self._seed)
        modes = [record.mode for record in records]
        self.assertEqual(len(records), 255)
        self.assertEqual(modes.count(ChargeMode.DC_FAST), 81)
        self.assertEqual(modes.count(ChargeMode.AC), 174)

    def test_deterministic(self):
        self.assertEqual(generate_records(self._seed), generate_records(self._seed))
        self.assertNotEqual(generate_records(self._seed), generate_records(self._seed + 1))
        self.assertEqual(generate_records(np.random.default_rng(3)), generate_records(np.random.default_rng(3)))

    def test_span_and_rates(self):
        records = generate_records(self._seed)
        span = sum(record.duration_h + record.gap_to_next_h for record in records)
        self.assertLess(abs(span - STREAM_SPAN_H), 0.1 * STREAM_SPAN_H)
        for record in records:
            self.assertLess(record.start_soc, record.end_soc)
            if record.mode == ChargeMode.DC_FAST:
                self.assertGreater(record.average_crate, 0.2)
            else:
                self.assertLessEqual(record.average_crate, 0.3 + 1e-12)

    def test_arguments(self):
        with self.assertRaises(InvalidParameterError):
            generate_records(self._seed, n_records=0)
        with self.assertRaises(InvalidParameterError):
            generate_records(self._seed, dc_fraction=1.5)
        self.assertTrue(all(r.mode == ChargeMode.AC for r in generate_records(self._seed, 10, dc_fraction=0.0)))


class TestChargingRecord(SimpleTestCase):

    def test_validation(self):
        for args in ((0.6, 0.5, 1.0, 'ac', 0.0), (0.1, 0.5, 0.0, 'ac', 0.0), (0.1, 0.5, 1.0, 'ac', -1.0),
                     (0.1, 0.5, 1.0, 'slow', 0.0)):
            with self.assertRaises(InvalidParameterError):
                ChargingRecord(*args)
        self.assertAlmostEqual(ChargingRecord(0.2, 0.8, 2.0, 'dc_fast', 5.0).average_crate, 0.3)
