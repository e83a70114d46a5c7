import tempfile
import unittest
from pathlib import Path

import numpy as np

from dsinfluence.tools import (
    atomic_write,
    canonical_json,
    canonical_number,
    format_data,
    format_score,
    spawn_seeds,
)


class TestCanonicalJson(unittest.TestCase):
    def test_sorted_compact(self):
        self.assertEqual(canonical_json({"b": 1, "a": [True, None]}), '{"a":[true,null],"b":1}')

    def test_numbers(self):
        self.assertEqual(canonical_number(85.0), "85")
        self.assertEqual(canonical_number(12.5), "12.5")
        self.assertEqual(canonical_number(0.1), "0.1")
        self.assertEqual(canonical_number(1e-7), "0.0000001")
        self.assertEqual(canonical_json(np.int64(3)), "3")
        self.assertEqual(canonical_json(np.float64(2.25)), "2.25")

    def test_non_finite(self):
        with self.assertRaises(ValueError):
            canonical_json(float("nan"))
        with self.assertRaises(ValueError):
            canonical_json(float("inf"))

    def test_unicode_kept(self):
        self.assertEqual(canonical_json("Zürich"), '"Zürich"')

    def test_unsupported(self):
        with self.assertRaises(TypeError):
            canonical_json(object())


class TestFormatting(unittest.TestCase):
    def test_format_score(self):
        self.assertEqual(format_score(None), "--")
        self.assertEqual(format_score(0.94375), "0.94")
        self.assertEqual(format_score(1.0), "1.00")
        self.assertEqual(format_score(0.12345, 3), "0.123")

    def test_format_data_skips_missing(self):
        rows = list(format_data([{"a": 0.5}, {"b": 1}], {"a": format_score}))
        self.assertEqual(rows, [{"a": "0.50"}, {"b": 1}])


class TestAtomicWrite(unittest.TestCase):
    def test_replaces_and_leaves_no_temp(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "sub" / "report.csv"
            atomic_write(path, "first\n")
            atomic_write(path, "second\n")
            self.assertEqual(path.read_text(), "second\n")
            self.assertEqual(sorted(p.name for p in path.parent.iterdir()), ["report.csv"])


class TestSeeds(unittest.TestCase):
    def test_reproducible_and_distinct(self):
        seeds = spawn_seeds(7, 10)
        self.assertEqual(seeds, spawn_seeds(7, 10))
        self.assertEqual(len(set(seeds)), 10)
        self.assertNotEqual(seeds, spawn_seeds(8, 10))
        self.assertEqual(spawn_seeds(7, 3), seeds[:3])
