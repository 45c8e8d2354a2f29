import hashlib
import os
import unittest

import numpy as np

from oran_fault_cli.exceptions import DatasetIOException
from oran_fault_cli.utils import (
    derive_rng,
    derive_seed,
    ensure_directory,
    file_sha256,
    format_float,
    format_row,
    label_histogram,
    percent,
    text_sha256,
)

from .oran_fault_test_case_mixin import OranFaultTestCaseMixin


class TestUtils(OranFaultTestCaseMixin, unittest.TestCase):
    def test_derive_rng(self):
        first = derive_rng(42, "injector").random(5)
        np.testing.assert_array_equal(first, derive_rng(42, "injector").random(5))
        for other in (
            derive_rng(43, "injector"),
            derive_rng(42, "sim.baseline"),
            derive_rng(42, "injector", 1),
        ):
            self.assertFalse(np.array_equal(first, other.random(5)))

        # Drawing from one stream never moves another
        derive_rng(42, "cv.split").random(1000)
        np.testing.assert_array_equal(first, derive_rng(42, "injector").random(5))

    def test_derive_seed(self):
        seed = derive_seed(7, "pipeline.forest", 2)
        self.assertEqual(seed, derive_seed(7, "pipeline.forest", 2))
        self.assertNotEqual(seed, derive_seed(7, "pipeline.forest", 3))
        self.assertTrue(0 <= seed < 2**31)

    def test_hashes(self):
        path = self.write_text("data.txt", "fault\n")
        self.assertEqual(file_sha256(path), hashlib.sha256(b"fault\n").hexdigest())
        self.assertEqual(text_sha256("fault\n"), file_sha256(path))

    def test_formatting(self):
        self.assertEqual(format_float(0.1), "0.1")
        self.assertEqual(format_float(1.0 / 3.0), "0.333333333")
        self.assertEqual(format_float(123456789012.0), "1.23456789e+11")
        self.assertEqual(format_row("mean", [0.1, 2]), "mean,0.1,2.0")
        value = 1.0 / 3.0
        self.assertEqual(float(format_row("x", [value]).split(",")[1]), value)
        self.assertEqual(percent(0.98733), "98.73%")

    def test_label_histogram(self):
        np.testing.assert_array_equal(label_histogram([0, 3, 3]), [1, 0, 0, 2])
        np.testing.assert_array_equal(label_histogram([]), [0, 0, 0, 0])

    def test_ensure_directory(self):
        path = os.path.join(self.workdir, "a", "b")
        self.assertEqual(ensure_directory(path), path)
        self.assertTrue(os.path.isdir(path))
        ensure_directory(path)
        with self.assertRaises(DatasetIOException):
            ensure_directory(os.path.join(self.write_text("file", "x"), "sub"))


if __name__ == "__main__":
    unittest.main()
