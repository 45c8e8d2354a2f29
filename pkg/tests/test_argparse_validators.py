import argparse
import unittest

from oran_fault_cli.argparse_validators import (
    check_existing_directory,
    check_existing_file,
    check_non_negative_integer,
    check_positive_integer,
)

from .oran_fault_test_case_mixin import OranFaultTestCaseMixin


class TestArgparseValidators(OranFaultTestCaseMixin, unittest.TestCase):
    def test_check_positive_integer(self):
        self.assertEqual(check_positive_integer("1"), 1)
        self.assertEqual(check_positive_integer(500), 500)

        with self.assertRaises(argparse.ArgumentTypeError):
            check_positive_integer("0")
        with self.assertRaises(argparse.ArgumentTypeError):
            check_positive_integer("-1")
        with self.assertRaisesRegex(
            argparse.ArgumentTypeError, "abc is not an integer"
        ):
            check_positive_integer("abc")

    def test_check_non_negative_integer(self):
        self.assertEqual(check_non_negative_integer("0"), 0)
        self.assertEqual(check_non_negative_integer("42"), 42)
        with self.assertRaisesRegex(argparse.ArgumentTypeError, "Must be >= 0"):
            check_non_negative_integer("-3")

    def test_check_existing_paths(self):
        path = self.write_text("dataset.csv", "tick_s,label\n")
        self.assertEqual(check_existing_file(path), path)
        self.assertEqual(check_existing_directory(self.workdir), self.workdir)
        with self.assertRaises(argparse.ArgumentTypeError):
            check_existing_file(self.workdir)
        with self.assertRaises(argparse.ArgumentTypeError):
            check_existing_file(self.tmp_path("missing.csv"))
        with self.assertRaises(argparse.ArgumentTypeError):
            check_existing_directory(path)


if __name__ == "__main__":
    unittest.main()
