import io
import os
import unittest
from unittest import mock
from unittest.mock import MagicMock

import numpy as np

from oran_fault_cli.command_parser import (
    EXIT_FAILURE,
    EXIT_SUCCESS,
    EXIT_USAGE,
    build_command_parser,
)
from oran_fault_cli.exceptions import ModelBundleException
from oran_fault_cli.main import main
from oran_fault_cli.operators import check_bundle_version
from oran_fault_cli.operators.pipeline_operator import (
    DATASET_FILE,
    MODEL_DIRECTORY,
    REPORT_CSV_FILE,
    REPORT_TEXT_FILE,
    SCHEDULE_FILE,
    SCHEMA_FILE,
)
from oran_fault_cli.pipeline.fault_pipeline import (
    FOREST_FILE,
    MANIFEST_FILE,
    read_manifest,
)
from oran_fault_cli.telemetry import DatasetTable, write_dataset_csv
from oran_fault_cli.telemetry.schema import write_schema
from oran_fault_cli.version import version

from .oran_fault_test_case_mixin import OranFaultTestCaseMixin

TINY_CONFIG = """
[run]
seed = 3

[simulation]
duration_s = 600
topology = 1
schema_preset = custom
platform_metrics = 2
infra_metrics = 3

[pipeline]
k = 5
m = 1
pca_components = 3
hidden_size = 4
epochs = 1
n_trees = 3
max_depth = 5
adaboost_rounds = 3
"""


class TestCommandParser(OranFaultTestCaseMixin, unittest.TestCase):
    def setUp(self):
        super().setUp()
        self.config = self.write_text("run.ini", TINY_CONFIG)
        self.out = os.path.join(self.workdir, "run")

    def run_cli(self, *argv: str) -> int:
        return main([*argv, "--config", self.config, "--out", self.out])

    def write_dataset(self, table: DatasetTable) -> str:
        schema = self.small_schema()
        os.makedirs(self.out, exist_ok=True)
        path = os.path.join(self.out, DATASET_FILE)
        write_dataset_csv(table, schema, path)
        write_schema(schema, os.path.join(self.out, SCHEMA_FILE))
        return path

    def test_usage_errors(self):
        for argv in (
            [],
            ["train", "--bogus"],
            ["predict"],
            ["simulate", "--seed=-1"],
        ):
            with self.assertRaises(SystemExit) as context:
                main(argv)
            self.assertEqual(context.exception.code, EXIT_USAGE, argv)
        with self.assertRaises(SystemExit) as context:
            main(["simulate", "--config", self.tmp_path("missing.ini")])
        self.assertEqual(context.exception.code, EXIT_USAGE)
        with self.assertRaises(SystemExit) as context:
            main(["--version"])
        self.assertEqual(context.exception.code, 0)

    def test_parser(self):
        args = build_command_parser().parse_args(
            ["predict", "--tick", "60", "--model", self.workdir, "--seed", "4"]
        )
        self.assertEqual(args.command, "predict")
        self.assertEqual(args.tick, 60)
        self.assertEqual(args.seed, 4)
        self.assertIsNone(args.dataset)
        self.assertFalse(args.verbose)

    @mock.patch("oran_fault_cli.command_parser._error")
    def test_invalid_config(self, error_mock: MagicMock):
        bad = self.write_text("bad.ini", "[pipeline]\nwindow = 3\n")
        self.assertEqual(main(["simulate", "--config", bad]), EXIT_USAGE)
        self.assertIn("pipeline.window", error_mock.call_args[0][0])

    def test_simulate(self):
        self.assertEqual(self.run_cli("simulate"), EXIT_SUCCESS)
        for name in (DATASET_FILE, SCHEDULE_FILE, SCHEMA_FILE):
            self.assertTrue(os.path.isfile(os.path.join(self.out, name)), name)
        with open(os.path.join(self.out, DATASET_FILE), "rb") as f:
            first = f.read()
        self.assertTrue(first.startswith(b"tick_s,du0.n_active_ues,"))
        self.assertEqual(first.count(b"\n"), 601)

        again = os.path.join(self.workdir, "again")
        self.assertEqual(
            main(["simulate", "--config", self.config, "--out", again]),
            EXIT_SUCCESS,
        )
        with open(os.path.join(again, DATASET_FILE), "rb") as f:
            self.assertEqual(f.read(), first)

        other = os.path.join(self.workdir, "other")
        main(["simulate", "--config", self.config, "--out", other, "--seed", "4"])
        with open(os.path.join(other, DATASET_FILE), "rb") as f:
            self.assertNotEqual(f.read(), first)

    @mock.patch("oran_fault_cli.command_parser._error")
    def test_train_and_predict(self, error_mock: MagicMock):
        self.write_dataset(self.labelled_table(n_features=12))
        self.assertEqual(self.run_cli("train"), EXIT_SUCCESS)
        model = os.path.join(self.out, MODEL_DIRECTORY)
        manifest = read_manifest(os.path.join(model, MANIFEST_FILE))
        self.assertEqual(manifest["version"], version)
        self.assertEqual(manifest["seed"], "3")
        self.assertEqual(len(manifest["config_hash"]), 64)
        self.assertTrue(os.path.isfile(os.path.join(model, SCHEMA_FILE)))

        self.assertEqual(self.run_cli("predict", "--tick", "100"), EXIT_SUCCESS)
        self.assertEqual(self.run_cli("predict", "--tick", "3"), EXIT_USAGE)
        self.assertIn("minimum 5", error_mock.call_args[0][0])
        self.assertEqual(self.run_cli("predict", "--tick", "199"), EXIT_USAGE)

        with open(os.path.join(model, FOREST_FILE), "a", encoding="utf-8") as f:
            f.write("L,1,0,0,0\n")
        self.assertEqual(self.run_cli("predict", "--tick", "100"), EXIT_FAILURE)
        self.assertIn("Invalid model bundle", error_mock.call_args[0][0])

    def test_evaluate(self):
        self.write_dataset(self.labelled_table(n_features=12))
        self.assertEqual(self.run_cli("evaluate"), EXIT_SUCCESS)
        for name in (REPORT_CSV_FILE, REPORT_TEXT_FILE):
            self.assertTrue(os.path.isfile(os.path.join(self.out, name)), name)

    @mock.patch("oran_fault_cli.command_parser._error")
    def test_evaluate_rare_class(self, error_mock: MagicMock):
        table = self.labelled_table(n_features=12)
        labels = np.where(table.labels == 3, 0, table.labels)
        labels[150:153] = 3
        self.write_dataset(DatasetTable(table.ticks, table.features, labels))
        self.assertEqual(self.run_cli("evaluate"), EXIT_FAILURE)
        self.assertIn("Cannot stratify", error_mock.call_args[0][0])

    @mock.patch("oran_fault_cli.command_parser._error")
    def test_dataset_errors(self, error_mock: MagicMock):
        self.assertEqual(self.run_cli("train"), EXIT_FAILURE)
        self.assertIn(DATASET_FILE, error_mock.call_args[0][0])

        # Written for the small schema, read with the configured one
        path = self.write_dataset(self.labelled_table(n_features=12))
        os.remove(os.path.join(self.out, SCHEMA_FILE))
        self.assertEqual(
            main(["train", "--config", self.config, "--dataset", path]),
            EXIT_FAILURE,
        )
        self.assertIn("does not match the schema", error_mock.call_args[0][0])

        table = self.labelled_table(n_features=12)
        shifted = DatasetTable(table.ticks + 1, table.features, table.labels)
        self.write_dataset(shifted)
        self.assertEqual(self.run_cli("train"), EXIT_FAILURE)
        self.assertIn("ticks must run", error_mock.call_args[0][0])

    def test_error_text_is_not_markup(self):
        path = self.write_dataset(self.labelled_table(n_features=12))
        with open(path, "r", encoding="utf-8") as f:
            lines = [line.rsplit(",", 1)[0] for line in f.read().splitlines()]
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")

        with mock.patch("sys.stderr", new_callable=io.StringIO) as stderr:
            self.assertEqual(self.run_cli("train"), EXIT_FAILURE)
        self.assertIn("'<missing>', expected 'label'", stderr.getvalue())


class TestBundleVersion(unittest.TestCase):
    def test_check_bundle_version(self):
        check_bundle_version(version)
        check_bundle_version("0.9.1")
        for bundle_version in (None, "1.0.0", "not a version"):
            with self.assertRaises(ModelBundleException):
                check_bundle_version(bundle_version)


if __name__ == "__main__":
    unittest.main()
