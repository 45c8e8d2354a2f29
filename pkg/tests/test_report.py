import unittest

import numpy as np
import pandas as pd

from oran_fault_cli.evaluation import (
    EvaluationReport,
    FoldResult,
    confusion,
    metrics_from_confusion,
    render_report,
    write_report_csv,
    write_report_text,
)
from oran_fault_cli.evaluation.report import (
    REPORT_COLUMNS,
    confusion_table,
    report_rows,
)

from .oran_fault_test_case_mixin import OranFaultTestCaseMixin


def fold_result(index: int, truth, predicted, rmse: float) -> FoldResult:
    matrix = confusion(truth, predicted)
    return FoldResult(
        index=index,
        n_train=40,
        n_test=len(truth),
        forest_confusion=matrix,
        forest_metrics=metrics_from_confusion(matrix),
        adaboost_confusion=matrix,
        adaboost_metrics=metrics_from_confusion(matrix),
        rmse=rmse,
        persistence_rmse=2 * rmse,
        explained_variance_ratio=0.9,
        first_loss=1.0,
        final_loss=0.5,
    )


def sample_report() -> EvaluationReport:
    return EvaluationReport(
        [
            fold_result(0, [0, 1, 2, 3], [0, 1, 2, 3], 0.1),
            fold_result(1, [0, 1, 2, 3], [0, 1, 2, 2], 0.3),
        ],
        n_ticks=100,
        n_windows=8,
        n_features=20,
        n_components=10,
    )


class TestReport(OranFaultTestCaseMixin, unittest.TestCase):
    def test_rows(self):
        rows = report_rows(sample_report())
        self.assertEqual(len(rows), 3)
        self.assertEqual([row["fold"] for row in rows], ["0", "1", "mean"])
        self.assertEqual(rows[0]["accuracy"], 1.0)
        self.assertEqual(rows[1]["accuracy"], 0.75)
        self.assertAlmostEqual(rows[2]["accuracy"], 0.875)
        self.assertAlmostEqual(rows[2]["rmse"], 0.2)
        self.assertEqual(rows[2]["n_test_windows"], 4.0)

    def test_write_csv(self):
        path = self.tmp_path("report.csv")
        write_report_csv(sample_report(), path)
        data_frame = pd.read_csv(path, dtype={"fold": str})
        self.assertEqual(list(data_frame.columns), list(REPORT_COLUMNS))
        self.assertEqual(list(data_frame["fold"]), ["0", "1", "mean"])
        self.assertAlmostEqual(data_frame["persistence_rmse"].iloc[2], 0.4)

    def test_render(self):
        text = render_report(sample_report())
        for title in (
            "Averaged performance across all folds",
            "Average confusion matrix across all folds",
            "Average classification report",
            "Classifier comparison",
            "Forecast error in normalized feature space",
        ):
            self.assertIn(title, text)
        self.assertIn("87.50%", text)
        self.assertIn("Feature reduction", text)
        self.assertIn("50.00%", text)
        self.assertIn("Fold 1: Packet Loss was never predicted", text)

        path = self.tmp_path("report.txt")
        write_report_text(sample_report(), path)
        with open(path, "r", encoding="utf-8") as f:
            self.assertEqual(f.read(), text)

    def test_confusion_table(self):
        table = confusion_table(confusion([0, 1, 1], [0, 1, 0]))
        self.assertIn("True \\ Predicted", table)
        self.assertIn("1.0", table)
        self.assertNotIn("\x1b", table)
        self.assertIn("\x1b", confusion_table(confusion([0], [0]), highlight=True))

    def test_average_confusion(self):
        report = sample_report()
        self.assertEqual(report.forest_confusion.counts[3, 2], 0.5)
        np.testing.assert_allclose(report.forest_average.recall, [1, 1, 1, 0.5])


if __name__ == "__main__":
    unittest.main()
