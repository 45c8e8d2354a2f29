import dataclasses
import logging
import os
from functools import cached_property
from typing import Dict, Optional

import numpy as np
from packaging import version as semantic_version
from prompt_toolkit import HTML, print_formatted_text
from tabulate import tabulate

from ..evaluation.cross_validation import (
    EvaluationReport,
    SplitMode,
    run_cross_validation,
)
from ..evaluation.report import (
    CLASS_NAMES,
    render_report,
    write_report_csv,
    write_report_text,
)
from ..exceptions import DatasetIOException, ModelBundleException
from ..injection.fault_injector import build_schedule, write_schedule_csv
from ..pipeline.fault_pipeline import MANIFEST_FILE, FaultPipeline, read_manifest
from ..pipeline.preprocess import WindowSet, align, impute, make_windows
from ..run_config import RunConfig
from ..simulation.sim_config import SimConfig
from ..simulation.simulator import run_simulation
from ..simulation.topology import Topology
from ..simulation.traffic import TrafficProfile
from ..telemetry.dataset import DatasetTable, read_dataset_csv, write_dataset_csv
from ..telemetry.schema import Schema, read_schema, write_schema
from ..utils import derive_rng, ensure_directory, file_sha256, label_histogram
from ..version import version

logger = logging.getLogger(__name__)

DATASET_FILE = "dataset.csv"
SCHEDULE_FILE = "schedule.csv"
SCHEMA_FILE = "schema.txt"
REPORT_CSV_FILE = "report.csv"
REPORT_TEXT_FILE = "report.txt"
MODEL_DIRECTORY = "model"


@dataclasses.dataclass
class RunInfo:
    workdir: str
    seed: int
    config_hash: str
    features: int
    duration_s: int

    def __str__(self):
        return (
            f"workdir={self.workdir} seed={self.seed} features={self.features} "
            f"duration={self.duration_s}s config={self.config_hash[:12]}"
        )


def check_bundle_version(bundle_version: Optional[str]) -> None:
    """
    :raises: ModelBundleException unless the bundle was written by a tool with
        the same major version
    """
    if bundle_version is None:
        raise ModelBundleException("Manifest does not record the tool version")
    try:
        bundle_major = semantic_version.parse(bundle_version).major
    except semantic_version.InvalidVersion:
        raise ModelBundleException(f"Invalid bundle version {bundle_version}")
    if bundle_major != semantic_version.parse(version).major:
        raise ModelBundleException(
            f"Bundle was written by version {bundle_version}, this is {version}"
        )


class PipelineOperator:
    config: RunConfig

    def __init__(self, config: RunConfig):
        self.config = config

    @property
    def workdir(self) -> str:
        return self.config.paths.workdir

    @property
    def model_directory(self) -> str:
        return os.path.join(self.workdir, MODEL_DIRECTORY)

    @cached_property
    def schema(self) -> Schema:
        return self.config.simulation.schema()

    @cached_property
    def run_info(self) -> RunInfo:
        return RunInfo(
            self.workdir,
            self.config.seed,
            self.config.config_hash(),
            self.schema.n_features,
            self.config.simulation.duration_s,
        )

    def print_info(self):
        for key, value in dataclasses.asdict(self.run_info).items():
            print_formatted_text(
                HTML("<b><ansigreen>{}</ansigreen></b>=<ansiblue>{}</ansiblue>").format(
                    key.capitalize(), value
                )
            )

    def print_label_histogram(self, labels: np.ndarray):
        counts = label_histogram(labels)
        rows = [
            [code, name, int(count), f"{100.0 * count / max(len(labels), 1):.2f}%"]
            for code, (name, count) in enumerate(zip(CLASS_NAMES, counts))
        ]
        print(tabulate(rows, headers=["Code", "Label", "Ticks", "Share"]))
        for name, count in zip(CLASS_NAMES, counts):
            if count == 0:
                print_formatted_text(
                    HTML(
                        "<ansiyellow>Warning: no tick is labeled {}</ansiyellow>"
                    ).format(name)
                )

    def schema_for(self, dataset_path: str) -> Schema:
        """
        ``schema.txt`` written next to the dataset, the configured schema if
        there is none
        """
        path = os.path.join(os.path.dirname(os.path.abspath(dataset_path)), SCHEMA_FILE)
        if os.path.isfile(path):
            return read_schema(path)
        return self.schema

    def load_dataset(self, dataset_path: str, schema: Schema) -> DatasetTable:
        if not os.path.isfile(dataset_path):
            raise DatasetIOException(dataset_path, "file not found")
        table = read_dataset_csv(dataset_path, schema)
        logger.info("Loaded %d ticks from %s", table.n_rows, dataset_path)
        return table

    def simulate(self) -> DatasetTable:
        simulation = self.config.simulation
        schema = self.schema
        sim_config = SimConfig(
            seed=self.config.seed,
            duration_s=simulation.duration_s,
            topology=Topology.of_size(simulation.topology),
            schema=schema,
            noise_scale=simulation.noise_scale,
            effects=simulation.effects,
        )
        schedule = build_schedule(
            derive_rng(self.config.seed, "injector"),
            schema.containers,
            simulation.duration_s,
            simulation.lambda_per_min,
        )
        stream, labels = run_simulation(sim_config, TrafficProfile(), schedule)
        table = impute(align(stream, schema, simulation.duration_s, labels))

        ensure_directory(self.workdir)
        write_dataset_csv(table, schema, os.path.join(self.workdir, DATASET_FILE))
        write_schedule_csv(schedule, os.path.join(self.workdir, SCHEDULE_FILE))
        write_schema(schema, os.path.join(self.workdir, SCHEMA_FILE))
        print_formatted_text(
            HTML(
                "<b><ansigreen>Simulated {} ticks of {} features into {}"
                "</ansigreen></b>"
            ).format(table.n_rows, schema.n_features, self.workdir)
        )
        self.print_label_histogram(table.labels)
        return table

    def train(self, dataset_path: str) -> FaultPipeline:
        schema = self.schema_for(dataset_path)
        table = self.load_dataset(dataset_path, schema)
        settings = self.config.pipeline_settings()
        windows = self._windows(table)
        pipeline = FaultPipeline.fit(
            table,
            windows,
            settings,
            self.config.seed,
            feature_ids=schema.feature_order,
        )

        directory = ensure_directory(self.model_directory)
        write_schema(schema, os.path.join(directory, SCHEMA_FILE))
        pipeline.save(
            directory,
            {
                "config_hash": self.config.config_hash(),
                "version": version,
                "seed": str(self.config.seed),
                "sha256.dataset": file_sha256(dataset_path),
                f"sha256.{SCHEMA_FILE}": file_sha256(
                    os.path.join(directory, SCHEMA_FILE)
                ),
            },
        )
        print_formatted_text(
            HTML(
                "<b><ansigreen>Trained on {} windows, model written to {}"
                "</ansigreen></b>"
            ).format(len(windows), directory)
        )
        explained = pipeline.pca.explained_variance_ratio.sum()
        print_formatted_text(
            HTML(
                "LSTM loss <ansiblue>{:.6g}</ansiblue> to <ansiblue>{:.6g}</ansiblue>, "
                "explained variance <ansiblue>{:.4f}</ansiblue>"
            ).format(pipeline.loss_history[0], pipeline.loss_history[-1], explained)
        )
        return pipeline

    def _windows(self, table: DatasetTable) -> WindowSet:
        return make_windows(table, self.config.pipeline.k, self.config.pipeline.m)

    def evaluate(self, dataset_path: str) -> EvaluationReport:
        table = self.load_dataset(dataset_path, self.schema_for(dataset_path))
        report = run_cross_validation(
            table,
            self.config.pipeline_settings(),
            self.config.seed,
            self.config.evaluation.k_folds,
            SplitMode(self.config.evaluation.split),
        )
        ensure_directory(self.workdir)
        write_report_csv(report, os.path.join(self.workdir, REPORT_CSV_FILE))
        write_report_text(report, os.path.join(self.workdir, REPORT_TEXT_FILE))
        print(render_report(report, highlight=True))
        print_formatted_text(
            HTML(
                "<b><ansigreen>All {} folds completed, report written to {}"
                "</ansigreen></b>"
            ).format(len(report.folds), self.workdir)
        )
        return report

    def load_bundle(self, model_directory: str) -> FaultPipeline:
        manifest: Dict[str, str] = read_manifest(
            os.path.join(model_directory, MANIFEST_FILE)
        )
        check_bundle_version(manifest.get("version"))
        return FaultPipeline.load(model_directory)

    def predict(self, dataset_path: str, model_directory: str, tick: int) -> np.ndarray:
        pipeline = self.load_bundle(model_directory)
        schema_path = os.path.join(model_directory, SCHEMA_FILE)
        schema = read_schema(schema_path) if os.path.isfile(schema_path) else None
        table = self.load_dataset(dataset_path, schema or self.schema_for(dataset_path))
        probabilities = pipeline.predict_at(table, tick)
        label = int(probabilities.argmax())
        print_formatted_text(
            HTML(
                "<b><ansigreen>Tick {}</ansigreen></b>=<ansiblue>{} ({})</ansiblue>"
            ).format(tick + pipeline.m, CLASS_NAMES[label], label)
        )
        rows = [
            [code, name, f"{probability:.4f}"]
            for code, (name, probability) in enumerate(zip(CLASS_NAMES, probabilities))
        ]
        print(tabulate(rows, headers=["Code", "Label", "Probability"]))
        return probabilities
