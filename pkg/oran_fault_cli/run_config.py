import configparser
import dataclasses
from typing import Any, Dict, Optional

from .evaluation.cross_validation import SplitMode
from .exceptions import ConfigException
from .injection.fault_injector import DEFAULT_LAMBDA_PER_MIN
from .pipeline.fault_pipeline import PipelineSettings
from .pipeline.lstm_forecaster import TrainConfig
from .pipeline.random_forest import ForestParams
from .simulation.sim_config import FaultEffects
from .telemetry.schema import SCHEMA_PRESETS, Schema, schema_from_preset
from .utils import text_sha256


@dataclasses.dataclass(frozen=True)
class SimulationSection:
    duration_s: int = 14400
    topology: int = 4
    schema_preset: str = "default"
    platform_metrics: int = 24
    infra_metrics: int = 40
    noise_scale: float = 1.0
    lambda_per_min: float = DEFAULT_LAMBDA_PER_MIN
    effects: FaultEffects = dataclasses.field(default_factory=FaultEffects)

    def schema(self) -> Schema:
        """
        ``custom`` uses `platform_metrics` and `infra_metrics`, presets ignore
        them
        """
        return schema_from_preset(
            self.schema_preset,
            self.topology,
            self.platform_metrics,
            self.infra_metrics,
        )


@dataclasses.dataclass(frozen=True)
class PipelineSection:
    k: int = 60
    m: int = 5
    pca_components: int = 10
    hidden_size: int = 32
    layers: int = 2
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    clip_norm: float = 5.0
    n_trees: int = 100
    max_depth: int = 12
    min_samples_split: int = 2
    adaboost_rounds: int = 50


@dataclasses.dataclass(frozen=True)
class EvaluationSection:
    k_folds: int = 5
    split: str = SplitMode.STRATIFIED.value


@dataclasses.dataclass(frozen=True)
class PathsSection:
    workdir: str = "."


@dataclasses.dataclass(frozen=True)
class RunConfig:
    seed: int = 42
    simulation: SimulationSection = dataclasses.field(
        default_factory=SimulationSection
    )
    pipeline: PipelineSection = dataclasses.field(default_factory=PipelineSection)
    evaluation: EvaluationSection = dataclasses.field(
        default_factory=EvaluationSection
    )
    paths: PathsSection = dataclasses.field(default_factory=PathsSection)

    def pipeline_settings(self) -> PipelineSettings:
        section = self.pipeline
        return PipelineSettings(
            k=section.k,
            m=section.m,
            pca_components=section.pca_components,
            hidden_size=section.hidden_size,
            n_layers=section.layers,
            train=TrainConfig(
                epochs=section.epochs,
                batch_size=section.batch_size,
                learning_rate=section.learning_rate,
                clip_norm=section.clip_norm,
                seed=self.seed,
            ),
            forest=ForestParams(
                n_trees=section.n_trees,
                max_depth=section.max_depth,
                min_samples_split=section.min_samples_split,
            ),
            adaboost_rounds=section.adaboost_rounds,
        )

    def with_overrides(
        self, seed: Optional[int] = None, workdir: Optional[str] = None
    ) -> "RunConfig":
        config = self
        if seed is not None:
            config = dataclasses.replace(config, seed=seed)
        if workdir is not None:
            config = dataclasses.replace(config, paths=PathsSection(workdir))
        return config

    def canonical_text(self) -> str:
        """
        Effective configuration, every key in a fixed order. ``paths`` is left
        out so moving a run does not change its hash
        """
        lines = ["[run]", f"seed = {self.seed}"]
        lines += _section_lines("simulation", _flat(self.simulation))
        lines += _section_lines("pipeline", _flat(self.pipeline))
        lines += _section_lines("evaluation", _flat(self.evaluation))
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return text_sha256(self.canonical_text())


def _flat(section: Any) -> Dict[str, Any]:
    values = {}
    for field in dataclasses.fields(section):
        value = getattr(section, field.name)
        if field.name == "effects":
            for effect in dataclasses.fields(value):
                values[effect.name] = getattr(value, effect.name)
        else:
            values[field.name] = value
    return values


def _section_lines(name: str, values: Dict[str, Any]):
    return [f"[{name}]"] + [
        f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}"
        for key, value in values.items()
    ]


def _convert(field_path: str, kind: type, text: str) -> Any:
    try:
        return text.strip() if kind is str else kind(text.strip())
    except ValueError:
        raise ConfigException(field_path, f"'{text}' is not a valid {kind.__name__}")


def _build(section_name: str, cls, values: Dict[str, str], nested=None):
    """
    Typed section from raw strings. `nested` maps a dataclass field holding a
    second dataclass whose fields share the section keys
    """
    kwargs = {}
    nested_kwargs: Dict[str, Any] = {}
    known = {field.name: field.type for field in dataclasses.fields(cls)}
    nested_fields = {}
    if nested:
        nested_fields = {
            field.name: field.type for field in dataclasses.fields(nested[1])
        }
    for key, text in values.items():
        field_path = f"{section_name}.{key}"
        if key in known and (not nested or key != nested[0]):
            kwargs[key] = _convert(field_path, known[key], text)
        elif key in nested_fields:
            nested_kwargs[key] = _convert(field_path, nested_fields[key], text)
        else:
            raise ConfigException(field_path, "unknown key")
    try:
        if nested:
            kwargs[nested[0]] = nested[1](**nested_kwargs)
        return cls(**kwargs)
    except ValueError as e:
        raise ConfigException(section_name, str(e))


SECTIONS = ("run", "simulation", "pipeline", "evaluation", "paths")


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """
    :raises: ConfigException naming the offending ``section.key``
    """
    parser = configparser.ConfigParser(
        interpolation=None, default_section="__defaults__"
    )
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigException(source, str(e).splitlines()[0])
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigException(section, "unknown section")

    def values(section: str) -> Dict[str, str]:
        return dict(parser.items(section)) if parser.has_section(section) else {}

    run = values("run")
    for key in run:
        if key != "seed":
            raise ConfigException(f"run.{key}", "unknown key")
    seed = _convert("run.seed", int, run["seed"]) if "seed" in run else 42

    simulation = _build(
        "simulation",
        SimulationSection,
        values("simulation"),
        nested=("effects", FaultEffects),
    )
    if simulation.schema_preset not in (*SCHEMA_PRESETS, "custom"):
        raise ConfigException(
            "simulation.schema_preset",
            f"'{simulation.schema_preset}' is not one of "
            f"{', '.join([*SCHEMA_PRESETS, 'custom'])}",
        )
    evaluation = _build("evaluation", EvaluationSection, values("evaluation"))
    if evaluation.split not in [mode.value for mode in SplitMode]:
        raise ConfigException(
            "evaluation.split", f"'{evaluation.split}' is not stratified or blocked"
        )
    config = RunConfig(
        seed=seed,
        simulation=simulation,
        pipeline=_build("pipeline", PipelineSection, values("pipeline")),
        evaluation=evaluation,
        paths=_build("paths", PathsSection, values("paths")),
    )
    validate(config)
    return config


def _require(condition: bool, field_path: str, message: str):
    if not condition:
        raise ConfigException(field_path, message)


def validate(config: RunConfig) -> None:
    simulation, pipeline = config.simulation, config.pipeline
    _require(simulation.duration_s >= 1, "simulation.duration_s", "must be >= 1")
    _require(simulation.topology >= 1, "simulation.topology", "must be >= 1")
    _require(simulation.noise_scale >= 0, "simulation.noise_scale", "must be >= 0")
    _require(
        simulation.lambda_per_min > 0, "simulation.lambda_per_min", "must be > 0"
    )
    _require(pipeline.k >= 1, "pipeline.k", "must be >= 1")
    _require(pipeline.m >= 1, "pipeline.m", "must be >= 1")
    _require(pipeline.pca_components >= 1, "pipeline.pca_components", "must be >= 1")
    _require(pipeline.hidden_size >= 1, "pipeline.hidden_size", "must be >= 1")
    _require(pipeline.layers >= 1, "pipeline.layers", "must be >= 1")
    _require(config.evaluation.k_folds >= 2, "evaluation.k_folds", "must be >= 2")
    try:
        config.pipeline_settings()
    except ValueError as e:
        raise ConfigException("pipeline", str(e))


def load_config(path: Optional[str]) -> RunConfig:
    """
    :param path: INI file, defaults only if None
    """
    if path is None:
        return RunConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigException(path, f"cannot read configuration: {e}")
    return parse_config(text, source=path)
