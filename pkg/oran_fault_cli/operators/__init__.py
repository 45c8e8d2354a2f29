# flake8: noqa F401
from .pipeline_operator import PipelineOperator, RunInfo, check_bundle_version
