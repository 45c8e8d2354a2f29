# flake8: noqa F401
from .adaboost import AdaBoostModel, fit_adaboost, predict_adaboost
from .decision_tree import DecisionTree, TreeParams, fit_tree
from .fault_pipeline import FaultPipeline, PipelineSettings
from .lstm_forecaster import LstmParams, TrainConfig, forward, predict_batch, train
from .pca import PcaModel, fit_pca, inverse_transform, transform
from .preprocess import (
    Normalizer,
    WindowSet,
    align,
    apply_normalizer,
    fit_normalizer,
    impute,
    invert_normalizer,
    make_windows,
)
from .random_forest import ForestModel, ForestParams, fit_forest, predict, predict_proba
