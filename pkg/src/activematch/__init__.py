"""Semi-supervised + active-learning training engine with a labeling service."""

from .active import ActiveConfig, margin, select_queries, should_query
from .data import (
    BatchSpec,
    Dataset,
    SplitState,
    init_split,
    load_cifar_binary,
    make_synthetic_blobs,
)
from .estimator import ActiveMatchClassifier
from .losses import LossWeights
from .model import EncoderNet
from .oracle import HumanOracle, LabelAnswer, LabelQuery, Oracle, QueryQueue, SimulatedOracle
from .trainer import RunMetrics, TrainConfig, Trainer, cosine_lr, evaluate, run

__all__ = [
    "ActiveConfig",
    "ActiveMatchClassifier",
    "BatchSpec",
    "Dataset",
    "EncoderNet",
    "HumanOracle",
    "LabelAnswer",
    "LabelQuery",
    "LossWeights",
    "Oracle",
    "QueryQueue",
    "RunMetrics",
    "SimulatedOracle",
    "SplitState",
    "TrainConfig",
    "Trainer",
    "cosine_lr",
    "evaluate",
    "init_split",
    "load_cifar_binary",
    "make_synthetic_blobs",
    "margin",
    "run",
    "select_queries",
    "should_query",
]

__version__ = "0.1.0"
