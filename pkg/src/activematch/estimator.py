"""Scikit-learn style wrapper around the training engine.

ActiveMatchClassifier takes the full ground truth in fit() and simulates the
label oracle internally, mirroring the benchmarked setting: the model only
ever sees the n0 seed labels plus the actively queried ones, up to
label_budget, even though y is fully known to the simulator and the scorer.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .active import ActiveConfig
from .data import BatchSpec, Dataset
from .losses import LossWeights
from .model import forward
from .oracle import SimulatedOracle
from .trainer import TrainConfig, run


class ActiveMatchClassifier(ClassifierMixin, BaseEstimator):
    def __init__(
        self,
        n0: int = 6,
        label_budget: int = 30,
        b_smp: int = 25,
        strategy: str = "margin",
        total_steps: int = 3000,
        warmup_epochs: int = 3,
        lr0: float = 0.03,
        lambda1: float = 1.0,
        lambda2: float = 1.0,
        lambda3: float = 0.08,
        lambda4: float = 1.0,
        tau: float = 0.07,
        confidence_threshold: float = 0.95,
        labeled_batch_size: int = 8,
        unlabeled_batch_size: int = 16,
        arch: str = "conv2",
        proj_dim: int = 64,
        random_state: int = 0,
    ):
        self.n0 = n0
        self.label_budget = label_budget
        self.b_smp = b_smp
        self.strategy = strategy
        self.total_steps = total_steps
        self.warmup_epochs = warmup_epochs
        self.lr0 = lr0
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.lambda3 = lambda3
        self.lambda4 = lambda4
        self.tau = tau
        self.confidence_threshold = confidence_threshold
        self.labeled_batch_size = labeled_batch_size
        self.unlabeled_batch_size = unlabeled_batch_size
        self.arch = arch
        self.proj_dim = proj_dim
        self.random_state = random_state

    def _check_images(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float32)
        if X.ndim != 4:
            raise ValueError("X must be an (N, H, W, C) image array")
        return X

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            total_steps=self.total_steps,
            lr0=self.lr0,
            warmup_epochs=self.warmup_epochs,
            tau=self.tau,
            confidence_threshold=self.confidence_threshold,
            weights=LossWeights(self.lambda1, self.lambda2, self.lambda3, self.lambda4),
            batch=BatchSpec(self.labeled_batch_size, self.unlabeled_batch_size,
                            seed=self.random_state),
            active=ActiveConfig(n0=self.n0, b_smp=self.b_smp,
                                label_budget=self.label_budget, strategy=self.strategy),
            arch=self.arch,
            proj_dim=self.proj_dim,
            eval_every=max(1, self.total_steps),
            seed=self.random_state,
        )

    def fit(self, X, y):
        X = self._check_images(X)
        y = np.asarray(y)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        ds = Dataset(X, y_enc.astype(np.int64), num_classes=len(self.classes_))
        oracle = SimulatedOracle(ds.labels)
        # run() evaluates on its test split; reuse train here since the sklearn
        # caller scores separately via predict/score
        self.net_, self.metrics_ = run(self._train_config(), ds, ds, oracle)
        return self

    def _probs(self, X) -> np.ndarray:
        check_is_fitted(self, "net_")
        X = self._check_images(X)
        out = [forward(self.net_, X[s : s + 512], mode="eval")[1] for s in range(0, len(X), 512)]
        return np.concatenate(out)

    def predict_proba(self, X) -> np.ndarray:
        return self._probs(X)

    def predict(self, X) -> np.ndarray:
        return self.classes_[self._probs(X).argmax(axis=1)]

    def transform(self, X) -> np.ndarray:
        """Projection-head embeddings (unit norm), one row per image."""
        check_is_fitted(self, "net_")
        X = self._check_images(X)
        out = [forward(self.net_, X[s : s + 512], mode="eval")[0] for s in range(0, len(X), 512)]
        return np.concatenate(out)
