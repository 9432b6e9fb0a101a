"""Run configuration files: flat TOML keys mapped onto the config dataclasses.

Recognized keys (all optional, defaults in parentheses):

  dataset.name            cifar10 | cifar100 | blobs   (blobs)
  dataset.data_dir        directory with CIFAR binary batches
  dataset.blobs_classes   (3)     dataset.blobs_per_class (100)
  dataset.blobs_side      (16)

  train.total_steps (3000)   train.lr0 (0.03)       train.warmup_epochs (15)
  train.momentum (0.9)       train.weight_decay (5e-4)
  train.eval_every (200)     train.checkpoint_every (1000)
  train.seed (0)             train.arch (conv4)     train.proj_dim (128)
  train.labeled_batch_size (64)   train.unlabeled_batch_size (448)
  train.oracle_timeout (3600)

  loss.lambda1 (1.0)  loss.lambda2 (1.0)  loss.lambda3 (0.08)  loss.lambda4 (1.0)
  loss.tau (0.07)     loss.confidence_threshold (0.95)

  active.n0 (6)       active.b_smp (25)   active.budget (30)
  active.strategy     margin | random | entropy   (margin)
  active.queries_per_event (1)   active.scoring_pool_size (0)

  augment.crop_padding (4)  augment.flip_prob (0.5)  augment.color_strength (0.5)
  augment.color_prob (0.8)  augment.gray_prob (0.2)  augment.blur_prob (0.5)
  augment.ra_num_ops (2)    augment.ra_magnitude (10)
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .active import ActiveConfig
from .data import BatchSpec
from .losses import LossWeights
from .trainer import TrainConfig


def _flatten(tree: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def load_config_file(path: str) -> dict:
    with open(path, "rb") as f:
        return _flatten(tomllib.load(f))


def train_config_from_flat(flat: dict) -> TrainConfig:
    g = flat.get
    weights = LossWeights(
        lambda1=g("loss.lambda1", 1.0),
        lambda2=g("loss.lambda2", 1.0),
        lambda3=g("loss.lambda3", 0.08),
        lambda4=g("loss.lambda4", 1.0),
    )
    batch = BatchSpec(
        labeled_batch_size=g("train.labeled_batch_size", 64),
        unlabeled_batch_size=g("train.unlabeled_batch_size", 448),
        seed=g("train.seed", 0),
    )
    active = ActiveConfig(
        n0=g("active.n0", 6),
        b_smp=g("active.b_smp", 25),
        label_budget=g("active.budget", 30),
        strategy=g("active.strategy", "margin"),
        queries_per_event=g("active.queries_per_event", 1),
        scoring_pool_size=g("active.scoring_pool_size", 0),
    )
    return TrainConfig(
        total_steps=g("train.total_steps", 3000),
        lr0=g("train.lr0", 0.03),
        warmup_epochs=g("train.warmup_epochs", 15),
        momentum=g("train.momentum", 0.9),
        weight_decay=g("train.weight_decay", 5e-4),
        tau=g("loss.tau", 0.07),
        confidence_threshold=g("loss.confidence_threshold", 0.95),
        weights=weights,
        batch=batch,
        active=active,
        arch=g("train.arch", "conv4"),
        proj_dim=g("train.proj_dim", 128),
        eval_every=g("train.eval_every", 200),
        checkpoint_every=g("train.checkpoint_every", 1000),
        oracle_timeout=g("train.oracle_timeout", 3600.0),
        seed=g("train.seed", 0),
    )


def load_train_config(path: str) -> tuple[TrainConfig, dict]:
    """Parse a config file into a TrainConfig plus the raw flat key map."""
    flat = load_config_file(path)
    return train_config_from_flat(flat), flat
