"""Query strategies over the unlabeled pool and the query-event scheduler."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import augment
from .data import Dataset, SplitState
from .model import EncoderNet, forward

STRATEGIES = ("margin", "random", "entropy")


@dataclass
class ActiveConfig:
    n0: int = 6
    b_smp: int = 25
    label_budget: int = 30
    strategy: str = "margin"
    queries_per_event: int = 1
    scoring_pool_size: int = 0  # 0 = score the full pool

    def __post_init__(self):
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")
        if self.b_smp < 1:
            raise ValueError("b_smp must be >= 1")
        if self.label_budget < self.n0:
            raise ValueError("label_budget must be >= n0")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")


def margin(probs: np.ndarray) -> float:
    """Top-1 minus top-2 predicted probability; small means uncertain."""
    probs = np.asarray(probs)
    if probs.shape[-1] < 2:
        raise ValueError("margin needs at least 2 classes")
    top2 = np.sort(probs)[..., -2:]
    return float(top2[..., 1] - top2[..., 0])


def should_query(
    joint_batch_counter: int,
    epoch: int,
    cfg: ActiveConfig,
    labels_so_far: int,
    warmup_epochs: int,
) -> bool:
    """Query when warm-up is done, budget remains, and the post-warm-up batch
    counter hits a positive multiple of b_smp."""
    if joint_batch_counter < 0 or epoch < 0 or labels_so_far < 0:
        raise ValueError("counters must be non-negative")
    if epoch < warmup_epochs or labels_so_far >= cfg.label_budget:
        return False
    return joint_batch_counter > 0 and joint_batch_counter % cfg.b_smp == 0


def _scores(
    net: EncoderNet,
    ds: Dataset,
    candidates: list[int],
    strategy: str,
    rng: np.random.Generator,
    batch_size: int = 512,
) -> np.ndarray:
    """Uncertainty score per candidate; lower = queried first.

    Predictions are taken in eval mode on one weakly augmented copy of each
    candidate, drawn from the dedicated scoring RNG stream.
    """
    weak = augment.weak_policy()
    images = np.stack([augment.apply(weak, ds.images[i], rng) for i in candidates])
    probs = np.concatenate(
        [forward(net, images[s : s + batch_size], mode="eval")[1] for s in range(0, len(images), batch_size)]
    ).astype(np.float64)
    if strategy == "margin":
        top2 = np.sort(probs, axis=1)[:, -2:]
        return top2[:, 1] - top2[:, 0]
    if strategy == "entropy":
        ent = -(probs * np.log(np.clip(probs, 1e-12, None))).sum(axis=1)
        return -ent  # most entropic first
    raise ValueError(f"no scores for strategy {strategy!r}")


def select_queries(
    net: EncoderNet,
    ds: Dataset,
    state: SplitState,
    cfg: ActiveConfig,
    rng: np.random.Generator,
) -> list[int]:
    """Pick the pool indices to query at this event.

    Margin/entropy take the lowest-score candidates, ties broken by lowest
    pool index; random picks uniformly.  Returns at most queries_per_event
    distinct pool indices, clipped to the remaining budget; empty when the
    pool or the budget is exhausted.
    """
    remaining = cfg.label_budget - state.num_labeled
    if remaining <= 0 or not state.pool:
        return []
    n_queries = min(cfg.queries_per_event, remaining, len(state.pool))

    candidates = sorted(state.pool)
    if 0 < cfg.scoring_pool_size < len(candidates):
        picks = rng.choice(len(candidates), size=cfg.scoring_pool_size, replace=False)
        candidates = [candidates[i] for i in sorted(picks)]

    if cfg.strategy == "random":
        picks = rng.choice(len(candidates), size=n_queries, replace=False)
        return [candidates[i] for i in sorted(picks)]

    scores = _scores(net, ds, candidates, cfg.strategy, rng)
    # stable sort on score keeps the lowest pool index first among ties
    order = np.argsort(scores, kind="stable")[:n_queries]
    return [candidates[i] for i in order]
