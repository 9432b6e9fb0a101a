"""Contrastive, cross-entropy, pseudo-label, and combined training losses.

All contrastive terms share one generic form: the negative log of the ratio of
the positive-set exponential-similarity sum to the (positive + negative)-set
sum, scaled by 1 / |positives|.  Exponential sums are evaluated with max-shift
(log-sum-exp) stabilization because small temperatures overflow raw exp().
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F


class LossConfigError(Exception):
    pass


@dataclass
class LossWeights:
    """Weights for (unsup contrastive, supervised CE, sup contrastive, pseudo-label)."""

    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 0.08
    lambda4: float = 1.0

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.lambda3, self.lambda4) < 0:
            raise LossConfigError("loss weights must be non-negative")


@dataclass
class ContrastiveBatchView:
    """A batch of representations with per-anchor positive/negative index sets."""

    reps: torch.Tensor  # (n, d)
    positives: list[set[int]]
    negatives: list[set[int]]
    temperature: float

    def __post_init__(self):
        if self.temperature <= 0:
            raise LossConfigError("temperature must be > 0")
        for i, (pos, neg) in enumerate(zip(self.positives, self.negatives)):
            if pos & neg:
                raise ValueError(f"anchor {i}: positive and negative sets overlap")
            if i in pos or i in neg:
                raise ValueError(f"anchor {i} appears in its own positive/negative set")


def cosine_sim(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    na, nb = torch.linalg.norm(a), torch.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return (a @ b) / (na * nb)


def _pairwise_sims(reps: torch.Tensor) -> torch.Tensor:
    normed = F.normalize(reps, dim=1, eps=1e-12)
    return normed @ normed.T


def contrastive_loss(view: ContrastiveBatchView, anchor: int) -> torch.Tensor:
    """Generic contrastive term for one anchor of the batch view."""
    pos = sorted(view.positives[anchor])
    neg = sorted(view.negatives[anchor])
    if not pos:
        raise ValueError(f"anchor {anchor} has an empty positive set")
    sims = _pairwise_sims(view.reps)[anchor] / view.temperature
    idx_pos = torch.tensor(pos, dtype=torch.long)
    idx_all = torch.tensor(pos + neg, dtype=torch.long)
    return -(torch.logsumexp(sims[idx_pos], 0) - torch.logsumexp(sims[idx_all], 0)) / len(pos)


def unsup_contrastive_loss(reps: torch.Tensor, temperature: float) -> torch.Tensor:
    """Average single-positive contrastive loss over 2*B sibling-paired views.

    ``reps`` holds views interleaved as (x_1^(1), x_1^(2), x_2^(1), ...); the
    positive of each view is its sibling, the negatives are all other views.
    """
    if temperature <= 0:
        raise LossConfigError("temperature must be > 0")
    n = reps.shape[0]
    if n % 2 != 0 or n < 2:
        raise ValueError(f"expected an even number of views, got {n}")
    sims = _pairwise_sims(reps) / temperature
    sims = sims.masked_fill(torch.eye(n, dtype=torch.bool), float("-inf"))
    sibling = torch.arange(n) ^ 1
    pos = sims[torch.arange(n), sibling]
    denom = torch.logsumexp(sims, dim=1)
    return (-(pos - denom)).mean()


def supervised_ce_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy against integer labels, via stable log-softmax."""
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise ValueError("label out of range")
    return F.cross_entropy(logits, labels)


def sup_contrastive_loss(
    reps: torch.Tensor, labels: torch.Tensor, temperature: float
) -> torch.Tensor:
    """Label-aware contrastive loss over 2*B paired labeled views.

    Views are interleaved pairs as in unsup_contrastive_loss; the positive set
    of a view is every other view sharing its source label (its sibling is
    always there, so no anchor is ever positive-less), the negatives are the
    views of all other classes.
    """
    if temperature <= 0:
        raise LossConfigError("temperature must be > 0")
    n = reps.shape[0]
    if n != 2 * labels.shape[0]:
        raise ValueError("expected two views per labeled example")
    view_labels = labels.repeat_interleave(2)
    same = view_labels[:, None] == view_labels[None, :]
    self_mask = torch.eye(n, dtype=torch.bool)
    pos_mask = same & ~self_mask
    assert bool(pos_mask.any(dim=1).all()), "sibling view guarantees a nonempty positive set"

    sims = _pairwise_sims(reps) / temperature
    sims = sims.masked_fill(self_mask, float("-inf"))
    pos_logsum = torch.logsumexp(sims.masked_fill(~pos_mask, float("-inf")), dim=1)
    denom = torch.logsumexp(sims, dim=1)
    per_anchor = -(pos_logsum - denom) / pos_mask.sum(dim=1)
    return per_anchor.mean()


def pseudo_label_loss(
    weak_probs: torch.Tensor, strong_logits: torch.Tensor, confidence_threshold: float
) -> tuple[torch.Tensor, int]:
    """Confidence-gated cross-entropy of strong-view predictions against
    argmax pseudo-labels from the weak-view probabilities.

    The weak branch is a constant target (no gradient flows through it); the
    mean is taken over the full batch, not just the confident samples.
    Returns the loss and the confident-sample count.  Gating is strictly
    greater-than, so confidence exactly at the threshold is excluded.
    """
    if weak_probs.shape != strong_logits.shape:
        raise ValueError("weak/strong batch shapes differ")
    confidence, pseudo = weak_probs.detach().max(dim=1)
    mask = confidence > confidence_threshold
    count = int(mask.sum())
    if count == 0:
        return strong_logits.sum() * 0.0, 0
    per_sample = F.cross_entropy(strong_logits, pseudo, reduction="none")
    loss = (per_sample * mask.to(per_sample.dtype)).sum() / weak_probs.shape[0]
    return loss, count


def total_loss(
    unsup_cl: torch.Tensor,
    sup_ce: torch.Tensor,
    sup_cl: torch.Tensor,
    pseudo: torch.Tensor,
    weights: LossWeights,
) -> torch.Tensor:
    parts = {
        "unsup_contrastive": unsup_cl,
        "supervised_ce": sup_ce,
        "sup_contrastive": sup_cl,
        "pseudo_label": pseudo,
    }
    for name, part in parts.items():
        if not torch.isfinite(torch.as_tensor(part)):
            raise ValueError(f"loss term {name} is non-finite")
    return (
        weights.lambda1 * unsup_cl
        + weights.lambda2 * sup_ce
        + weights.lambda3 * sup_cl
        + weights.lambda4 * pseudo
    )
