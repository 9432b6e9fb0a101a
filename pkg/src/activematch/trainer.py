"""End-to-end training loop: contrastive warm-up, joint phase, active queries."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from . import augment, losses
from .active import ActiveConfig, select_queries, should_query
from .data import BatchSpec, Dataset, LabeledBatchIterator, SplitState, UnlabeledBatchIterator, init_split
from .model import EncoderNet, backward_and_step, forward, images_to_tensor, save_checkpoint
from .oracle import LabelQuery, Oracle, OracleTimeout


@dataclass
class TrainConfig:
    total_steps: int = 3000  # joint-phase steps; the cosine schedule runs over these
    lr0: float = 0.03
    warmup_epochs: int = 15
    momentum: float = 0.9
    weight_decay: float = 5e-4
    tau: float = 0.07
    confidence_threshold: float = 0.95
    weights: losses.LossWeights = field(default_factory=losses.LossWeights)
    batch: BatchSpec = field(default_factory=BatchSpec)
    active: ActiveConfig = field(default_factory=ActiveConfig)
    arch: str = "conv4"
    proj_dim: int = 128
    eval_every: int = 200
    checkpoint_every: int = 1000
    oracle_timeout: float = 3600.0
    seed: int = 0

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be > 0")
        if self.warmup_epochs < 0:
            raise ValueError("warmup_epochs must be >= 0")


@dataclass
class RunMetrics:
    records: list[dict] = field(default_factory=list)

    def append(self, record: dict, path: str | None = None) -> None:
        if self.records and record["step"] <= self.records[-1]["step"]:
            raise ValueError("metric steps must be strictly increasing")
        self.records.append(record)
        if path:
            with open(path, "a") as f:
                f.write(json.dumps(record) + "\n")

    @property
    def final_accuracy(self) -> float:
        accs = [r["test_accuracy"] for r in self.records if "test_accuracy" in r]
        return accs[-1] if accs else float("nan")


def cosine_lr(k: int, total: int, lr0: float) -> float:
    """Cosine decay from lr0 at k=0 down to lr0*cos(7pi/16) at k=total."""
    if not 0 <= k <= total:
        raise ValueError(f"step {k} outside [0, {total}]")
    return lr0 * math.cos(7 * math.pi * k / (16 * total))


def evaluate(net: EncoderNet, test_ds: Dataset, batch_size: int = 512) -> float:
    """Accuracy of argmax predictions on raw (unaugmented) test images."""
    correct = 0
    for start in range(0, len(test_ds), batch_size):
        _, probs = forward(net, test_ds.images[start : start + batch_size], mode="eval")
        correct += int((probs.argmax(axis=1) == test_ds.labels[start : start + batch_size]).sum())
    return correct / len(test_ds)


def _interleaved_pairs(images: np.ndarray, policy, rng) -> np.ndarray:
    views = np.empty((2 * len(images),) + images.shape[1:], dtype=np.float32)
    for i, img in enumerate(images):
        views[2 * i] = augment.apply(policy, img, rng)
        views[2 * i + 1] = augment.apply(policy, img, rng)
    return views


def _augment_each(images: np.ndarray, policy, rng) -> np.ndarray:
    return np.stack([augment.apply(policy, img, rng) for img in images])


class Trainer:
    """Owns the net, the split state, and the RNG streams for one run."""

    def __init__(self, cfg: TrainConfig, train_ds: Dataset, test_ds: Dataset, oracle: Oracle,
                 out_dir: str | None = None, status=None):
        self.cfg = cfg
        self.train_ds = train_ds
        self.test_ds = test_ds
        self.oracle = oracle
        self.out_dir = out_dir
        self.status = status  # optional RunStatus shared with the label server
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        self.metrics_path = os.path.join(out_dir, "metrics.jsonl") if out_dir else None
        if self.metrics_path and os.path.exists(self.metrics_path):
            os.remove(self.metrics_path)

        torch.manual_seed(cfg.seed)
        self.net = EncoderNet(train_ds.image_shape, train_ds.num_classes,
                              arch=cfg.arch, proj_dim=cfg.proj_dim)

        # independent, order-stable RNG streams
        ss = np.random.SeedSequence(cfg.seed)
        split_ss, aug_ss, score_ss = ss.spawn(3)
        self.aug_rng = np.random.default_rng(aug_ss)
        self.score_rng = np.random.default_rng(score_ss)
        self._split_seed = int(split_ss.generate_state(1)[0])

        side = train_ds.image_shape[0]
        self.contrastive_policy = augment.contrastive_policy()
        self.weak_policy = augment.weak_policy()
        self.strong_policy = augment.strong_policy(side)

        self.state: SplitState | None = None
        self.metrics = RunMetrics()
        self.global_step = 0
        self.query_counter = 0

    # -- label acquisition ---------------------------------------------------

    def _ask_oracle(self, index: int) -> int:
        query = LabelQuery(
            query_id=self.query_counter,
            dataset_index=index,
            image=self.train_ds.images[index],
            class_names=self.train_ds.class_names,
        )
        self.query_counter += 1
        try:
            answer = self.oracle.ask(query, timeout=self.cfg.oracle_timeout)
        except OracleTimeout:
            self._checkpoint("timeout")
            raise
        return answer.label

    def _run_query_event(self) -> None:
        assert self.state is not None
        indices = select_queries(self.net, self.train_ds, self.state, self.cfg.active, self.score_rng)
        for idx in indices:
            label = self._ask_oracle(idx)
            self.state.add_label(idx, label)
            self.state.check_conservation()
        if indices and self.out_dir:
            self._checkpoint("query")
        self._push_status()

    # -- steps ----------------------------------------------------------------

    def warmup_step(self, unlabeled_images: np.ndarray) -> dict:
        """One SGD step on the unsupervised contrastive loss alone."""
        views = _interleaved_pairs(unlabeled_images, self.contrastive_policy, self.aug_rng)
        reps, _ = self.net(images_to_tensor(views))
        loss = self.cfg.weights.lambda1 * losses.unsup_contrastive_loss(reps, self.cfg.tau)
        backward_and_step(self.net, loss, self.cfg.lr0, self.cfg.momentum, self.cfg.weight_decay)
        self.global_step += 1
        return {"loss_unsup_contrastive": loss.item() / max(self.cfg.weights.lambda1, 1e-12),
                "lr": self.cfg.lr0}

    def joint_step(self, labeled_images: np.ndarray, labeled_labels: np.ndarray,
                   unlabeled_images: np.ndarray, lr: float) -> dict:
        """One SGD step on the full weighted loss at the given learning rate."""
        cfg = self.cfg
        b_u, b_l = len(unlabeled_images), len(labeled_images)

        unl_views = _interleaved_pairs(unlabeled_images, self.contrastive_policy, self.aug_rng)
        lab_views = _interleaved_pairs(labeled_images, self.contrastive_policy, self.aug_rng)
        lab_weak = _augment_each(labeled_images, self.weak_policy, self.aug_rng)
        unl_weak = np.empty_like(unlabeled_images)
        unl_strong = np.empty_like(unlabeled_images)
        for i, img in enumerate(unlabeled_images):
            unl_weak[i], unl_strong[i] = augment.weak_strong_pair(
                img, self.aug_rng, self.weak_policy, self.strong_policy)

        stacked = np.concatenate([unl_views, lab_views, lab_weak, unl_weak, unl_strong])
        reps, logits = self.net(images_to_tensor(stacked))
        cuts = np.cumsum([2 * b_u, 2 * b_l, b_l, b_u, b_u])
        unl_reps = reps[: cuts[0]]
        lab_reps = reps[cuts[0] : cuts[1]]
        lab_logits = logits[cuts[1] : cuts[2]]
        weak_logits = logits[cuts[2] : cuts[3]]
        strong_logits = logits[cuts[3] : cuts[4]]

        labels_t = torch.from_numpy(np.asarray(labeled_labels, dtype=np.int64))
        l_unsup = losses.unsup_contrastive_loss(unl_reps, cfg.tau)
        l_sup = losses.supervised_ce_loss(lab_logits, labels_t)
        l_supcl = losses.sup_contrastive_loss(lab_reps, labels_t, cfg.tau)
        weak_probs = torch.softmax(weak_logits.detach(), dim=1)
        l_pseudo, confident = losses.pseudo_label_loss(weak_probs, strong_logits,
                                                       cfg.confidence_threshold)
        total = losses.total_loss(l_unsup, l_sup, l_supcl, l_pseudo, cfg.weights)
        backward_and_step(self.net, total, lr, cfg.momentum, cfg.weight_decay)
        self.global_step += 1
        return {
            "loss_unsup_contrastive": l_unsup.item(),
            "loss_supervised_ce": l_sup.item(),
            "loss_sup_contrastive": l_supcl.item(),
            "loss_pseudo_label": l_pseudo.item(),
            "loss_total": total.item(),
            "confident_fraction": confident / b_u,
            "lr": lr,
        }

    # -- orchestration ---------------------------------------------------------

    def run(self) -> tuple[EncoderNet, RunMetrics]:
        cfg = self.cfg
        self.state = init_split(self.train_ds, cfg.active.n0, self.oracle, self._split_seed)
        self.query_counter = cfg.active.n0
        labeled_it = LabeledBatchIterator(self.train_ds, self.state, cfg.batch)
        unlabeled_it = UnlabeledBatchIterator(self.train_ds, self.state, cfg.batch)
        self._push_status()

        steps_per_epoch = max(1, math.ceil(len(self.state.pool) / cfg.batch.unlabeled_batch_size))
        for _epoch in range(cfg.warmup_epochs):
            for _ in range(steps_per_epoch):
                _, images = unlabeled_it.next_batch()
                self.warmup_step(images)

        for k in range(cfg.total_steps):
            lr = cosine_lr(k, cfg.total_steps, cfg.lr0)
            _, unl_images = unlabeled_it.next_batch()
            lab_images, lab_labels = labeled_it.next_batch()
            step_metrics = self.joint_step(lab_images, lab_labels, unl_images, lr)

            if should_query(k + 1, cfg.warmup_epochs, cfg.active,
                            self.state.num_labeled, cfg.warmup_epochs):
                self._run_query_event()

            if (k + 1) % cfg.eval_every == 0 or k + 1 == cfg.total_steps:
                acc = evaluate(self.net, self.test_ds)
                record = {"step": self.global_step, "joint_step": k + 1,
                          "test_accuracy": acc, "labels_collected": self.state.num_labeled,
                          **step_metrics}
                self.metrics.append(record, self.metrics_path)
                self._push_status(accuracy=acc)
            if self.out_dir and (k + 1) % cfg.checkpoint_every == 0:
                self._checkpoint("periodic")

        if self.out_dir:
            self._checkpoint("final")
        return self.net, self.metrics

    def _checkpoint(self, tag: str) -> None:
        if not self.out_dir:
            return
        path = os.path.join(self.out_dir, "checkpoint.pt")
        extra = {"tag": tag, "labels": dict(self.state.labeled) if self.state else {}}
        save_checkpoint(self.net, path, step=self.global_step, extra=extra)

    def _push_status(self, accuracy: float | None = None) -> None:
        if self.status is None:
            return
        self.status.update(
            training_step=self.global_step,
            labels_collected=self.state.num_labeled if self.state else 0,
            label_budget=self.cfg.active.label_budget,
            test_accuracy=accuracy,
        )


def run(cfg: TrainConfig, train_ds: Dataset, test_ds: Dataset, oracle: Oracle,
        out_dir: str | None = None, status=None) -> tuple[EncoderNet, RunMetrics]:
    """Train an ActiveMatch model end to end; see Trainer for the moving parts."""
    return Trainer(cfg, train_ds, test_ds, oracle, out_dir=out_dir, status=status).run()
