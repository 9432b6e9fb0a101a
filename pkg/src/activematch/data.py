"""Dataset loading, labeled/unlabeled split bookkeeping, and batch iterators."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .oracle import LabelQuery, Oracle, OracleError

CIFAR10_TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
CIFAR10_TEST_FILES = ["test_batch.bin"]
CIFAR100_TRAIN_FILES = ["train.bin"]
CIFAR100_TEST_FILES = ["test.bin"]

_CIFAR_SIDE = 32
_CIFAR_PIXELS = 3 * _CIFAR_SIDE * _CIFAR_SIDE


class IngestionError(Exception):
    """Raised when dataset files are missing or unreadable."""


class FormatError(Exception):
    """Raised when a dataset file does not match the expected binary layout."""


class SplitStateError(Exception):
    """Raised on invalid labeled/pool state transitions."""


@dataclass
class Dataset:
    """An image-classification dataset held fully in memory.

    ``labels`` is hidden ground truth: only the simulated oracle and the
    evaluator may read it.  Pixels are float32 in [0, 1], layout (N, H, W, C).
    """

    images: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: str = "train"
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.images.ndim != 4:
            raise ValueError("images must have shape (N, H, W, C)")
        if len(self.images) != len(self.labels):
            raise ValueError("images and labels length mismatch")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("labels out of range")
        if not self.class_names:
            self.class_names = [f"class_{k}" for k in range(self.num_classes)]

    def __len__(self) -> int:
        return len(self.images)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(self.images.shape[1:])


@dataclass
class BatchSpec:
    labeled_batch_size: int = 64
    unlabeled_batch_size: int = 448
    seed: int = 0

    def __post_init__(self):
        if self.labeled_batch_size < 1 or self.unlabeled_batch_size < 1:
            raise ValueError("batch sizes must be >= 1")


class SplitState:
    """Disjoint labeled/pool index sets over one training dataset.

    The labeled side stores (index -> oracle label).  Conservation invariant:
    labeled and pool are disjoint and together cover all train indices.
    """

    def __init__(self, num_examples: int):
        self.labeled: dict[int, int] = {}
        self.pool: set[int] = set(range(num_examples))
        self._num_examples = num_examples
        # bumped on every mutation so iterators can detect staleness
        self.version = 0

    def add_label(self, index: int, label: int) -> None:
        if index not in self.pool:
            raise SplitStateError(f"index {index} is not in the unlabeled pool")
        self.pool.discard(index)
        self.labeled[index] = label
        self.version += 1

    def check_conservation(self) -> None:
        labeled_idx = set(self.labeled)
        if labeled_idx & self.pool:
            raise SplitStateError("labeled and pool overlap")
        if labeled_idx | self.pool != set(range(self._num_examples)):
            raise SplitStateError("labeled and pool do not cover the dataset")

    @property
    def num_labeled(self) -> int:
        return len(self.labeled)


def _read_cifar_file(path: str, record_len: int, label_bytes: int) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise IngestionError(f"cannot read {path}: {e}") from e
    if len(raw) == 0 or len(raw) % record_len != 0:
        raise FormatError(
            f"{path}: size {len(raw)} is not a positive multiple of the "
            f"{record_len}-byte record"
        )
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, record_len)
    labels = records[:, label_bytes - 1].astype(np.int64)
    pixels = records[:, label_bytes:]
    # stored as 3 channel planes of 1024 bytes each
    images = pixels.reshape(-1, 3, _CIFAR_SIDE, _CIFAR_SIDE).transpose(0, 2, 3, 1)
    return images.astype(np.float32) / 255.0, labels


def load_cifar_binary(path: str, variant: str, split: str = "train") -> Dataset:
    """Load CIFAR-10/100 from the standard binary batch files under ``path``.

    CIFAR-10 records are 1 label byte + 3072 pixel bytes; CIFAR-100 records
    carry a coarse and a fine label byte (the fine label is used).
    """
    if variant == "cifar10":
        names = CIFAR10_TRAIN_FILES if split == "train" else CIFAR10_TEST_FILES
        record_len, label_bytes, num_classes = 1 + _CIFAR_PIXELS, 1, 10
    elif variant == "cifar100":
        names = CIFAR100_TRAIN_FILES if split == "train" else CIFAR100_TEST_FILES
        record_len, label_bytes, num_classes = 2 + _CIFAR_PIXELS, 2, 100
    else:
        raise ValueError(f"unknown variant {variant!r}")

    present = [n for n in names if os.path.exists(os.path.join(path, n))]
    if not present:
        raise IngestionError(f"no {variant} {split} batch files found in {path!r} (expected {names})")

    images, labels = [], []
    for name in present:
        imgs, labs = _read_cifar_file(os.path.join(path, name), record_len, label_bytes)
        images.append(imgs)
        labels.append(labs)
    return Dataset(np.concatenate(images), np.concatenate(labels), num_classes, split=split)


def make_synthetic_blobs(
    num_classes: int,
    per_class: int,
    image_side: int,
    seed: int,
    split: str = "train",
) -> Dataset:
    """Generate a class-separable toy image dataset.

    Each class is a colored Gaussian bump at a class-specific position with
    seeded jitter in position, brightness and background noise.  Deterministic
    for a fixed seed; a small encoder can reach high accuracy on it.
    """
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    if image_side < 4:
        raise ValueError("image_side must be >= 4")

    rng = np.random.default_rng(seed)
    palette = np.array(
        [[1.0, 0.2, 0.2], [0.2, 1.0, 0.2], [0.2, 0.4, 1.0], [1.0, 1.0, 0.2],
         [1.0, 0.2, 1.0], [0.2, 1.0, 1.0], [1.0, 0.6, 0.2], [0.6, 0.2, 1.0]]
    )
    yy, xx = np.mgrid[0:image_side, 0:image_side].astype(np.float32)
    images = np.empty((num_classes * per_class, image_side, image_side, 3), dtype=np.float32)
    labels = np.empty(num_classes * per_class, dtype=np.int64)
    sigma = image_side / 6.0
    for k in range(num_classes):
        angle = 2 * np.pi * k / num_classes
        cy = image_side / 2 + (image_side / 4) * np.sin(angle)
        cx = image_side / 2 + (image_side / 4) * np.cos(angle)
        color = palette[k % len(palette)]
        for j in range(per_class):
            i = k * per_class + j
            jy = cy + rng.normal(0, image_side / 12)
            jx = cx + rng.normal(0, image_side / 12)
            bump = np.exp(-((yy - jy) ** 2 + (xx - jx) ** 2) / (2 * sigma**2))
            brightness = 0.7 + 0.3 * rng.random()
            img = brightness * bump[:, :, None] * color[None, None, :]
            img = img + rng.normal(0, 0.05, size=img.shape)
            images[i] = np.clip(img, 0.0, 1.0)
            labels[i] = k
    return Dataset(images, labels, num_classes, split=split)


def init_split(ds: Dataset, n0: int, oracle: Oracle, seed: int) -> SplitState:
    """Pick n0 uniform-random indices, label them via the oracle, pool the rest."""
    if not 0 < n0 <= len(ds):
        raise ValueError(f"n0 must be in (0, {len(ds)}]")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(ds), size=n0, replace=False)
    state = SplitState(len(ds))
    for qid, idx in enumerate(sorted(int(i) for i in chosen)):
        query = LabelQuery(
            query_id=qid,
            dataset_index=idx,
            image=ds.images[idx],
            class_names=ds.class_names,
        )
        try:
            answer = oracle.ask(query)
        except OracleError as e:
            raise SplitStateError(f"oracle failed during split initialization: {e}") from e
        state.add_label(idx, answer.label)
    state.check_conservation()
    return state


class LabeledBatchIterator:
    """Seeded iterator over the labeled set, robust to the set growing.

    While the labeled set is smaller than B_L, batches are sampled uniformly
    with replacement; once it is large enough, batches come from an epoch
    shuffle without replacement.  Any change to the labeled set restarts the
    epoch so newly acquired labels enter circulation immediately.
    """

    def __init__(self, ds: Dataset, state: SplitState, spec: BatchSpec):
        self.ds = ds
        self.state = state
        self.batch_size = spec.labeled_batch_size
        self.rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0x1ABE1]))
        self._epoch: list[int] = []
        self._seen_version = -1

    def next_batch(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.state.labeled:
            raise SplitStateError("labeled set is empty")
        indices = self._draw(sorted(self.state.labeled))
        images = self.ds.images[indices]
        labels = np.array([self.state.labeled[i] for i in indices], dtype=np.int64)
        return images, labels

    def _draw(self, candidates: list[int]) -> list[int]:
        if len(candidates) < self.batch_size:
            picks = self.rng.integers(0, len(candidates), size=self.batch_size)
            return [candidates[i] for i in picks]
        if self._seen_version != self.state.version or len(self._epoch) < self.batch_size:
            self._epoch = list(self.rng.permutation(candidates))
            self._seen_version = self.state.version
        batch, self._epoch = self._epoch[: self.batch_size], self._epoch[self.batch_size :]
        return batch


class UnlabeledBatchIterator:
    """Seeded iterator over the pool; mirrors LabeledBatchIterator, keeps indices."""

    def __init__(self, ds: Dataset, state: SplitState, spec: BatchSpec):
        self.ds = ds
        self.state = state
        self.batch_size = spec.unlabeled_batch_size
        self.rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0x0001B]))
        self._epoch: list[int] = []
        self._seen_version = -1

    def next_batch(self) -> tuple[list[int], np.ndarray]:
        if not self.state.pool:
            raise SplitStateError("unlabeled pool is empty")
        candidates = sorted(self.state.pool)
        if len(candidates) < self.batch_size:
            picks = self.rng.integers(0, len(candidates), size=self.batch_size)
            indices = [candidates[i] for i in picks]
        else:
            if self._seen_version != self.state.version or len(self._epoch) < self.batch_size:
                self._epoch = list(self.rng.permutation(candidates))
                self._seen_version = self.state.version
            indices, self._epoch = self._epoch[: self.batch_size], self._epoch[self.batch_size :]
        return indices, self.ds.images[indices]


def next_labeled_batch(it: LabeledBatchIterator) -> tuple[np.ndarray, np.ndarray]:
    return it.next_batch()


def next_unlabeled_batch(it: UnlabeledBatchIterator) -> tuple[list[int], np.ndarray]:
    return it.next_batch()
