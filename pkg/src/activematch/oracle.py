"""Label oracles: a ground-truth simulator and a human oracle behind an HTTP queue."""

from __future__ import annotations

import io
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np


class OracleError(Exception):
    """Raised when an oracle cannot produce an answer."""


class OracleTimeout(OracleError):
    """Raised when a human oracle does not answer within the timeout."""


@dataclass
class LabelQuery:
    query_id: int
    dataset_index: int
    image: np.ndarray
    class_names: list[str]
    issued_at: float = field(default_factory=time.time)


@dataclass
class LabelAnswer:
    query_id: int
    label: int
    source: str
    answered_at: float = field(default_factory=time.time)


class Oracle(ABC):
    @abstractmethod
    def ask(self, query: LabelQuery, timeout: float | None = None) -> LabelAnswer:
        """Answer a label query, blocking until a label is available."""


class SimulatedOracle(Oracle):
    """Answers instantly from hidden ground truth."""

    def __init__(self, labels: np.ndarray):
        self._labels = np.asarray(labels)

    def ask(self, query: LabelQuery, timeout: float | None = None) -> LabelAnswer:
        if not 0 <= query.dataset_index < len(self._labels):
            raise OracleError(f"dataset index {query.dataset_index} out of range")
        return LabelAnswer(
            query_id=query.query_id,
            label=int(self._labels[query.dataset_index]),
            source="simulated",
        )


class _PendingQuery:
    def __init__(self, query: LabelQuery):
        self.query = query
        self.event = threading.Event()
        self.answer: LabelAnswer | None = None


class QueryQueue:
    """Thread-safe outstanding-query registry shared by trainer and HTTP service.

    Each query_id accepts exactly one answer; later answers for the same id
    are rejected so the labeled set never double-counts.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._pending: dict[int, _PendingQuery] = {}
        self._order: list[int] = []
        self._answered: set[int] = set()

    def put(self, query: LabelQuery) -> _PendingQuery:
        with self._lock:
            if query.query_id in self._pending or query.query_id in self._answered:
                raise OracleError(f"duplicate query_id {query.query_id}")
            pending = _PendingQuery(query)
            self._pending[query.query_id] = pending
            self._order.append(query.query_id)
            return pending

    def next_unanswered(self) -> LabelQuery | None:
        with self._lock:
            for qid in self._order:
                if qid in self._pending:
                    return self._pending[qid].query
            return None

    def get(self, query_id: int) -> LabelQuery | None:
        with self._lock:
            pending = self._pending.get(query_id)
            return pending.query if pending else None

    def depth(self) -> int:
        with self._lock:
            return len(self._pending)

    def is_answered(self, query_id: int) -> bool:
        with self._lock:
            return query_id in self._answered

    def answer(self, query_id: int, label: int, source: str = "human") -> LabelAnswer:
        """Record an answer. Raises KeyError for unknown ids, OracleError on duplicates."""
        with self._lock:
            if query_id in self._answered:
                raise OracleError(f"query {query_id} already answered")
            pending = self._pending.get(query_id)
            if pending is None:
                raise KeyError(query_id)
            n_classes = len(pending.query.class_names)
            if not 0 <= label < n_classes:
                raise ValueError(f"label {label} out of range [0, {n_classes})")
            answer = LabelAnswer(query_id=query_id, label=label, source=source)
            pending.answer = answer
            self._answered.add(query_id)
            del self._pending[query_id]
            self._order.remove(query_id)
            pending.event.set()
            return answer


class HumanOracle(Oracle):
    """Blocks the caller on a query queue until the labeling UI posts an answer."""

    def __init__(self, queue: QueryQueue, default_timeout: float = 3600.0):
        self.queue = queue
        self.default_timeout = default_timeout

    def ask(self, query: LabelQuery, timeout: float | None = None) -> LabelAnswer:
        pending = self.queue.put(query)
        limit = self.default_timeout if timeout is None else timeout
        if not pending.event.wait(limit):
            raise OracleTimeout(f"no answer for query {query.query_id} within {limit}s")
        assert pending.answer is not None
        return pending.answer


def encode_png(image: np.ndarray) -> bytes:
    """Encode a float [0,1] HWC image as PNG bytes."""
    from PIL import Image

    arr = np.clip(np.asarray(image) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()
