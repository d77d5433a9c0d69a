"""Prototype learning strategies over encoded windows.

Strategy tags
-------------
========  ==========================================================
``2C``    single pass, one accumulated centroid per class
``2C+``   multi-pass: mispredicted samples re-added to their class
``2C+-``  multi-pass: re-added and subtracted from the predicted class
``MC``    multi-centroid single pass, new centroid on misprediction
``MCr``   MC followed by removal of small centroids
``MCc``   MC followed by clustering small centroids into survivors
``MCri``  MCr followed by multi-pass fine-tuning of the centroid set
``On+``   weighted single pass, weight = 1 - similarity to prototype
``On+-``  On+ with subtraction from the wrongly predicted class
========  ==========================================================

Multi-pass variants predict against the prototypes frozen at the end of
the previous pass, re-binarize at the end of each pass, record per-pass
re-added fraction and training F1DEmean, and stop per :class:`StopRule`.
Prediction ties (equal Hamming distance) resolve to the lower class label,
then the lower centroid index, everywhere including training loops.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .evaluation import LabelSequence, evaluate_sequences, post_process
from .hv import (
    FIXED_POINT_SCALE,
    Accumulator,
    Hypervector,
    accumulate_bits,
    deserialize_accumulator,
    deserialize_hypervector,
    majority_bits,
    serialize_accumulator,
    serialize_hypervector,
)

__all__ = [
    "STRATEGIES",
    "StopRule",
    "Centroid",
    "TrainStats",
    "EncodedFile",
    "EncodedDataset",
    "Model",
    "Prediction",
    "predict",
    "train_single_pass",
    "train_multi_pass",
    "train_multi_centroid",
    "reduce_centroids",
    "fine_tune_multi_pass",
    "train_online",
    "train_strategy",
    "serialize_model",
    "deserialize_model",
    "save_model",
    "load_model",
]

STRATEGIES = ("2C", "2C+", "2C+-", "MC", "MCr", "MCc", "MCri", "On+", "On+-")

_VARIANTS = ("add_only", "add_subtract")


@dataclass(frozen=True)
class StopRule:
    """Stop when the best score stops improving, or at the pass budget.

    ``evaluate(history)`` is True (stop) when the running best train score
    has not improved by more than ``epsilon`` for ``patience`` consecutive
    passes, or when ``len(history)`` reached ``max_passes``.
    """

    epsilon: float = 0.003
    patience: int = 3
    max_passes: int = 30

    def __post_init__(self):
        if self.epsilon < 0 or self.patience < 1 or self.max_passes < 1:
            raise ValueError(f"invalid stop rule {self}")

    def evaluate(self, history: Sequence[float]) -> bool:
        if not history:
            return False
        if len(history) >= self.max_passes:
            return True
        best = history[0]
        last_improve = 0
        for i in range(1, len(history)):
            if history[i] > best + self.epsilon:
                best = history[i]
                last_improve = i
        return (len(history) - 1 - last_improve) >= self.patience


@dataclass
class Centroid:
    """One prototype: its accumulator, binarized vector and bookkeeping.

    ``n_members`` is the total positive contribution weight in fixed-point
    units (seeding plus additions; subtractive updates do not reduce it),
    so it stays positive for every retained centroid.
    """

    acc: Accumulator
    proto: Hypervector
    n_members: int
    class_label: int

    def copy(self) -> "Centroid":
        return Centroid(self.acc.copy(), self.proto, self.n_members, self.class_label)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Centroid)
            and self.class_label == other.class_label
            and self.n_members == other.n_members
            and self.proto == other.proto
            and np.array_equal(self.acc.counts, other.acc.counts)
            and self.acc.n_added == other.acc.n_added
        )


@dataclass
class TrainStats:
    """Per-training diagnostics, serialized as a JSON sidecar."""

    strategy: str
    passes: int = 1
    readded_fraction_per_pass: list = field(default_factory=list)
    train_f1de_per_pass: list = field(default_factory=list)
    centroids_per_class: dict = field(default_factory=dict)
    centroids_before_reduction: dict | None = None
    weight_mean_per_class: dict | None = None
    weight_hist_per_class: dict | None = None  # 20 equal bins over [0, 1]
    weight_count_per_class: dict | None = None

    def to_dict(self) -> dict:
        def keyed(d):
            return None if d is None else {str(k): v for k, v in d.items()}

        return {
            "strategy": self.strategy,
            "passes": self.passes,
            "readded_fraction_per_pass": list(self.readded_fraction_per_pass),
            "train_f1de_per_pass": list(self.train_f1de_per_pass),
            "centroids_per_class": keyed(self.centroids_per_class),
            "centroids_before_reduction": keyed(self.centroids_before_reduction),
            "weight_mean_per_class": keyed(self.weight_mean_per_class),
            "weight_hist_per_class": keyed(self.weight_hist_per_class),
            "weight_count_per_class": keyed(self.weight_count_per_class),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainStats":
        def unkeyed(v):
            return None if v is None else {int(k): vv for k, vv in v.items()}

        return cls(
            strategy=d["strategy"],
            passes=d["passes"],
            readded_fraction_per_pass=list(d.get("readded_fraction_per_pass", [])),
            train_f1de_per_pass=list(d.get("train_f1de_per_pass", [])),
            centroids_per_class=unkeyed(d.get("centroids_per_class")) or {},
            centroids_before_reduction=unkeyed(d.get("centroids_before_reduction")),
            weight_mean_per_class=unkeyed(d.get("weight_mean_per_class")),
            weight_hist_per_class=unkeyed(d.get("weight_hist_per_class")),
            weight_count_per_class=unkeyed(d.get("weight_count_per_class")),
        )


class EncodedFile:
    """Encoded windows of one seizure file, in chronological order."""

    __slots__ = ("packed", "bits", "labels")

    def __init__(self, packed: np.ndarray, labels: np.ndarray, dim: int, bits: np.ndarray | None = None):
        packed = np.ascontiguousarray(packed, dtype=np.uint8)
        labels = np.asarray(labels, dtype=np.int64)
        if packed.ndim != 2 or packed.shape[0] != labels.shape[0]:
            raise ValueError("packed rows and labels must align")
        if packed.shape[1] != (dim + 7) // 8:
            raise ValueError(f"packed row width {packed.shape[1]} wrong for dim {dim}")
        self.packed = packed
        self.labels = labels
        if bits is None:
            bits = np.unpackbits(packed, axis=1, count=dim, bitorder="little")
        self.bits = bits

    def __len__(self) -> int:
        return len(self.labels)


class EncodedDataset:
    """Encoded training data: one or more files plus the tie-break vector."""

    __slots__ = ("files", "dim", "step_sec", "tie_break")

    def __init__(self, files: list[EncodedFile], dim: int, step_sec: float, tie_break: Hypervector):
        if not files or any(len(f) == 0 for f in files):
            raise ValueError("dataset must contain non-empty encoded files")
        if tie_break.dim != dim:
            raise ValueError(f"tie-break dim {tie_break.dim} != {dim}")
        self.files = files
        self.dim = dim
        self.step_sec = step_sec
        self.tie_break = tie_break

    @property
    def n_samples(self) -> int:
        return sum(len(f) for f in self.files)

    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for f in self.files:
            for lbl, n in zip(*np.unique(f.labels, return_counts=True)):
                counts[int(lbl)] = counts.get(int(lbl), 0) + int(n)
        return counts


@dataclass(frozen=True)
class Prediction:
    label: int
    similarity: float
    centroid_index: int


class Model:
    """An ordered set of centroids trained by one strategy."""

    __slots__ = ("dim", "strategy_tag", "centroids", "stats", "_sorted")

    def __init__(self, dim: int, strategy_tag: str, centroids: list[Centroid], stats: TrainStats | None = None):
        if strategy_tag not in STRATEGIES:
            raise ValueError(f"unknown strategy tag {strategy_tag!r}")
        if not centroids:
            raise ValueError("model must have at least one centroid")
        for c in centroids:
            if c.proto.dim != dim:
                raise ValueError("centroid dimension mismatch")
            if c.n_members <= 0:
                raise ValueError("centroid n_members must be positive")
        self.dim = dim
        self.strategy_tag = strategy_tag
        self.centroids = centroids
        self.stats = stats
        self._sorted = None

    def class_labels(self) -> list[int]:
        return sorted({c.class_label for c in self.centroids})

    def centroid_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for c in self.centroids:
            out[c.class_label] = out.get(c.class_label, 0) + 1
        return out

    def invalidate(self) -> None:
        self._sorted = None

    def sorted_view(self):
        """(packed matrix, class labels, original indices), sorted by
        (class label, centroid index): the prediction tie-break order."""
        if self._sorted is None:
            order = sorted(range(len(self.centroids)), key=lambda i: (self.centroids[i].class_label, i))
            matrix = np.stack([self.centroids[i].proto.data for i in order])
            labels = np.array([self.centroids[i].class_label for i in order], dtype=np.int64)
            self._sorted = (matrix, labels, np.array(order, dtype=np.int64))
        return self._sorted

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Model)
            and self.dim == other.dim
            and self.strategy_tag == other.strategy_tag
            and self.centroids == other.centroids
        )


def predict(model: Model, x: Hypervector) -> Prediction:
    """Nearest-centroid prediction by Hamming distance.

    Ties go to the lower class label, then the lower centroid index.
    """
    if x.dim != model.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {model.dim}")
    matrix, labels, orig = model.sorted_view()
    dists = _kernels.hamming_many(matrix, x.data)
    k = int(np.argmin(dists))  # first minimum = sorted tie-break order
    return Prediction(int(labels[k]), 1.0 - float(dists[k]) / model.dim, int(orig[k]))


def predict_file(model: Model, packed_rows: np.ndarray) -> np.ndarray:
    """Predicted labels for every encoded row of one file."""
    matrix, labels, _ = model.sorted_view()
    dists = np.stack([_kernels.hamming_many(packed_rows, matrix[k]) for k in range(matrix.shape[0])])
    return labels[np.argmin(dists, axis=0)]


# ---------------------------------------------------------------------------
# shared internals
# ---------------------------------------------------------------------------


def _check_two_classes(data: EncodedDataset) -> dict[int, int]:
    counts = data.class_counts()
    for cls in (0, 1):
        if counts.get(cls, 0) == 0:
            raise ValueError(f"class {cls} has zero samples")
    return counts


def _train_score(model: Model, data: EncodedDataset, smooth_sec: float, merge_gap_sec: float) -> float:
    """Mean post-processed F1DEmean over the training files."""
    scores = []
    for f in data.files:
        preds = predict_file(model, f.packed)
        pred_seq = post_process(LabelSequence(preds, data.step_sec), smooth_sec, merge_gap_sec)
        truth_seq = LabelSequence(f.labels, data.step_sec)
        scores.append(evaluate_sequences(pred_seq, truth_seq).f1_de_mean)
    return float(np.mean(scores))


def _rebinarize(c: Centroid, tie_bits: np.ndarray) -> None:
    c.proto = Hypervector.from_bits(majority_bits(c.acc.counts, tie_bits))


def _require_binary_labels(class_counts: dict[int, int], what: str) -> None:
    extra = set(class_counts) - {0, 1}
    if extra:
        raise ValueError(f"{what} needs binary labels, got extra classes {sorted(extra)}")


def _require_int32_headroom(data: EncodedDataset) -> None:
    # sequential trainers keep fixed-point counters in int32 for cache
    # friendliness; |counter| is bounded by (samples + 1) * scale
    total = sum(len(f) for f in data.files)
    if (total + 1) * FIXED_POINT_SCALE >= 2**31:
        raise ValueError(
            f"training set of {total} windows would overflow 32-bit accumulators"
        )


def _grown(arr: np.ndarray, cap: int) -> np.ndarray:
    out = np.zeros((cap,) + arr.shape[1:], dtype=arr.dtype)
    out[: arr.shape[0]] = arr
    return out


def _live_centroid(
    dim: int,
    counts_row: np.ndarray,
    n_added: int,
    n_updates: int,
    packed_row: np.ndarray,
    label: int,
    n_members: int,
) -> Centroid:
    """Centroid from one row of the live training arrays."""
    acc = Accumulator(dim)
    acc.counts[:] = counts_row
    acc.n_added = int(n_added)
    acc.n_updates = int(n_updates)
    return Centroid(acc, Hypervector(dim, packed_row.copy()), int(n_members), int(label))


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------


def train_single_pass(data: EncodedDataset, tag: str = "2C") -> Model:
    """One accumulated majority centroid per class."""
    counts = _check_two_classes(data)
    tie_bits = data.tie_break.bits
    centroids = []
    for cls in sorted(counts):
        acc = Accumulator(data.dim)
        ones = np.zeros(data.dim, dtype=np.int64)
        n_cls = 0
        for f in data.files:
            rows = f.bits[f.labels == cls]
            ones += rows.sum(axis=0, dtype=np.int64)
            n_cls += rows.shape[0]
        # identical to n_cls accumulate calls of weight 1
        acc.counts[:] = FIXED_POINT_SCALE * (2 * ones - n_cls)
        acc.n_added = FIXED_POINT_SCALE * n_cls
        acc.n_updates = n_cls
        proto = Hypervector.from_bits(majority_bits(acc.counts, tie_bits))
        centroids.append(Centroid(acc, proto, FIXED_POINT_SCALE * n_cls, cls))
    stats = TrainStats(strategy=tag, passes=1, centroids_per_class={c.class_label: 1 for c in centroids})
    return Model(data.dim, tag, centroids, stats)


def train_multi_pass(
    data: EncodedDataset,
    variant: str = "add_only",
    learning_rate: float = 1.0,
    stop: StopRule | None = None,
    smooth_sec: float = 5.0,
    merge_gap_sec: float = 30.0,
) -> Model:
    """Iterative refinement of the single-pass model.

    Each pass predicts every training sample against the prototypes frozen
    from the previous pass; mispredicted samples are re-added to their own
    class (and for ``add_subtract`` subtracted from the predicted class)
    scaled by ``learning_rate``. Prototypes re-binarize at the end of the
    pass. A pass with zero updates is a fixed point and stops immediately.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if not (learning_rate > 0):
        raise ValueError(f"learning_rate must be positive, got {learning_rate}")
    stop = stop or StopRule()
    tag = "2C+" if variant == "add_only" else "2C+-"
    model = train_single_pass(data, tag=tag)
    by_class = {c.class_label: c for c in model.centroids}
    tie_bits = data.tie_break.bits
    n_total = data.n_samples
    history = [_train_score(model, data, smooth_sec, merge_gap_sec)]
    readded: list[float] = []
    lr_fp = int(round(learning_rate * FIXED_POINT_SCALE))
    while not stop.evaluate(history):
        n_wrong = 0
        for f in data.files:
            preds = predict_file(model, f.packed)  # frozen prototypes
            for i in np.flatnonzero(preds != f.labels):
                y = int(f.labels[i])
                accumulate_bits(by_class[y].acc, f.bits[i], learning_rate)
                by_class[y].n_members += lr_fp
                if variant == "add_subtract":
                    accumulate_bits(by_class[int(preds[i])].acc, f.bits[i], learning_rate, sign=-1)
                n_wrong += 1
        for c in model.centroids:
            _rebinarize(c, tie_bits)
        model.invalidate()
        readded.append(n_wrong / n_total)
        history.append(_train_score(model, data, smooth_sec, merge_gap_sec))
        if n_wrong == 0:
            break
    model.stats = TrainStats(
        strategy=tag,
        passes=len(history),
        readded_fraction_per_pass=readded,
        train_f1de_per_pass=history,
        centroids_per_class={c.class_label: 1 for c in model.centroids},
    )
    return model


def train_multi_centroid(data: EncodedDataset) -> Model:
    """Single pass growing a centroid set: accumulate on correct predictions
    into the winning centroid, spawn a new centroid of the true class on
    each misprediction. The first sample of a class seeds that class."""
    _require_binary_labels(_check_two_classes(data), "multi-centroid training")
    _require_int32_headroom(data)
    tie_bits = data.tie_break.bits
    dim = data.dim
    nbytes = (dim + 7) // 8
    cap = 8
    matrix = np.zeros((cap, nbytes), dtype=np.uint8)
    counts = np.zeros((cap, dim), dtype=np.int32)
    cls_of = np.zeros(cap, dtype=np.int64)
    added = np.zeros(cap, dtype=np.int64)
    updates = np.zeros(cap, dtype=np.int64)
    seen = np.zeros(2, dtype=np.int8)
    k = 0
    for f in data.files:
        labels = np.ascontiguousarray(f.labels, dtype=np.int64)
        i = 0
        while i < len(f):
            k, i = _kernels.mc_train_file(
                f.packed, f.bits, labels, tie_bits,
                matrix, counts, cls_of, added, updates, seen,
                k, i, FIXED_POINT_SCALE,
            )
            if i < len(f):  # bank full mid-file: double it and resume
                cap *= 2
                matrix = _grown(matrix, cap)
                counts = _grown(counts, cap)
                cls_of = _grown(cls_of, cap)
                added = _grown(added, cap)
                updates = _grown(updates, cap)
    # every update added weight 1, so member weight equals net added weight
    centroids = [
        _live_centroid(dim, counts[r], added[r], updates[r], matrix[r], cls_of[r], added[r])
        for r in range(k)
    ]
    model = Model(data.dim, "MC", centroids)
    model.stats = TrainStats(
        strategy="MC", passes=1, centroids_per_class=model.centroid_counts()
    )
    return model


def reduce_centroids(
    model: Model,
    method: str = "remove",
    keep_fraction: float | None = None,
    min_members: float = 2.0,
    min_members_fraction: float = 0.02,
    tie_break: Hypervector | None = None,
) -> Model:
    """Shrink a multi-centroid model per class.

    Default retention keeps centroids whose member weight reaches
    ``max(min_members, min_members_fraction * class sample weight)``; at
    least one centroid (the largest) always survives per class. When
    ``keep_fraction`` is given it overrides the rule and the top
    ``ceil(keep_fraction * count)`` centroids by member weight survive.

    ``method="remove"`` drops the rest; ``method="cluster"`` merges each
    dropped centroid (largest first) into the most similar surviving
    centroid of its class, summing counts and members and re-binarizing
    the target after each merge (``tie_break`` required).
    """
    if method not in ("remove", "cluster"):
        raise ValueError(f"unknown reduction method {method!r}")
    if keep_fraction is not None and not (0 < keep_fraction <= 1):
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    if method == "cluster" and tie_break is None:
        raise ValueError("cluster reduction needs the experiment tie-break vector")
    before = model.centroid_counts()
    survivors_idx: list[int] = []
    dropped_idx: list[int] = []
    for cls in model.class_labels():
        idxs = [i for i, c in enumerate(model.centroids) if c.class_label == cls]
        by_size = sorted(idxs, key=lambda i: (-model.centroids[i].n_members, i))
        if keep_fraction is not None:
            n_keep = max(1, math.ceil(keep_fraction * len(idxs)))
            keep = set(by_size[:n_keep])
        else:
            total = sum(model.centroids[i].n_members for i in idxs)
            thr = max(min_members * FIXED_POINT_SCALE, min_members_fraction * total)
            keep = {i for i in idxs if model.centroids[i].n_members >= thr}
            if not keep:
                keep = {by_size[0]}
        survivors_idx.extend(i for i in idxs if i in keep)
        dropped_idx.extend(i for i in by_size if i not in keep)
    survivors_idx.sort()
    new_centroids = {i: model.centroids[i].copy() for i in survivors_idx}
    if method == "cluster":
        tie_bits = tie_break.bits
        # largest dropped first; later merges see already-updated prototypes
        dropped_idx.sort(key=lambda i: (-model.centroids[i].n_members, i))
        for di in dropped_idx:
            dc = model.centroids[di]
            same = [i for i in survivors_idx if new_centroids[i].class_label == dc.class_label]
            dists = np.array(
                [_kernels.hamming_one(new_centroids[i].proto.data, dc.proto.data) for i in same]
            )
            target = new_centroids[same[int(np.argmin(dists))]]
            target.acc.counts += dc.acc.counts
            target.acc.n_added += dc.acc.n_added
            target.acc.n_updates += dc.acc.n_updates
            target.n_members += dc.n_members
            _rebinarize(target, tie_bits)
    tag = "MCr" if method == "remove" else "MCc"
    out = Model(model.dim, tag, [new_centroids[i] for i in survivors_idx])
    out.stats = TrainStats(
        strategy=tag,
        passes=1,
        centroids_per_class=out.centroid_counts(),
        centroids_before_reduction=before,
    )
    return out


def fine_tune_multi_pass(
    model: Model,
    data: EncodedDataset,
    learning_rate: float = 1.0,
    stop: StopRule | None = None,
    smooth_sec: float = 5.0,
    merge_gap_sec: float = 30.0,
) -> Model:
    """Multi-pass add/subtract refinement of an existing centroid set.

    Mispredicted samples are added to the most similar centroid of their
    own class and subtracted from the centroid that won, both under the
    prototypes frozen from the previous pass. No centroids are created or
    dropped. The input model is left untouched.
    """
    if not (learning_rate > 0):
        raise ValueError(f"learning_rate must be positive, got {learning_rate}")
    stop = stop or StopRule()
    work = Model(model.dim, model.strategy_tag, [c.copy() for c in model.centroids])
    tie_bits = data.tie_break.bits
    lr_fp = int(round(learning_rate * FIXED_POINT_SCALE))
    history = [_train_score(work, data, smooth_sec, merge_gap_sec)]
    readded: list[float] = []
    n_total = data.n_samples
    while not stop.evaluate(history):
        matrix, sorted_labels, orig = work.sorted_view()
        # contiguous row range of each class in the sorted order
        class_rows = {
            cls: (
                int(np.searchsorted(sorted_labels, cls, "left")),
                int(np.searchsorted(sorted_labels, cls, "right")),
            )
            for cls in work.class_labels()
        }
        n_wrong = 0
        for f in data.files:
            dists = np.stack(
                [_kernels.hamming_many(f.packed, matrix[k]) for k in range(matrix.shape[0])]
            )
            best_k = np.argmin(dists, axis=0)
            preds = sorted_labels[best_k]
            for i in np.flatnonzero(preds != f.labels):
                y = int(f.labels[i])
                lo, hi = class_rows[y]
                target_k = lo + int(np.argmin(dists[lo:hi, i]))
                target = work.centroids[int(orig[target_k])]
                wrong = work.centroids[int(orig[best_k[i]])]
                accumulate_bits(target.acc, f.bits[i], learning_rate)
                target.n_members += lr_fp
                accumulate_bits(wrong.acc, f.bits[i], learning_rate, sign=-1)
                n_wrong += 1
        for c in work.centroids:
            _rebinarize(c, tie_bits)
        work.invalidate()
        readded.append(n_wrong / n_total)
        history.append(_train_score(work, data, smooth_sec, merge_gap_sec))
        if n_wrong == 0:
            break
    work.stats = TrainStats(
        strategy=work.strategy_tag,
        passes=len(history),
        readded_fraction_per_pass=readded,
        train_f1de_per_pass=history,
        centroids_per_class=work.centroid_counts(),
        centroids_before_reduction=model.stats.centroids_before_reduction if model.stats else None,
    )
    return work


def train_online(data: EncodedDataset, variant: str = "add_only") -> Model:
    """Weighted single pass: one centroid per class, each subsequent sample
    added with weight ``1 - similarity`` to its class prototype, which
    re-binarizes immediately. ``add_subtract`` additionally subtracts the
    same weight from the wrongly predicted class when the updated model
    still mispredicts the sample. The first sample of a class seeds its
    centroid with weight 1 (not part of the weight log)."""
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    _require_binary_labels(_check_two_classes(data), "online training")
    _require_int32_headroom(data)
    tag = "On+" if variant == "add_only" else "On+-"
    tie_bits = data.tie_break.bits
    dim = data.dim
    nbytes = (dim + 7) // 8
    # quantized update weight by Hamming distance: round((h / dim) * scale)
    wfp_table = np.rint(np.arange(dim + 1) / dim * FIXED_POINT_SCALE).astype(np.int64)
    # row index == class label, so the rows are already in predict order
    protos = np.zeros((2, nbytes), dtype=np.uint8)
    counts = np.zeros((2, dim), dtype=np.int32)
    adds = np.zeros(2, dtype=np.int64)
    updates = np.zeros(2, dtype=np.int64)
    members = np.zeros(2, dtype=np.int64)
    seeded = np.zeros(2, dtype=np.int8)
    weights: dict[int, list[float]] = {0: [], 1: []}
    subtract = variant == "add_subtract"
    for f in data.files:
        labels = np.ascontiguousarray(f.labels, dtype=np.int64)
        out_h = np.empty(len(f), dtype=np.int64)
        _kernels.online_train_file(
            f.packed, f.bits, labels, tie_bits,
            protos, counts, adds, updates, members, seeded,
            wfp_table, subtract, FIXED_POINT_SCALE, out_h,
        )
        for cls in (0, 1):  # seeds (h = -1) stay out of the weight log
            sel = (labels == cls) & (out_h >= 0)
            weights[cls].extend((out_h[sel] / dim).tolist())
    centroids = [
        _live_centroid(dim, counts[cls], adds[cls], updates[cls], protos[cls], cls, members[cls])
        for cls in (0, 1)
    ]
    model = Model(dim, tag, centroids)
    hist_edges = np.linspace(0.0, 1.0, 21)
    model.stats = TrainStats(
        strategy=tag,
        passes=1,
        centroids_per_class=model.centroid_counts(),
        weight_mean_per_class={
            cls: (float(np.mean(ws)) if ws else 0.0) for cls, ws in weights.items()
        },
        weight_hist_per_class={
            cls: np.histogram(ws, bins=hist_edges)[0].tolist() for cls, ws in weights.items()
        },
        weight_count_per_class={cls: len(ws) for cls, ws in weights.items()},
    )
    return model


def train_strategy(
    tag: str,
    data: EncodedDataset,
    learning_rate: float = 1.0,
    stop: StopRule | None = None,
    keep_fraction: float | None = None,
    min_members: float = 2.0,
    min_members_fraction: float = 0.02,
    smooth_sec: float = 5.0,
    merge_gap_sec: float = 30.0,
) -> Model:
    """Train by strategy tag; see the module docstring for the tag table."""
    if tag == "2C":
        return train_single_pass(data)
    if tag in ("2C+", "2C+-"):
        variant = "add_only" if tag == "2C+" else "add_subtract"
        return train_multi_pass(data, variant, learning_rate, stop, smooth_sec, merge_gap_sec)
    if tag == "MC":
        return train_multi_centroid(data)
    if tag in ("MCr", "MCc", "MCri"):
        mc = train_multi_centroid(data)
        method = "cluster" if tag == "MCc" else "remove"
        reduced = reduce_centroids(
            mc, method, keep_fraction, min_members, min_members_fraction, data.tie_break
        )
        if tag != "MCri":
            return reduced
        tuned = fine_tune_multi_pass(reduced, data, learning_rate, stop, smooth_sec, merge_gap_sec)
        out = Model(tuned.dim, "MCri", tuned.centroids)
        out.stats = tuned.stats
        out.stats.strategy = "MCri"
        out.stats.centroids_before_reduction = reduced.stats.centroids_before_reduction
        return out
    if tag in ("On+", "On+-"):
        return train_online(data, "add_only" if tag == "On+" else "add_subtract")
    raise ValueError(f"unknown strategy tag {tag!r}; expected one of {STRATEGIES}")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_MODEL_MAGIC = b"HDMD"
_MODEL_HEADER = struct.Struct("<4sB8sQI")
_CENTROID_HEADER = struct.Struct("<iq")


def serialize_model(model: Model) -> bytes:
    """Fixed-width header and tag, then per-centroid label, member weight,
    accumulator and prototype blocks. Equal-shaped models serialize to
    equal byte counts regardless of strategy tag length."""
    tag_raw = model.strategy_tag.encode("ascii")
    head = _MODEL_HEADER.pack(_MODEL_MAGIC, 1, tag_raw.ljust(8, b"\x00"), model.dim, len(model.centroids))
    parts = [head]
    for c in model.centroids:
        parts.append(_CENTROID_HEADER.pack(c.class_label, c.n_members))
        parts.append(serialize_accumulator(c.acc))
        parts.append(serialize_hypervector(c.proto))
    return b"".join(parts)


def deserialize_model(buf: bytes) -> Model:
    if len(buf) < _MODEL_HEADER.size:
        raise ValueError("truncated model header at byte 0")
    magic, version, tag_raw, dim, n_centroids = _MODEL_HEADER.unpack_from(buf, 0)
    if magic != _MODEL_MAGIC:
        raise ValueError(f"bad model magic {magic!r} at byte 0")
    if version != 1:
        raise ValueError(f"unsupported model version {version}")
    tag = tag_raw.rstrip(b"\x00").decode("ascii")
    offset = _MODEL_HEADER.size
    centroids = []
    for _ in range(n_centroids):
        if len(buf) - offset < _CENTROID_HEADER.size:
            raise ValueError(f"truncated centroid header at byte {offset}")
        class_label, n_members = _CENTROID_HEADER.unpack_from(buf, offset)
        offset += _CENTROID_HEADER.size
        acc, offset = deserialize_accumulator(buf, offset)
        proto, offset = deserialize_hypervector(buf, offset)
        if acc.dim != dim or proto.dim != dim:
            raise ValueError(f"centroid dim mismatch in model file at byte {offset}")
        centroids.append(Centroid(acc, proto, int(n_members), int(class_label)))
    if offset != len(buf):
        raise ValueError(f"{len(buf) - offset} trailing bytes after model")
    return Model(int(dim), tag, centroids)


def save_model(model: Model, path) -> None:
    """Write the model binary plus a TrainStats JSON sidecar when present."""
    with open(path, "wb") as fh:
        fh.write(serialize_model(model))
    if model.stats is not None:
        with open(f"{path}.stats.json", "w", encoding="utf-8") as fh:
            json.dump(model.stats.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        model = deserialize_model(fh.read())
    try:
        with open(f"{path}.stats.json", "r", encoding="utf-8") as fh:
            model.stats = TrainStats.from_dict(json.load(fh))
    except FileNotFoundError:
        pass
    return model
