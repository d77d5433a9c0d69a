"""Event-level scoring of windowed binary label sequences.

Predictions are post-processed first (majority smoothing, then gap
merging), always in that order and never across file boundaries. Metrics
come in two levels:

* episode: maximal 1-runs are events; a truth event counts as one TP when
  any predicted event overlaps it, a predicted event with no truth overlap
  is one FP. Several predicted fragments over one truth event still count
  as a single TP with no FPs; one prediction spanning two truth events
  scores both.
* duration: per-sample TP/FP/FN.

Empty-denominator conventions (fixed, shared by both levels): TPR with no
truth is 1.0 when there are also no predictions, else 0.0; PPV with no
predictions is 1.0 when there is also no truth, else 0.0; F1 is 0.0 when
TPR + PPV is 0. ``f1_de_mean`` is the arithmetic mean of the two F1 scores.

The module also provides the two-sided Wilcoxon signed-rank test used for
paired per-subject comparisons: exact by full sign enumeration up to 12
non-zero differences, normal approximation with tie correction above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InsufficientDataError",
    "LabelSequence",
    "MetricsReport",
    "WilcoxonResult",
    "smooth_labels",
    "merge_events",
    "post_process",
    "label_blocks",
    "episode_counts",
    "duration_counts",
    "evaluate_sequences",
    "wilcoxon_signed_rank",
]


class InsufficientDataError(ValueError):
    """Raised when a statistic has too little data to be meaningful."""


@dataclass(frozen=True)
class LabelSequence:
    """Binary labels of consecutive windows at a uniform step."""

    labels: np.ndarray
    step_sec: float

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a non-empty 1-d array")
        if np.any((labels != 0) & (labels != 1)):
            raise ValueError("labels must be 0 or 1")
        if not (self.step_sec > 0):
            raise ValueError(f"step_sec must be positive, got {self.step_sec}")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.labels.size


def smooth_labels(seq: LabelSequence, window_sec: float = 5.0) -> LabelSequence:
    """Centered majority vote over ``round(window_sec / step)`` labels.

    The window is truncated at the edges; voting ties go to 1. A window of
    one label (or fewer), including ``window_sec=0``, leaves the sequence
    unchanged.
    """
    if window_sec < 0:
        raise ValueError(f"window_sec must be non-negative, got {window_sec}")
    w = round(window_sec / seq.step_sec)
    if w <= 1:
        return seq
    n = len(seq)
    idx = np.arange(n)
    lo = np.clip(idx - w // 2, 0, n)
    hi = np.clip(idx + (w - 1) // 2 + 1, 0, n)
    cs = np.concatenate([[0], np.cumsum(seq.labels, dtype=np.int64)])
    ones = cs[hi] - cs[lo]
    out = (2 * ones >= (hi - lo)).astype(np.int8)
    return LabelSequence(out, seq.step_sec)


def merge_events(seq: LabelSequence, gap_sec: float = 30.0) -> LabelSequence:
    """Fill 0-gaps strictly shorter than ``gap_sec`` between two 1-runs.

    Gaps of exactly ``gap_sec`` are kept (so ``gap_sec=0`` merges nothing);
    leading and trailing zeros are never filled. Idempotent.
    """
    if gap_sec < 0:
        raise ValueError(f"gap_sec must be non-negative, got {gap_sec}")
    blocks = label_blocks(seq.labels)
    if len(blocks) < 2:
        return seq
    out = seq.labels.copy()
    for (_, prev_end), (next_start, _) in zip(blocks, blocks[1:]):
        if (next_start - prev_end) * seq.step_sec < gap_sec:
            out[prev_end:next_start] = 1
    return LabelSequence(out, seq.step_sec)


def post_process(seq: LabelSequence, smooth_sec: float = 5.0, merge_gap_sec: float = 30.0) -> LabelSequence:
    """Smoothing followed by gap merging, the fixed pipeline order."""
    return merge_events(smooth_labels(seq, smooth_sec), merge_gap_sec)


def label_blocks(labels: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of 1s as half-open index intervals [start, end)."""
    padded = np.concatenate([[0], np.asarray(labels, dtype=np.int8), [0]])
    edges = np.flatnonzero(np.diff(padded))
    return [(int(edges[i]), int(edges[i + 1])) for i in range(0, len(edges), 2)]


def _check_pair(pred: LabelSequence, truth: LabelSequence) -> None:
    if len(pred) != len(truth):
        raise ValueError(f"sequence length mismatch: {len(pred)} vs {len(truth)}")
    if pred.step_sec != truth.step_sec:
        raise ValueError(f"step mismatch: {pred.step_sec} vs {truth.step_sec}")


def episode_counts(pred: LabelSequence, truth: LabelSequence) -> tuple[int, int, int]:
    """Event-level (tp, fp, fn) by block overlap."""
    _check_pair(pred, truth)
    truth_blocks = label_blocks(truth.labels)
    pred_blocks = label_blocks(pred.labels)
    tp = sum(
        1 for ts, te in truth_blocks if any(ps < te and ts < pe for ps, pe in pred_blocks)
    )
    fn = len(truth_blocks) - tp
    fp = sum(
        1 for ps, pe in pred_blocks if not any(ps < te and ts < pe for ts, te in truth_blocks)
    )
    return tp, fp, fn


def duration_counts(pred: LabelSequence, truth: LabelSequence) -> tuple[int, int, int]:
    """Per-sample (tp, fp, fn)."""
    _check_pair(pred, truth)
    p = pred.labels.astype(bool)
    t = truth.labels.astype(bool)
    return int(np.sum(p & t)), int(np.sum(p & ~t)), int(np.sum(~p & t))


def _rates(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    if tp + fn == 0:
        tpr = 1.0 if tp + fp == 0 else 0.0
    else:
        tpr = tp / (tp + fn)
    if tp + fp == 0:
        ppv = 1.0 if tp + fn == 0 else 0.0
    else:
        ppv = tp / (tp + fp)
    f1 = 0.0 if tpr + ppv == 0 else 2 * tpr * ppv / (tpr + ppv)
    return tpr, ppv, f1


@dataclass(frozen=True)
class MetricsReport:
    """Episode and duration scores plus the raw counts behind them."""

    tpr_episode: float
    ppv_episode: float
    f1_episode: float
    tpr_duration: float
    ppv_duration: float
    f1_duration: float
    f1_de_mean: float
    tp_episode: int
    fp_episode: int
    fn_episode: int
    tp_duration: int
    fp_duration: int
    fn_duration: int

    @classmethod
    def from_counts(cls, ep: tuple[int, int, int], du: tuple[int, int, int]) -> "MetricsReport":
        tpr_e, ppv_e, f1_e = _rates(*ep)
        tpr_d, ppv_d, f1_d = _rates(*du)
        return cls(
            tpr_e, ppv_e, f1_e, tpr_d, ppv_d, f1_d, (f1_e + f1_d) / 2.0,
            ep[0], ep[1], ep[2], du[0], du[1], du[2],
        )

    SCORE_FIELDS = (
        "tpr_episode", "ppv_episode", "f1_episode",
        "tpr_duration", "ppv_duration", "f1_duration", "f1_de_mean",
    )
    COUNT_FIELDS = (
        "tp_episode", "fp_episode", "fn_episode",
        "tp_duration", "fp_duration", "fn_duration",
    )

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.SCORE_FIELDS + self.COUNT_FIELDS}


def evaluate_sequences(pred: LabelSequence, truth: LabelSequence) -> MetricsReport:
    """Score an already post-processed prediction sequence against truth."""
    return MetricsReport.from_counts(episode_counts(pred, truth), duration_counts(pred, truth))


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # W+, the positive-difference rank sum
    p_value: float
    n: int  # non-zero differences used
    method: str  # "exact" or "approx"


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def wilcoxon_signed_rank(a, b, exact_threshold: int = 12) -> WilcoxonResult:
    """Two-sided paired Wilcoxon signed-rank test.

    Zero differences are dropped; fewer than 5 non-zero differences raise
    :class:`InsufficientDataError`. Ties in |difference| get average ranks.
    Up to ``exact_threshold`` non-zero differences the p-value is exact,
    from the full 2^n sign enumeration; above that a normal approximation
    with tie correction is used. Symmetric in its arguments.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"paired samples must be 1-d of equal length, got {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite values in paired samples")
    d = a - b
    d = d[d != 0.0]
    n = d.size
    if n < 5:
        raise InsufficientDataError(f"only {n} non-zero differences, need at least 5")
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= exact_threshold:
        # ranks are multiples of 0.5, so subset sums compare exactly
        masks = (np.arange(1 << n)[:, None] >> np.arange(n)) & 1
        dist = masks @ ranks
        count_le = int(np.sum(dist <= w_plus))
        count_ge = int(np.sum(dist >= w_plus))
        p = min(1.0, 2.0 * min(count_le, count_ge) / (1 << n))
        return WilcoxonResult(w_plus, p, n, "exact")
    mu = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts)).sum()) / 48.0
    sigma2 = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    z = (w_plus - mu) / math.sqrt(sigma2)
    p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))
    return WilcoxonResult(w_plus, p, n, "approx")
