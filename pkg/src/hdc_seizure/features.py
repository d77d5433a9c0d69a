"""Per-window, per-channel feature extraction for biosignal classification.

Families
--------
* ``mean_amplitude``: mean absolute amplitude
* ``spectral``: Welch PSD summary (total power, six relative band powers,
  peak frequency) over 1 s Hann segments with 50% overlap
* ``shannon`` / ``renyi`` / ``tsallis``: histogram distribution entropies
* ``sample``: sample entropy (Chebyshev distance, self-matches excluded)
* ``permutation``: ordinal-pattern entropy, normalized by ``ln(order!)``

A registry is an ordered list of :class:`FeatureSpec` groups; each group
emits one or more named columns. The default registry has 24 columns per
channel. Degenerate windows follow fixed conventions (constant window:
histogram entropies 0, sample entropy 0; zero-power window: relative band
powers and peak frequency 0; no template matches: ``e_max``), so every
feature value is finite for finite input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import welch

from . import _kernels

__all__ = [
    "BANDS",
    "SPECTRAL_NAMES",
    "FeatureSpec",
    "FeatureWindow",
    "FeatureTable",
    "mean_amplitude",
    "spectral_features",
    "shannon_entropy",
    "renyi_entropy",
    "tsallis_entropy",
    "sample_entropy",
    "permutation_entropy",
    "default_registry",
    "build_registry",
    "registry_columns",
    "extract_features",
]

# band name, lower edge (inclusive), upper edge (exclusive; last band closed)
BANDS = (
    ("low", 0.0, 0.5),
    ("delta", 0.5, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 12.0),
    ("beta", 12.0, 30.0),
    ("gamma", 30.0, 45.0),
)

SPECTRAL_NAMES = ("total_power",) + tuple(f"rel_{name}" for name, _, _ in BANDS) + ("peak_freq",)

_MIN_FS = 90.0  # gamma band extends to 45 Hz


def mean_amplitude(x: np.ndarray) -> float:
    """Mean absolute amplitude of the window."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty window")
    return float(np.mean(np.abs(x)))


def spectral_features(x: np.ndarray, fs: float) -> np.ndarray:
    """Welch PSD summary: total power, relative band powers, peak frequency.

    1 s Hann segments with 50% overlap, no detrending (the low band keeps
    its DC bin). Relative powers are band power over total power, so power
    above 45 Hz stays in the denominator and the six ratios sum to <= 1.
    A zero-power window yields zeros everywhere.
    """
    x = np.asarray(x, dtype=np.float64)
    if fs < _MIN_FS:
        raise ValueError(f"sampling rate {fs} Hz too low, need >= {_MIN_FS} Hz")
    nperseg = int(round(fs))
    if x.size < nperseg:
        raise ValueError(f"window of {x.size} samples shorter than one 1 s segment ({nperseg})")
    freqs, psd = welch(
        x, fs=fs, window="hann", nperseg=nperseg, noverlap=nperseg // 2,
        detrend=False, scaling="density",
    )
    df = freqs[1] - freqs[0]
    total = float(psd.sum() * df)
    out = np.zeros(len(SPECTRAL_NAMES))
    out[0] = total
    if total > 0.0:
        for i, (_, lo, hi) in enumerate(BANDS):
            mask = (freqs >= lo) & ((freqs <= hi) if i == len(BANDS) - 1 else (freqs < hi))
            out[1 + i] = float(psd[mask].sum() * df) / total
        out[-1] = float(freqs[np.argmax(psd)])
    return out


def _histogram_probs(x: np.ndarray, n_bins: int) -> np.ndarray:
    if n_bins < 2:
        raise ValueError(f"n_bins must be at least 2, got {n_bins}")
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty window")
    counts, _ = np.histogram(x, bins=n_bins)
    return counts / x.size


def shannon_entropy(x: np.ndarray, n_bins: int = 100) -> float:
    """Shannon entropy (nats) of the equal-width amplitude histogram."""
    p = _histogram_probs(x, n_bins)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def renyi_entropy(x: np.ndarray, alpha: float, n_bins: int = 100) -> float:
    """Renyi entropy ``log(sum p^alpha) / (1 - alpha)``; alpha > 0, != 1."""
    if alpha <= 0 or alpha == 1:
        raise ValueError(f"alpha must be positive and != 1, got {alpha}")
    p = _histogram_probs(x, n_bins)
    p = p[p > 0]
    return float(np.log((p ** alpha).sum()) / (1.0 - alpha))


def tsallis_entropy(x: np.ndarray, q: float, n_bins: int = 100) -> float:
    """Tsallis entropy ``(1 - sum p^q) / (q - 1)``; q > 0, != 1."""
    if q <= 0 or q == 1:
        raise ValueError(f"q must be positive and != 1, got {q}")
    p = _histogram_probs(x, n_bins)
    p = p[p > 0]
    return float((1.0 - (p ** q).sum()) / (q - 1.0))


def sample_entropy(x: np.ndarray, m: int = 2, r_factor: float = 0.2, e_max: float = 10.0) -> float:
    """Sample entropy ``-ln(A/B)`` with tolerance ``r = r_factor * std(x)``.

    A and B count length ``m+1`` and length ``m`` template pairs within
    Chebyshev distance r (self-matches excluded). Windows with no matching
    extensions (A == 0), or too short to form template pairs, return
    ``e_max``. A constant window matches everywhere and returns 0.
    """
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty window")
    r = r_factor * float(np.std(x))
    a, b = _kernels.sampen_counts(x, m, r)
    if a == 0 or b == 0:
        return float(e_max)
    return float(-math.log(a / b))


def permutation_entropy(x: np.ndarray, order: int, delay: int = 1) -> float:
    """Ordinal-pattern entropy normalized to [0, 1] by ``ln(order!)``.

    Patterns are the stable argsort of each lagged tuple, so rank ties
    resolve by index order. A monotone window has a single pattern and
    entropy 0; i.i.d. noise approaches 1.
    """
    if order < 2:
        raise ValueError(f"order must be at least 2, got {order}")
    if delay < 1:
        raise ValueError(f"delay must be at least 1, got {delay}")
    x = np.asarray(x, dtype=np.float64)
    if x.size <= order * delay:
        raise ValueError(f"window of {x.size} samples too short for order {order}, delay {delay}")
    n_win = x.size - (order - 1) * delay
    idx = np.arange(n_win)[:, None] + np.arange(order)[None, :] * delay
    patterns = np.argsort(x[idx], axis=1, kind="stable")
    # encode each pattern as an integer in base `order`
    base = order ** np.arange(order, dtype=np.int64)
    codes = patterns @ base
    _, counts = np.unique(codes, return_counts=True)
    p = counts / n_win
    h = -(p * np.log(p)).sum()
    return float(h / math.lgamma(order + 1))


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureSpec:
    """One feature family instance; emits ``len(names)`` columns."""

    family: str
    params: dict = field(default_factory=dict)
    names: tuple[str, ...] = ()

    def compute(self, x: np.ndarray, fs: float) -> np.ndarray:
        if self.family == "mean_amplitude":
            return np.array([mean_amplitude(x)])
        if self.family == "spectral":
            return spectral_features(x, fs)
        if self.family == "shannon":
            return np.array([shannon_entropy(x, **self.params)])
        if self.family == "renyi":
            return np.array([renyi_entropy(x, **self.params)])
        if self.family == "tsallis":
            return np.array([tsallis_entropy(x, **self.params)])
        if self.family == "sample":
            return np.array([sample_entropy(x, **self.params)])
        if self.family == "permutation":
            return np.array([permutation_entropy(x, **self.params)])
        raise ValueError(f"unknown feature family {self.family!r}")


def default_registry() -> list[FeatureSpec]:
    """Mean amplitude, 8 spectral columns and 15 entropy columns (24 total)."""
    return build_registry()


def build_registry(
    n_bins: int = 100,
    renyi_alphas: Sequence[float] = (2, 3, 4),
    tsallis_qs: Sequence[float] = (2, 3, 4),
    sample_ms: Sequence[int] = (2, 3),
    sample_r_factor: float = 0.2,
    permutation_orders: Sequence[int] = (3, 5, 7),
    permutation_delays: Sequence[int] = (1, 2),
) -> list[FeatureSpec]:
    def num(v: float) -> str:
        return f"{v:g}"

    registry = [
        FeatureSpec("mean_amplitude", {}, ("mean_amplitude",)),
        FeatureSpec("spectral", {}, SPECTRAL_NAMES),
        FeatureSpec("shannon", {"n_bins": n_bins}, ("shannon",)),
    ]
    for a in renyi_alphas:
        registry.append(FeatureSpec("renyi", {"alpha": a, "n_bins": n_bins}, (f"renyi_a{num(a)}",)))
    for q in tsallis_qs:
        registry.append(FeatureSpec("tsallis", {"q": q, "n_bins": n_bins}, (f"tsallis_q{num(q)}",)))
    for m in sample_ms:
        registry.append(
            FeatureSpec("sample", {"m": int(m), "r_factor": sample_r_factor}, (f"sampen_m{m}",))
        )
    for order in permutation_orders:
        for delay in permutation_delays:
            registry.append(
                FeatureSpec(
                    "permutation",
                    {"order": int(order), "delay": int(delay)},
                    (f"perm_o{order}_d{delay}",),
                )
            )
    return registry


def registry_columns(registry: Sequence[FeatureSpec]) -> list[str]:
    cols: list[str] = []
    for spec in registry:
        cols.extend(spec.names)
    if len(set(cols)) != len(cols):
        raise ValueError("duplicate feature column names in registry")
    return cols


# ---------------------------------------------------------------------------
# windowed extraction
# ---------------------------------------------------------------------------


@dataclass
class FeatureWindow:
    """Feature values of one window: ``values[channel, column]``."""

    t_start: float
    t_end: float
    label: int
    values: np.ndarray


class FeatureTable:
    """Sequence of :class:`FeatureWindow` backed by one dense array."""

    def __init__(
        self,
        t_start: np.ndarray,
        t_end: np.ndarray,
        labels: np.ndarray,
        values: np.ndarray,
        channels: list[str],
        columns: list[str],
    ):
        n = len(t_start)
        if values.shape != (n, len(channels), len(columns)):
            raise ValueError(
                f"values shape {values.shape} inconsistent with "
                f"{n} windows x {len(channels)} channels x {len(columns)} columns"
            )
        self.t_start = np.asarray(t_start, dtype=np.float64)
        self.t_end = np.asarray(t_end, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.values = values
        self.channels = list(channels)
        self.columns = list(columns)

    def __len__(self) -> int:
        return len(self.t_start)

    def __getitem__(self, i: int) -> FeatureWindow:
        return FeatureWindow(
            float(self.t_start[i]), float(self.t_end[i]), int(self.labels[i]), self.values[i]
        )

    def select(self, idx: np.ndarray) -> "FeatureTable":
        return FeatureTable(
            self.t_start[idx], self.t_end[idx], self.labels[idx], self.values[idx],
            self.channels, self.columns,
        )


def window_count(duration_sec: float, window_sec: float, step_sec: float) -> int:
    """Number of full windows: floor((duration - window) / step) + 1."""
    if duration_sec + 1e-9 < window_sec:
        return 0
    return int(math.floor((duration_sec - window_sec) / step_sec + 1e-9)) + 1


def extract_features(recording, window_sec: float, step_sec: float, registry) -> FeatureTable:
    """Slide a window over all channels of a recording and compute features.

    Windows start at t = 0 and advance by ``step_sec``; only full windows
    are produced. A window's label is 1 when its midpoint falls inside any
    annotated ictal interval ``[start, end)``.
    """
    if window_sec <= 0 or step_sec <= 0:
        raise ValueError("window_sec and step_sec must be positive")
    columns = registry_columns(registry)
    fs = recording.fs
    n_samples = recording.samples.shape[1]
    duration = n_samples / fs
    n_win = window_count(duration, window_sec, step_sec)
    if n_win == 0:
        raise ValueError(f"recording of {duration:.3f} s shorter than one {window_sec} s window")
    win_n = int(round(window_sec * fs))
    n_chan = len(recording.channels)
    values = np.empty((n_win, n_chan, len(columns)))
    t_start = np.empty(n_win)
    labels = np.zeros(n_win, dtype=np.int64)
    intervals = list(recording.annotations)
    for k in range(n_win):
        t0 = k * step_sec
        i0 = int(round(t0 * fs))
        seg = recording.samples[:, i0 : i0 + win_n]
        t_start[k] = t0
        mid = t0 + window_sec / 2.0
        if any(lo <= mid < hi for lo, hi in intervals):
            labels[k] = 1
        for c in range(n_chan):
            col = 0
            x = seg[c]
            for spec in registry:
                vals = spec.compute(x, fs)
                values[k, c, col : col + len(vals)] = vals
                col += len(vals)
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise ValueError(
            f"non-finite feature value at window {bad[0]}, channel {bad[1]}, column {columns[bad[2]]}"
        )
    return FeatureTable(t_start, t_start + window_sec, labels, values, list(recording.channels), columns)
