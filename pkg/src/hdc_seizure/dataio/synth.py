"""Synthetic multichannel recordings for desk-scale experiments.

Each state is a stationary mixture of one-pole-filtered Gaussian noise and
fixed-frequency sinusoids. The background alternates between states with
random dwell times; seizures overwrite the background with the seizure
state for their annotated intervals. Everything is a pure function of the
spec and the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .recordings import Recording

__all__ = ["StateSpec", "SynthSpec", "synth_generate", "corpus_states"]


@dataclass(frozen=True)
class StateSpec:
    """One stationary signal regime.

    ``sinusoids`` holds (frequency Hz, amplitude) pairs; ``noise_pole`` is
    the one-pole lowpass coefficient in [0, 1), 0 meaning white noise.
    """

    name: str
    sinusoids: tuple = ()
    noise_scale: float = 1.0
    noise_pole: float = 0.0

    def __post_init__(self):
        if not (0 <= self.noise_pole < 1):
            raise ValueError(f"noise_pole must be in [0, 1), got {self.noise_pole}")
        if self.noise_scale < 0:
            raise ValueError(f"noise_scale must be non-negative, got {self.noise_scale}")
        object.__setattr__(self, "sinusoids", tuple((float(f), float(a)) for f, a in self.sinusoids))


@dataclass(frozen=True)
class SynthSpec:
    duration_sec: float
    fs: float
    channels: tuple
    background_states: tuple
    seizure_state: StateSpec
    n_seizures: int = 0
    seizure_duration_sec: float = 30.0
    background_weights: tuple | None = None
    mean_dwell_sec: float = 30.0
    gain_jitter: float = 0.0
    freq_jitter: float = 0.0

    def __post_init__(self):
        if self.duration_sec <= 0 or self.fs <= 0:
            raise ValueError("duration_sec and fs must be positive")
        if not self.channels:
            raise ValueError("at least one channel required")
        if not self.background_states:
            raise ValueError("at least one background state required")
        if self.n_seizures < 0:
            raise ValueError(f"n_seizures must be non-negative, got {self.n_seizures}")
        if self.mean_dwell_sec <= 0:
            raise ValueError("mean_dwell_sec must be positive")
        if not (0 <= self.gain_jitter < 1):
            raise ValueError(f"gain_jitter must be in [0, 1), got {self.gain_jitter}")
        if not (0 <= self.freq_jitter < 1):
            raise ValueError(f"freq_jitter must be in [0, 1), got {self.freq_jitter}")
        object.__setattr__(self, "channels", tuple(str(c) for c in self.channels))
        object.__setattr__(self, "background_states", tuple(self.background_states))
        if self.background_weights is not None:
            w = tuple(float(x) for x in self.background_weights)
            if len(w) != len(self.background_states) or any(x <= 0 for x in w):
                raise ValueError("background_weights must be positive, one per background state")
            object.__setattr__(self, "background_weights", w)

    def seizure_durations(self) -> list:
        d = self.seizure_duration_sec
        if np.isscalar(d):
            durations = [float(d)] * self.n_seizures
        else:
            durations = [float(x) for x in d]
            if len(durations) != self.n_seizures:
                raise ValueError(
                    f"{len(durations)} seizure durations for n_seizures={self.n_seizures}"
                )
        if any(x <= 0 for x in durations):
            raise ValueError("seizure durations must be positive")
        return durations


def _place_seizures(spec: SynthSpec, rng) -> list:
    """One seizure per equal slot, at a random offset inside the slot."""
    durations = spec.seizure_durations()
    if not durations:
        return []
    slot = spec.duration_sec / len(durations)
    margin = 0.1 * slot
    intervals = []
    for k, dur in enumerate(durations):
        free = slot - 2 * margin - dur
        if free < 0:
            raise ValueError(
                f"seizure {k} of {dur} s does not fit in its {slot:.1f} s slot "
                f"of a {spec.duration_sec} s recording"
            )
        start = slot * k + margin + rng.random() * free
        intervals.append((start, start + dur))
    return intervals


def _background_segments(spec: SynthSpec, rng) -> list:
    """(t0, t1, state index) tiles covering [0, duration)."""
    n_states = len(spec.background_states)
    weights = spec.background_weights
    p = None if weights is None else np.array(weights) / sum(weights)
    out = []
    t = 0.0
    while t < spec.duration_sec:
        dwell = spec.mean_dwell_sec * rng.uniform(0.5, 1.5)
        state = int(rng.choice(n_states, p=p))
        out.append((t, min(t + dwell, spec.duration_sec), state))
        t += dwell
    return out


def _overlay_seizures(background: list, seizures: list, n_bg: int) -> list:
    """Split background tiles around seizure intervals.

    Returns (t0, t1, state index) with seizure tiles using index ``n_bg``.
    """
    events = []
    for t0, t1, s in background:
        events.append((t0, t1, s))
    for s0, s1 in seizures:
        clipped = []
        for t0, t1, s in events:
            if t1 <= s0 or t0 >= s1:
                clipped.append((t0, t1, s))
                continue
            if t0 < s0:
                clipped.append((t0, s0, s))
            if t1 > s1:
                clipped.append((s1, t1, s))
        clipped.append((s0, s1, n_bg))
        events = sorted(clipped)
    return events


def _render_segment(state: StateSpec, t: np.ndarray, rng, freq_scale: float = 1.0) -> np.ndarray:
    x = state.noise_scale * rng.standard_normal(t.size)
    if state.noise_pole > 0:
        x = lfilter([1.0], [1.0, -state.noise_pole], x)
    for freq, amp in state.sinusoids:
        phase = rng.uniform(0, 2 * math.pi)
        x = x + amp * np.sin(2 * math.pi * freq * freq_scale * t + phase)
    return x


def corpus_states(n_background: int = 3, minority_weight: float = 0.12):
    """Background and seizure states for the bundled experiments.

    The last one or two background modes are slow high-amplitude regimes
    spectrally adjacent to the seizure state (from above and below its
    center frequency), so a single background centroid cannot represent
    all modes at once. Returns (background_states, weights, seizure_state);
    the minority modes share ``minority_weight`` of the background time,
    the rest is split evenly over the ordinary modes.
    """
    if n_background < 1:
        raise ValueError(f"n_background must be at least 1, got {n_background}")
    palette = [
        StateSpec("bg_alpha", sinusoids=((10.0, 2.0),), noise_scale=1.0, noise_pole=0.2),
        StateSpec("bg_beta", sinusoids=((20.0, 1.4),), noise_scale=1.3, noise_pole=0.1),
        StateSpec("bg_theta", sinusoids=((6.0, 1.6),), noise_scale=1.1, noise_pole=0.35),
        StateSpec("bg_mixed", sinusoids=((8.0, 1.2), (15.0, 0.8)), noise_scale=1.2, noise_pole=0.25),
    ]
    minorities = [
        StateSpec("bg_slow", sinusoids=((3.4, 4.0),), noise_scale=0.85, noise_pole=0.62),
        StateSpec("bg_lowdelta", sinusoids=((2.4, 4.4),), noise_scale=0.8, noise_pole=0.68),
    ]
    seizure = StateSpec("seizure", sinusoids=((3.0, 6.0),), noise_scale=0.8, noise_pole=0.7)
    if n_background == 1:
        return (palette[0],), (1.0,), seizure
    if n_background == 2:
        minor = minorities[:1]
    else:
        minor = minorities
    majors = [palette[k % len(palette)] for k in range(n_background - len(minor))]
    share = (1.0 - minority_weight) / len(majors)
    weights = tuple([share] * len(majors) + [minority_weight / len(minor)] * len(minor))
    return tuple(majors + minor), weights, seizure


def synth_generate(spec: SynthSpec, seed: int):
    """Generate one recording and its seizure annotations.

    Returns ``(Recording, [(start_sec, end_sec), ...])``; the recording
    carries the same annotations. Identical spec and seed give identical
    output.
    """
    rng = np.random.default_rng(seed)
    seizures = _place_seizures(spec, rng)
    background = _background_segments(spec, rng)
    tiles = _overlay_seizures(background, seizures, len(spec.background_states))
    states = list(spec.background_states) + [spec.seizure_state]
    n = int(round(spec.duration_sec * spec.fs))
    samples = np.zeros((len(spec.channels), n))
    for t0, t1, si in tiles:
        i0, i1 = int(round(t0 * spec.fs)), int(round(t1 * spec.fs))
        if i1 <= i0:
            continue
        t = np.arange(i0, i1) / spec.fs
        # rhythm frequency drifts per segment across all channels; amplitude
        # wanders per channel; jitter 0 skips the draw
        fscale = 1.0
        if spec.freq_jitter > 0:
            fscale = rng.uniform(1 - spec.freq_jitter, 1 + spec.freq_jitter)
        for c in range(len(spec.channels)):
            gain = 1.0
            if spec.gain_jitter > 0:
                gain = rng.uniform(1 - spec.gain_jitter, 1 + spec.gain_jitter)
            samples[c, i0:i1] = gain * _render_segment(states[si], t, rng, fscale)
    annotations = [(float(s), float(e)) for s, e in seizures]
    rec = Recording(fs=spec.fs, channels=list(spec.channels), samples=samples, annotations=annotations)
    return rec, annotations
