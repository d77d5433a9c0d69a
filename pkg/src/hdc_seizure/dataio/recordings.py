"""Recording and annotation containers plus their CSV formats.

A recording CSV has a ``time`` column followed by one column per channel;
sampling must be uniform. The annotation CSV is the sidecar format
``subject_id,file,start_sec,end_sec`` with one row per seizure.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Recording",
    "Annotation",
    "read_csv_recording",
    "write_csv_recording",
    "read_annotations",
    "write_annotations",
    "annotations_for",
]

_TIME_JITTER_SEC = 1e-6

ANNOTATION_COLUMNS = ("subject_id", "file", "start_sec", "end_sec")


@dataclass
class Recording:
    """Multichannel uniformly sampled signal with ictal annotations.

    ``samples`` is (channels, samples) float64 in microvolts; annotation
    intervals are half-open ``[start_sec, end_sec)``, non-overlapping and
    inside the recording.
    """

    fs: float
    channels: list
    samples: np.ndarray
    annotations: list = field(default_factory=list)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if not (self.fs > 0):
            raise ValueError(f"fs must be positive, got {self.fs}")
        if self.samples.ndim != 2 or self.samples.shape[0] != len(self.channels):
            raise ValueError(
                f"samples shape {self.samples.shape} inconsistent with {len(self.channels)} channels"
            )
        if len(set(self.channels)) != len(self.channels):
            raise ValueError(f"duplicate channel names in {self.channels}")
        dur = self.duration
        last_end = None
        for start, end in sorted(self.annotations):
            if not (0 <= start < end <= dur + 1e-9):
                raise ValueError(f"annotation [{start}, {end}) outside recording of {dur:.3f} s")
            if last_end is not None and start < last_end:
                raise ValueError(f"overlapping annotations at {start} s")
            last_end = end
        self.annotations = sorted((float(s), float(e)) for s, e in self.annotations)

    @property
    def duration(self) -> float:
        return self.samples.shape[1] / self.fs

    def with_annotations(self, annotations) -> "Recording":
        """Same signal, new (validated) ictal intervals."""
        return Recording(self.fs, list(self.channels), self.samples, list(annotations))


def write_csv_recording(path, recording: Recording) -> None:
    """17 significant digits, so samples round-trip exactly."""
    n = recording.samples.shape[1]
    t = np.arange(n) / recording.fs
    data = np.column_stack([t, recording.samples.T])
    header = ",".join(["time"] + [str(c) for c in recording.channels])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")


def read_csv_recording(path) -> Recording:
    """Parse a recording CSV, inferring fs from the time column.

    Time stamps must be uniform to within 1e-6 s of the ideal grid.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
    names = header.split(",")
    if not names or names[0] != "time":
        raise ValueError(f"{path}: first column must be 'time', got {names[:1]}")
    channels = names[1:]
    if not channels:
        raise ValueError(f"{path}: no channel columns")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: {data.shape[1]} data columns but {len(names)} header names")
    t = data[:, 0]
    if len(t) < 2:
        raise ValueError(f"{path}: need at least 2 samples to infer fs")
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if dt <= 0:
        raise ValueError(f"{path}: time column is not increasing")
    ideal = t[0] + dt * np.arange(len(t))
    jitter = np.abs(t - ideal).max()
    if jitter > _TIME_JITTER_SEC:
        raise ValueError(f"{path}: non-uniform sampling, max jitter {jitter:.3g} s")
    return Recording(fs=1.0 / dt, channels=channels, samples=data[:, 1:].T)


@dataclass(frozen=True)
class Annotation:
    subject_id: str
    file: str
    start_sec: float
    end_sec: float

    def __post_init__(self):
        if not (self.start_sec < self.end_sec):
            raise ValueError(f"annotation start {self.start_sec} must precede end {self.end_sec}")


def read_annotations(path) -> list:
    """Sidecar seizure annotations; overlapping rows for one file are an error."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != ANNOTATION_COLUMNS:
            raise ValueError(
                f"{path}: expected columns {','.join(ANNOTATION_COLUMNS)}, got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append(
                    Annotation(
                        row["subject_id"], row["file"],
                        float(row["start_sec"]), float(row["end_sec"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    by_file: dict = {}
    for a in rows:
        by_file.setdefault((a.subject_id, a.file), []).append(a)
    for (subj, fname), anns in by_file.items():
        anns = sorted(anns, key=lambda a: a.start_sec)
        for prev, cur in zip(anns, anns[1:]):
            if cur.start_sec < prev.end_sec:
                raise ValueError(
                    f"{path}: overlapping annotations for {subj}/{fname}: "
                    f"[{prev.start_sec}, {prev.end_sec}) and [{cur.start_sec}, {cur.end_sec})"
                )
    return rows


def write_annotations(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_COLUMNS)
        for a in rows:
            writer.writerow([a.subject_id, a.file, f"{a.start_sec:.17g}", f"{a.end_sec:.17g}"])


def annotations_for(rows, subject_id: str, file: str) -> list:
    """Sorted (start, end) intervals of one file."""
    out = [
        (a.start_sec, a.end_sec)
        for a in rows
        if a.subject_id == subject_id and a.file == file
    ]
    return sorted(out)
