"""Per-seizure unbalanced dataset construction and its on-disk format.

Each seizure of a subject becomes one file holding that seizure's ictal
windows plus ``ratio`` times as many non-seizure windows, sampled without
replacement from every recording of the subject outside the peri-ictal
exclusion zones. Windows stay in chronological (recording, time) order.
"""

from __future__ import annotations

import datetime
import json
import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..features import FeatureTable

__all__ = [
    "SeizureFile",
    "SubjectDataset",
    "build_dataset",
    "write_feature_csv",
    "read_feature_csv",
    "write_subject",
    "load_subject",
]


@dataclass
class SeizureFile:
    """One seizure's windows plus its sampled non-seizure windows."""

    index: int  # 1-based within the subject
    table: FeatureTable
    n_ictal: int
    n_background: int
    seizure_start: float
    seizure_end: float
    source: str  # recording the seizure came from

    def name(self) -> str:
        return f"seiz{self.index}.csv"


@dataclass
class SubjectDataset:
    subject_id: str
    files: list
    ratio: float
    pre_excl_sec: float
    post_excl_sec: float
    seed: int
    notes: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.files)


def _excluded_mask(table: FeatureTable, zones: list) -> np.ndarray:
    mid = (table.t_start + table.t_end) / 2.0
    mask = np.zeros(len(table), dtype=bool)
    for lo, hi in zones:
        mask |= (mid >= lo) & (mid < hi)
    return mask


def build_dataset(
    subject_id: str,
    items: list,
    ratio: float = 10.0,
    pre_excl_sec: float = 60.0,
    post_excl_sec: float = 900.0,
    seed: int = 0,
    names: list | None = None,
) -> SubjectDataset:
    """Assemble the per-seizure files of one subject.

    ``items`` is a list of ``(FeatureTable, [(start_sec, end_sec), ...])``
    pairs, one per recording, in chronological order. Non-seizure windows
    are label-0 windows whose midpoint avoids every exclusion zone
    ``[start - pre_excl_sec, end + post_excl_sec)`` of their own recording;
    each seizure draws its own ``round(ratio * n_ictal)`` of them without
    replacement, seeded by (seed, subject, seizure index).
    """
    if ratio <= 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    if pre_excl_sec < 0 or post_excl_sec < 0:
        raise ValueError("exclusion seconds must be non-negative")
    if not items:
        raise ValueError(f"subject {subject_id}: no recordings")
    if names is None:
        names = [f"rec{k:03d}" for k in range(len(items))]
    if len(names) != len(items):
        raise ValueError(f"{len(names)} names for {len(items)} recordings")
    first = items[0][0]
    for table, _ in items[1:]:
        if table.channels != first.channels or table.columns != first.columns:
            raise ValueError(f"subject {subject_id}: recordings disagree on channels or columns")

    seizures = []  # (recording index, start, end)
    pool = []  # (recording index, window index) of usable non-seizure windows
    for r, (table, anns) in enumerate(items):
        for s, e in sorted(anns):
            seizures.append((r, float(s), float(e)))
        zones = [(s - pre_excl_sec, e + post_excl_sec) for s, e in anns]
        usable = (table.labels == 0) & ~_excluded_mask(table, zones)
        pool.extend((r, int(i)) for i in np.flatnonzero(usable))
    if not seizures:
        raise ValueError(f"subject {subject_id}: no seizures annotated")
    notes = []
    if len(seizures) == 1:
        msg = f"subject {subject_id}: only one seizure; cross-validation will be degenerate"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)

    subject_key = zlib.crc32(subject_id.encode("utf-8"))
    files = []
    for k, (r, s, e) in enumerate(seizures, start=1):
        table = items[r][0]
        mid = (table.t_start + table.t_end) / 2.0
        ictal = np.flatnonzero((mid >= s) & (mid < e))
        if ictal.size == 0:
            raise ValueError(
                f"subject {subject_id}: seizure {k} at [{s}, {e}) s of {names[r]} "
                "covers no window midpoint"
            )
        n_non = int(round(ratio * ictal.size))
        if n_non > len(pool):
            raise ValueError(
                f"subject {subject_id}: seizure {k} needs {n_non} non-seizure windows "
                f"but only {len(pool)} remain after exclusion (deficit {n_non - len(pool)})"
            )
        rng = np.random.default_rng([seed, subject_key, k])
        picked = rng.choice(len(pool), size=n_non, replace=False)
        rows = [(r, int(i)) for i in ictal] + [pool[int(j)] for j in picked]
        rows.sort()
        parts = [items[ri][0].select(np.array([wi])) for ri, wi in rows]
        merged = FeatureTable(
            np.concatenate([p.t_start for p in parts]),
            np.concatenate([p.t_end for p in parts]),
            np.concatenate([p.labels for p in parts]),
            np.concatenate([p.values for p in parts]),
            first.channels,
            first.columns,
        )
        files.append(
            SeizureFile(k, merged, int(ictal.size), n_non, s, e, names[r])
        )
    return SubjectDataset(subject_id, files, ratio, pre_excl_sec, post_excl_sec, seed, notes)


# ---------------------------------------------------------------------------
# feature CSV format
# ---------------------------------------------------------------------------


def write_feature_csv(path, table: FeatureTable) -> None:
    """Windows as rows: t_start, t_end, label, then channel|column values."""
    header = ["t_start", "t_end", "label"]
    for ch in table.channels:
        for col in table.columns:
            header.append(f"{ch}|{col}")
    n = len(table)
    flat = table.values.reshape(n, -1)
    data = np.column_stack([table.t_start, table.t_end, table.labels.astype(np.float64), flat])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")


def read_feature_csv(path) -> FeatureTable:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header[:3] != ["t_start", "t_end", "label"]:
        raise ValueError(f"{path}: expected t_start,t_end,label leading columns, got {header[:3]}")
    channels: list = []
    columns: list = []
    for name in header[3:]:
        if "|" not in name:
            raise ValueError(f"{path}: malformed feature column {name!r}")
        ch, col = name.split("|", 1)
        if ch not in channels:
            channels.append(ch)
        if len(channels) == 1:
            columns.append(col)
    expected = ["t_start", "t_end", "label"] + [f"{c}|{f}" for c in channels for f in columns]
    if header != expected:
        raise ValueError(f"{path}: feature columns are not a channel-major grid")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: {data.shape[1]} data columns but {len(header)} header names")
    n = data.shape[0]
    values = data[:, 3:].reshape(n, len(channels), len(columns))
    return FeatureTable(data[:, 0], data[:, 1], data[:, 2].astype(np.int64), values, channels, columns)


# ---------------------------------------------------------------------------
# subject directory layout
# ---------------------------------------------------------------------------


def write_subject(out_dir, dataset: SubjectDataset) -> None:
    """Write seiz<k>.csv files plus the subject manifest under out_dir."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for f in dataset.files:
        write_feature_csv(os.path.join(out_dir, f.name()), f.table)
        entries.append(
            {
                "file": f.name(),
                "n_windows": len(f.table),
                "n_ictal": f.n_ictal,
                "n_background": f.n_background,
                "seizure_start_sec": f.seizure_start,
                "seizure_end_sec": f.seizure_end,
                "source": f.source,
            }
        )
    manifest = {
        "subject_id": dataset.subject_id,
        "ratio": dataset.ratio,
        "pre_excl_sec": dataset.pre_excl_sec,
        "post_excl_sec": dataset.post_excl_sec,
        "seed": dataset.seed,
        "files": entries,
        "channels": dataset.files[0].table.channels if dataset.files else [],
        "columns": dataset.files[0].table.columns if dataset.files else [],
        "notes": dataset.notes,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_subject(subject_dir) -> SubjectDataset:
    import os

    with open(os.path.join(subject_dir, "manifest.json"), "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    files = []
    for k, entry in enumerate(manifest["files"], start=1):
        table = read_feature_csv(os.path.join(subject_dir, entry["file"]))
        if len(table) != entry["n_windows"]:
            raise ValueError(
                f"{subject_dir}/{entry['file']}: manifest says {entry['n_windows']} windows, "
                f"file has {len(table)}"
            )
        files.append(
            SeizureFile(
                k,
                table,
                entry["n_ictal"],
                entry["n_background"],
                entry["seizure_start_sec"],
                entry["seizure_end_sec"],
                entry["source"],
            )
        )
    return SubjectDataset(
        manifest["subject_id"],
        files,
        manifest["ratio"],
        manifest["pre_excl_sec"],
        manifest["post_excl_sec"],
        manifest["seed"],
        manifest.get("notes", []),
    )
