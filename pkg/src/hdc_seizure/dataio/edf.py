"""Plain-profile EDF reader and the seizure-summary text converter.

Only the original fixed-width EDF layout is handled: 256-byte main header,
256 bytes per signal (field-major), then int16 little-endian data records.
EDF+ annotation streams are out of scope; seizure intervals live in the
sidecar annotation CSV.
"""

from __future__ import annotations

import re

import numpy as np

from .recordings import Annotation, Recording

__all__ = ["BIPOLAR_CHANNELS", "read_edf", "parse_chb_summary"]

# international 10-20 bipolar montage used for seizure detection
BIPOLAR_CHANNELS = (
    "C3-P3", "C4-P4", "CZ-PZ", "F3-C3", "F4-C4", "F7-T7", "F8-T8",
    "FP1-F3", "FP1-F7", "FP2-F4", "FP2-F8", "FZ-CZ", "P3-O1", "P4-O2",
    "P7-O1", "P8-O2", "T7-P7", "T8-P8",
)

_MAIN_HEADER_BYTES = 256
_SIGNAL_HEADER_BYTES = 256


def _ascii(buf: bytes, offset: int, width: int, name: str) -> str:
    raw = buf[offset : offset + width]
    try:
        return raw.decode("ascii").strip()
    except UnicodeDecodeError as exc:
        raise ValueError(f"field {name!r} at byte {offset} is not ASCII: {raw!r}") from exc


def _int(buf: bytes, offset: int, width: int, name: str) -> int:
    text = _ascii(buf, offset, width, name)
    try:
        return int(text)
    except ValueError as exc:
        raise ValueError(f"field {name!r} at byte {offset} is not an integer: {text!r}") from exc


def _float(buf: bytes, offset: int, width: int, name: str) -> float:
    text = _ascii(buf, offset, width, name)
    try:
        return float(text)
    except ValueError as exc:
        raise ValueError(f"field {name!r} at byte {offset} is not a number: {text!r}") from exc


def read_edf(path, channels=None) -> Recording:
    """Parse an EDF file into a calibrated :class:`Recording`.

    ``channels`` selects signals by label, case-insensitively. A requested
    name like ``"F3-C3"`` that is not stored directly is derived as the
    difference of the two referential signals when both exist. With
    ``channels=None`` every stored signal is returned. All selected
    signals must share one sampling rate.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _MAIN_HEADER_BYTES:
        raise ValueError(f"{path}: truncated main header, file ends at byte {len(buf)} of 256")
    version = _ascii(buf, 0, 8, "version")
    if version != "0":
        raise ValueError(f"{path}: unsupported EDF version {version!r} at byte 0")
    header_bytes = _int(buf, 184, 8, "header bytes")
    n_records = _int(buf, 236, 8, "number of data records")
    record_duration = _float(buf, 244, 8, "record duration")
    n_signals = _int(buf, 252, 4, "number of signals")
    if n_signals <= 0:
        raise ValueError(f"{path}: number of signals must be positive, got {n_signals} at byte 252")
    expected_header = _MAIN_HEADER_BYTES + n_signals * _SIGNAL_HEADER_BYTES
    if header_bytes != expected_header:
        raise ValueError(
            f"{path}: header size field at byte 184 says {header_bytes}, "
            f"but {n_signals} signals need {expected_header}"
        )
    if len(buf) < expected_header:
        raise ValueError(
            f"{path}: truncated signal headers, file ends at byte {len(buf)} of {expected_header}"
        )
    if record_duration <= 0:
        raise ValueError(f"{path}: record duration must be positive, got {record_duration}")

    # signal header fields are stored field-major: all labels, then all
    # transducers, and so on
    def field_block(width: int, start: int):
        return [(start + k * width, width) for k in range(n_signals)], start + n_signals * width

    pos = _MAIN_HEADER_BYTES
    (label_f, pos) = field_block(16, pos)
    (_, pos) = field_block(80, pos)  # transducer
    (_, pos) = field_block(8, pos)  # physical dimension
    (pmin_f, pos) = field_block(8, pos)
    (pmax_f, pos) = field_block(8, pos)
    (dmin_f, pos) = field_block(8, pos)
    (dmax_f, pos) = field_block(8, pos)
    (_, pos) = field_block(80, pos)  # prefiltering
    (spr_f, pos) = field_block(8, pos)

    labels = [_ascii(buf, o, w, f"label[{k}]") for k, (o, w) in enumerate(label_f)]
    pmin = np.array([_float(buf, o, w, f"physical min[{k}]") for k, (o, w) in enumerate(pmin_f)])
    pmax = np.array([_float(buf, o, w, f"physical max[{k}]") for k, (o, w) in enumerate(pmax_f)])
    dmin = np.array([_int(buf, o, w, f"digital min[{k}]") for k, (o, w) in enumerate(dmin_f)])
    dmax = np.array([_int(buf, o, w, f"digital max[{k}]") for k, (o, w) in enumerate(dmax_f)])
    spr = np.array([_int(buf, o, w, f"samples per record[{k}]") for k, (o, w) in enumerate(spr_f)])
    if np.any(spr <= 0):
        k = int(np.argmax(spr <= 0))
        raise ValueError(f"{path}: samples per record of signal {k} must be positive, got {spr[k]}")
    if np.any(dmax == dmin):
        k = int(np.argmax(dmax == dmin))
        raise ValueError(f"{path}: signal {k} has equal digital min and max {dmin[k]}")

    record_bytes = int(spr.sum()) * 2
    data_bytes = len(buf) - expected_header
    if n_records == -1:
        if data_bytes % record_bytes:
            raise ValueError(
                f"{path}: truncated data record, {data_bytes % record_bytes} stray bytes "
                f"at byte {expected_header + (data_bytes // record_bytes) * record_bytes}"
            )
        n_records = data_bytes // record_bytes
    else:
        expected_total = expected_header + n_records * record_bytes
        if len(buf) < expected_total:
            raise ValueError(
                f"{path}: truncated data, file ends at byte {len(buf)} of {expected_total}"
            )
        if len(buf) > expected_total:
            raise ValueError(
                f"{path}: {len(buf) - expected_total} trailing bytes after byte {expected_total}"
            )
    if n_records == 0:
        raise ValueError(f"{path}: file contains no data records")

    raw = np.frombuffer(
        buf, dtype="<i2", count=n_records * (record_bytes // 2), offset=expected_header
    ).reshape(n_records, record_bytes // 2)
    col_of = np.concatenate([[0], np.cumsum(spr)])
    gain = (pmax - pmin) / (dmax - dmin)

    def signal(k: int) -> np.ndarray:
        dig = raw[:, col_of[k] : col_of[k + 1]].astype(np.float64).ravel()
        return (dig - dmin[k]) * gain[k] + pmin[k]

    norm_labels = [lab.strip().upper() for lab in labels]
    first_of: dict = {}
    for k, lab in enumerate(norm_labels):
        first_of.setdefault(lab, k)

    if channels is None:
        picked = [(labels[k] or f"signal{k}", signal(k), spr[k]) for k in range(n_signals)]
    else:
        picked = []
        for name in channels:
            norm = str(name).strip().upper()
            if norm in first_of:
                k = first_of[norm]
                picked.append((str(name), signal(k), spr[k]))
                continue
            parts = norm.split("-")
            if len(parts) == 2 and parts[0] in first_of and parts[1] in first_of:
                ka, kb = first_of[parts[0]], first_of[parts[1]]
                if spr[ka] != spr[kb]:
                    raise ValueError(
                        f"{path}: cannot derive {name!r}: sampling rates differ "
                        f"({spr[ka]} vs {spr[kb]} samples/record)"
                    )
                picked.append((str(name), signal(ka) - signal(kb), spr[ka]))
                continue
            raise ValueError(
                f"{path}: channel {name!r} not found and not derivable; "
                f"stored labels: {sorted(set(norm_labels))}"
            )
    rates = {int(s) for _, _, s in picked}
    if len(rates) != 1:
        raise ValueError(
            f"{path}: selected signals have mixed sampling rates {sorted(rates)}; "
            "pass a channel subset with one rate"
        )
    fs = rates.pop() / record_duration
    samples = np.stack([sig for _, sig, _ in picked])
    return Recording(fs=fs, channels=[n for n, _, _ in picked], samples=samples)


_FILE_RE = re.compile(r"^File Name:\s*(\S+)", re.IGNORECASE)
_START_RE = re.compile(r"^Seizure(?:\s+\d+)?\s+Start Time:\s*([0-9.]+)\s*sec", re.IGNORECASE)
_END_RE = re.compile(r"^Seizure(?:\s+\d+)?\s+End Time:\s*([0-9.]+)\s*sec", re.IGNORECASE)


def parse_chb_summary(text: str, subject_id: str) -> list:
    """Convert a subject's seizure-summary text into annotation rows.

    Handles both ``Seizure Start Time:`` and ``Seizure N Start Time:``
    line styles. Start and end lines must pair up within each file block.
    """
    annotations = []
    current = None
    starts: list[float] = []
    ends: list[float] = []

    def flush():
        if current is None:
            return
        if len(starts) != len(ends):
            raise ValueError(
                f"{current}: {len(starts)} seizure start lines but {len(ends)} end lines"
            )
        for s, e in zip(starts, ends):
            annotations.append(Annotation(subject_id, current, s, e))

    for line in text.splitlines():
        line = line.strip()
        m = _FILE_RE.match(line)
        if m:
            flush()
            current = m.group(1)
            starts, ends = [], []
            continue
        m = _START_RE.match(line)
        if m:
            starts.append(float(m.group(1)))
            continue
        m = _END_RE.match(line)
        if m:
            ends.append(float(m.group(1)))
    flush()
    return annotations
