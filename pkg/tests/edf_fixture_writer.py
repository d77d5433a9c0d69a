"""Minimal EDF byte builder for reader tests.

Assembled field by field from the published EDF layout (256-byte main
header, 256 bytes per signal stored field-major, int16 LE data records),
deliberately sharing nothing with the package's reader.
"""

import numpy as np


def _field(value, width):
    s = str(value)
    if len(s) > width:
        raise ValueError(f"field {s!r} wider than {width}")
    return s.ljust(width).encode("ascii")


def build_edf(
    signals,
    record_duration=1.0,
    n_records=None,
    stored_n_records=None,
    header_bytes=None,
    version="0",
    extra_bytes=b"",
):
    """Serialize signals into EDF bytes.

    ``signals`` is a list of dicts with keys ``label``, ``dig`` (int16
    digital samples), ``spr`` (samples per record), ``pmin``, ``pmax``,
    ``dmin``, ``dmax``. All signals must cover the same number of records.
    ``stored_n_records`` / ``header_bytes`` override the header fields to
    build corrupt files; ``n_records`` overrides the inferred count.
    """
    ns = len(signals)
    counts = {len(s["dig"]) // s["spr"] for s in signals}
    if len(counts) != 1:
        raise ValueError("signals disagree on record count")
    true_records = counts.pop()
    if n_records is None:
        n_records = true_records
    if stored_n_records is None:
        stored_n_records = n_records
    if header_bytes is None:
        header_bytes = 256 + 256 * ns

    head = b"".join([
        _field(version, 8),
        _field("patient", 80),
        _field("recording", 80),
        _field("01.01.20", 8),
        _field("00.00.00", 8),
        _field(header_bytes, 8),
        _field("", 44),
        _field(stored_n_records, 8),
        _field(f"{record_duration:g}", 8),
        _field(ns, 4),
    ])
    assert len(head) == 256

    def block(key, width, fmt=str):
        return b"".join(_field(fmt(s[key]), width) for s in signals)

    sig_head = b"".join([
        block("label", 16),
        b"".join(_field("", 80) for _ in signals),  # transducer
        b"".join(_field("uV", 8) for _ in signals),  # physical dimension
        block("pmin", 8, lambda v: f"{v:g}"),
        block("pmax", 8, lambda v: f"{v:g}"),
        block("dmin", 8),
        block("dmax", 8),
        b"".join(_field("", 80) for _ in signals),  # prefiltering
        block("spr", 8),
        b"".join(_field("", 32) for _ in signals),  # reserved
    ])
    assert len(sig_head) == 256 * ns

    records = bytearray()
    for r in range(n_records):
        for s in signals:
            spr = s["spr"]
            chunk = np.asarray(s["dig"][r * spr : (r + 1) * spr], dtype="<i2")
            records += chunk.tobytes()
    return bytes(head + sig_head + records + extra_bytes)


def signal(label, dig, spr, pmin=-100.0, pmax=100.0, dmin=-2048, dmax=2047):
    return {
        "label": label, "dig": np.asarray(dig, dtype=np.int64), "spr": spr,
        "pmin": pmin, "pmax": pmax, "dmin": dmin, "dmax": dmax,
    }


def calibrate(sig):
    """The calibration the reader is expected to apply."""
    gain = (sig["pmax"] - sig["pmin"]) / (sig["dmax"] - sig["dmin"])
    return (sig["dig"].astype(np.float64) - sig["dmin"]) * gain + sig["pmin"]
