"""Encoding of feature windows into binary hypervectors.

An :class:`ItemMemory` holds every random item drawn for one experiment:
one vector per feature column, one per channel, a level table for the
quantized feature values, and the experiment's tie-break vector. Feature
normalization bounds are the per-column 1st/99th percentiles of the
training split, so fitting touches training data only.

Encoding is two-stage by default: per channel, each feature's level vector
is bound (XOR) to the feature's item vector and the results are
majority-bundled; the channel bundle is bound to the channel vector and a
final majority bundle over channels yields the window vector. The
single-stage alternative bundles all (channel, feature) pairs at once.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .features import FeatureTable, FeatureWindow
from .hv import Hypervector, LevelTable, build_level_table, random_hv

__all__ = [
    "ENCODE_MODES",
    "ItemMemory",
    "fit_item_memory",
    "quantize",
    "encode_window",
    "encode_table",
    "serialize_item_memory",
    "deserialize_item_memory",
    "save_item_memory",
    "load_item_memory",
]

ENCODE_MODES = ("two_stage", "single_stage")

_MAGIC = b"HDIM"
_HEADER = struct.Struct("<4sBBQIIIq")


@dataclass
class ItemMemory:
    """Random items, level table, bounds and tie-break for one experiment."""

    dim: int
    num_levels: int
    columns: list[str]
    channels: list[str]
    feature_vectors: list[Hypervector]
    channel_vectors: list[Hypervector]
    level_table: LevelTable
    tie_break: Hypervector
    norm_bounds: np.ndarray  # (n_columns, 2) low/high
    mode: str = "two_stage"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ENCODE_MODES:
            raise ValueError(f"unknown encode mode {self.mode!r}")
        if len(self.feature_vectors) != len(self.columns):
            raise ValueError("one feature vector per column required")
        if len(self.channel_vectors) != len(self.channels):
            raise ValueError("one channel vector per channel required")
        if self.norm_bounds.shape != (len(self.columns), 2):
            raise ValueError(f"norm_bounds must have shape ({len(self.columns)}, 2)")
        if np.any(self.norm_bounds[:, 1] <= self.norm_bounds[:, 0]):
            raise ValueError("norm_bounds upper edges must exceed lower edges")
        self._bits_cache = None

    def _bits(self):
        """Unpacked bit matrices for the encode kernels, built once."""
        if self._bits_cache is None:
            self._bits_cache = (
                np.stack([v.bits for v in self.level_table.levels]),
                np.stack([v.bits for v in self.feature_vectors]),
                np.stack([v.bits for v in self.channel_vectors]),
                self.tie_break.bits,
            )
        return self._bits_cache


def fit_item_memory(
    train_features: FeatureTable | list[FeatureTable],
    dim: int,
    num_levels: int = 20,
    rng_seed: int = 0,
    mode: str = "two_stage",
) -> ItemMemory:
    """Draw items and fit normalization bounds from training windows only.

    Bounds are the per-column 1st/99th percentile over all training windows
    and channels; a constant column c gets bounds (c - 1, c + 1). Items are
    drawn from independent child streams of ``rng_seed``, so the same seed
    always yields the same item memory regardless of the data.
    """
    tables = train_features if isinstance(train_features, list) else [train_features]
    if not tables:
        raise ValueError("no training feature tables given")
    columns = tables[0].columns
    channels = tables[0].channels
    for t in tables[1:]:
        if t.columns != columns or t.channels != channels:
            raise ValueError("training tables disagree on channels or columns")
    pooled = np.concatenate([t.values.reshape(-1, len(columns)) for t in tables], axis=0)
    lo, hi = np.percentile(pooled, [1.0, 99.0], axis=0)
    flat = hi <= lo
    lo = np.where(flat, lo - 1.0, lo)
    hi = np.where(flat, hi + 1.0, hi)

    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(rng_seed).spawn(4)]
    feature_vectors = [random_hv(dim, streams[0]) for _ in columns]
    channel_vectors = [random_hv(dim, streams[1]) for _ in channels]
    level_table = build_level_table(dim, num_levels, streams[2])
    tie_break = random_hv(dim, streams[3])
    return ItemMemory(
        dim=dim,
        num_levels=num_levels,
        columns=list(columns),
        channels=list(channels),
        feature_vectors=feature_vectors,
        channel_vectors=channel_vectors,
        level_table=level_table,
        tie_break=tie_break,
        norm_bounds=np.stack([lo, hi], axis=1),
        mode=mode,
        seed=int(rng_seed),
    )


def quantize(values: np.ndarray, bounds: np.ndarray, num_levels: int) -> np.ndarray:
    """Map values to level indices 0 .. num_levels-1, clipping to bounds.

    ``values`` has columns as its last axis; ``bounds`` is (n_columns, 2).
    Equal-width levels over [low, high); values at or above high map to the
    top level.
    """
    lo = bounds[..., 0]
    hi = bounds[..., 1]
    scaled = (values - lo) / (hi - lo)
    idx = np.floor(scaled * num_levels).astype(np.int64)
    return np.clip(idx, 0, num_levels - 1)


def encode_window(fw: FeatureWindow, im: ItemMemory) -> Hypervector:
    """Encode one feature window into a hypervector."""
    values = np.asarray(fw.values, dtype=np.float64)
    if values.shape != (len(im.channels), len(im.columns)):
        raise ValueError(
            f"window values shape {values.shape} does not match item memory "
            f"({len(im.channels)} channels x {len(im.columns)} columns)"
        )
    level_idx = quantize(values, im.norm_bounds, im.num_levels)
    level_bits, feat_bits, chan_bits, tie_bits = im._bits()
    kern = _kernels.encode_two_stage if im.mode == "two_stage" else _kernels.encode_single_stage
    bits = kern(level_idx, level_bits, feat_bits, chan_bits, tie_bits)
    return Hypervector.from_bits(bits)


def encode_table(table: FeatureTable, im: ItemMemory) -> np.ndarray:
    """Encode every window of a table; returns a packed (n, ceil(dim/8)) matrix."""
    if table.channels != im.channels or table.columns != im.columns:
        raise ValueError("feature table channels/columns do not match item memory")
    level_idx = quantize(table.values, im.norm_bounds, im.num_levels)
    level_bits, feat_bits, chan_bits, tie_bits = im._bits()
    kern = _kernels.encode_two_stage if im.mode == "two_stage" else _kernels.encode_single_stage
    out = np.empty((len(table), (im.dim + 7) // 8), dtype=np.uint8)
    for i in range(len(table)):
        bits = kern(level_idx[i], level_bits, feat_bits, chan_bits, tie_bits)
        out[i] = np.packbits(bits, bitorder="little")
    return out


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _pack_names(names: list[str]) -> bytes:
    out = bytearray()
    for name in names:
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"name too long: {name[:32]}...")
        out += struct.pack("<H", len(raw)) + raw
    return bytes(out)


def _unpack_names(buf: bytes, offset: int, count: int) -> tuple[list[str], int]:
    names = []
    for _ in range(count):
        if len(buf) - offset < 2:
            raise ValueError(f"truncated name table at byte {offset}")
        (ln,) = struct.unpack_from("<H", buf, offset)
        offset += 2
        if len(buf) - offset < ln:
            raise ValueError(f"truncated name at byte {offset}")
        names.append(buf[offset : offset + ln].decode("utf-8"))
        offset += ln
    return names, offset


def serialize_item_memory(im: ItemMemory) -> bytes:
    """Header (dim, num_levels, counts, seed), names, bounds, then vectors.

    Vector payloads follow in declared order: feature vectors, channel
    vectors, level vectors, tie-break. Loading reproduces encodings bit for
    bit, so a trained pipeline is exactly reloadable.
    """
    mode_code = ENCODE_MODES.index(im.mode)
    head = _HEADER.pack(
        _MAGIC, 1, mode_code, im.dim, im.num_levels,
        len(im.columns), len(im.channels), im.seed,
    )
    parts = [head, _pack_names(im.columns), _pack_names(im.channels)]
    parts.append(np.ascontiguousarray(im.norm_bounds, dtype="<f8").tobytes())
    for v in im.feature_vectors + im.channel_vectors + im.level_table.levels + [im.tie_break]:
        parts.append(v.data.tobytes())
    return b"".join(parts)


def deserialize_item_memory(buf: bytes) -> ItemMemory:
    if len(buf) < _HEADER.size:
        raise ValueError("truncated item memory header at byte 0")
    magic, version, mode_code, dim, num_levels, n_cols, n_chan, seed = _HEADER.unpack_from(buf, 0)
    if magic != _MAGIC:
        raise ValueError(f"bad item memory magic {magic!r} at byte 0")
    if version != 1:
        raise ValueError(f"unsupported item memory version {version}")
    if mode_code >= len(ENCODE_MODES):
        raise ValueError(f"unknown encode mode code {mode_code}")
    offset = _HEADER.size
    columns, offset = _unpack_names(buf, offset, n_cols)
    channels, offset = _unpack_names(buf, offset, n_chan)
    nb = 16 * n_cols
    if len(buf) - offset < nb:
        raise ValueError(f"truncated norm bounds at byte {offset}")
    bounds = np.frombuffer(buf, dtype="<f8", count=2 * n_cols, offset=offset).reshape(n_cols, 2).copy()
    offset += nb
    nbytes = (dim + 7) // 8
    total = n_cols + n_chan + num_levels + 1
    if len(buf) - offset < total * nbytes:
        raise ValueError(f"truncated vector payload at byte {offset}")

    def take() -> Hypervector:
        nonlocal offset
        data = np.frombuffer(buf, dtype=np.uint8, count=nbytes, offset=offset).copy()
        offset += nbytes
        return Hypervector(int(dim), data)

    feature_vectors = [take() for _ in range(n_cols)]
    channel_vectors = [take() for _ in range(n_chan)]
    levels = [take() for _ in range(num_levels)]
    tie_break = take()
    if offset != len(buf):
        raise ValueError(f"{len(buf) - offset} trailing bytes after item memory")
    block = dim // (2 * (num_levels - 1)) if num_levels > 1 else 0
    return ItemMemory(
        dim=int(dim),
        num_levels=int(num_levels),
        columns=columns,
        channels=channels,
        feature_vectors=feature_vectors,
        channel_vectors=channel_vectors,
        level_table=LevelTable(int(dim), int(num_levels), levels, block),
        tie_break=tie_break,
        norm_bounds=bounds,
        mode=ENCODE_MODES[mode_code],
        seed=int(seed),
    )


def save_item_memory(im: ItemMemory, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_item_memory(im))


def load_item_memory(path) -> ItemMemory:
    with open(path, "rb") as fh:
        return deserialize_item_memory(fh.read())
