"""Binary hypervector algebra on bit-packed arrays.

Operations
----------
* ``random_hv``: dense random vector, each bit i.i.d. uniform
* ``bind``: XOR binding (self-inverse, similarity preserving)
* ``similarity`` / ``hamming``: normalized and raw Hamming comparison
* ``accumulate`` / ``binarize``: signed per-bit counters and majority readout
* ``bundle``: majority vote over a set of vectors
* ``build_level_table``: linearly correlated level vectors for scalars

Vectors are stored packed, eight bits per byte, LSB-first (bit ``i`` of the
vector is bit ``i % 8`` of byte ``i // 8``), which is also the serialized
layout. Accumulator counters are signed fixed-point integers with scale
``FIXED_POINT_SCALE``, so fractional weights accumulate exactly and training
is reproducible bit for bit.
"""

from __future__ import annotations

import struct
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

__all__ = [
    "FIXED_POINT_SCALE",
    "Hypervector",
    "Accumulator",
    "LevelTable",
    "random_hv",
    "bind",
    "hamming",
    "similarity",
    "accumulate",
    "accumulate_bits",
    "majority_bits",
    "binarize",
    "bundle",
    "build_level_table",
    "serialize_hypervector",
    "deserialize_hypervector",
    "save_hypervector",
    "load_hypervector",
    "serialize_accumulator",
    "deserialize_accumulator",
    "save_accumulator",
    "load_accumulator",
]

FIXED_POINT_SCALE = 1000

_HV_HEADER = struct.Struct("<Q")
_ACC_HEADER = struct.Struct("<QIq")


def _pack_bits(bits: np.ndarray) -> np.ndarray:
    return np.packbits(bits, bitorder="little")

def _unpack_bits(data: np.ndarray, dim: int) -> np.ndarray:
    return np.unpackbits(data, count=dim, bitorder="little")


class Hypervector:
    """Immutable binary vector of ``dim`` bits, stored packed."""

    __slots__ = ("dim", "data", "_bits")

    def __init__(self, dim: int, data: np.ndarray):
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        expected = (dim + 7) // 8
        if data.dtype != np.uint8 or data.shape != (expected,):
            raise ValueError(
                f"packed data must be uint8 of shape ({expected},), got {data.dtype} {data.shape}"
            )
        self.dim = dim
        data = np.ascontiguousarray(data)
        data.flags.writeable = False
        self.data = data
        self._bits = None

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "Hypervector":
        """Build from an unpacked 0/1 array."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size == 0:
            raise ValueError("bits must be a non-empty 1-d array")
        if np.any(bits > 1):
            raise ValueError("bits must be 0 or 1")
        return cls(bits.size, _pack_bits(bits))

    @classmethod
    def zeros(cls, dim: int) -> "Hypervector":
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        return cls(dim, np.zeros((dim + 7) // 8, dtype=np.uint8))

    @property
    def bits(self) -> np.ndarray:
        """Unpacked 0/1 view, lazily computed and cached (read-only)."""
        if self._bits is None:
            bits = _unpack_bits(self.data, self.dim)
            bits.flags.writeable = False
            self._bits = bits
        return self._bits

    def popcount(self) -> int:
        return int(np.bitwise_count(self.data).sum(dtype=np.int64))

    def complement(self) -> "Hypervector":
        return Hypervector.from_bits(1 - self.bits)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Hypervector)
            and self.dim == other.dim
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        head = "".join(str(b) for b in self.bits[:16])
        tail = "..." if self.dim > 16 else ""
        return f"Hypervector(dim={self.dim}, bits={head}{tail})"


def random_hv(dim: int, rng_seed) -> Hypervector:
    """Random vector with i.i.d. uniform bits, deterministic given the seed.

    ``rng_seed`` may be an int, a ``numpy.random.Generator`` or anything else
    ``numpy.random.default_rng`` accepts.
    """
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}")
    rng = np.random.default_rng(rng_seed)
    return Hypervector.from_bits(rng.integers(0, 2, size=dim, dtype=np.uint8))


def _check_same_dim(a: Hypervector, b: Hypervector) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def bind(a: Hypervector, b: Hypervector) -> Hypervector:
    """XOR binding. Self-inverse: ``bind(bind(a, b), b) == a``."""
    _check_same_dim(a, b)
    return Hypervector(a.dim, np.bitwise_xor(a.data, b.data))


def hamming(a: Hypervector, b: Hypervector) -> int:
    _check_same_dim(a, b)
    return int(_kernels.hamming_one(a.data, b.data))


def similarity(a: Hypervector, b: Hypervector) -> float:
    """Normalized similarity ``1 - hamming/dim`` in [0, 1]."""
    return 1.0 - hamming(a, b) / a.dim


class Accumulator:
    """Per-bit signed fixed-point counters for bundling and training.

    ``counts[i]`` is the running sum of ``sign * weight`` votes for bit i,
    where a one-bit votes ``+weight`` and a zero-bit ``-weight``, stored as
    integers in units of ``1 / FIXED_POINT_SCALE``. ``n_added`` is the net
    signed weight received, in the same fixed-point units; it equals the
    total added weight when no subtractive updates occur.
    """

    __slots__ = ("dim", "counts", "n_added", "n_updates")

    def __init__(self, dim: int):
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim
        self.counts = np.zeros(dim, dtype=np.int64)
        self.n_added = 0
        self.n_updates = 0

    def copy(self) -> "Accumulator":
        out = Accumulator(self.dim)
        out.counts[:] = self.counts
        out.n_added = self.n_added
        out.n_updates = self.n_updates
        return out


def accumulate(acc: Accumulator, v: Hypervector, weight: float = 1.0, sign: int = 1) -> Accumulator:
    """Add (or subtract) a weighted vector into the accumulator in place.

    The weight is quantized to fixed point (nearest, ties to even) before
    accumulation, so repeated runs produce identical counters.
    """
    if acc.dim != v.dim:
        raise ValueError(f"dimension mismatch: {acc.dim} vs {v.dim}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if not np.isfinite(weight) or weight < 0:
        raise ValueError(f"weight must be finite and non-negative, got {weight}")
    w_fp = int(round(weight * FIXED_POINT_SCALE))
    delta = sign * w_fp
    if delta != 0:
        acc.counts += np.where(v.bits.astype(bool), delta, -delta)
    acc.n_added += delta
    acc.n_updates += 1
    return acc


def accumulate_bits(acc: Accumulator, bits: np.ndarray, weight: float = 1.0, sign: int = 1) -> Accumulator:
    """Raw-array variant of :func:`accumulate` for hot training loops."""
    if not np.isfinite(weight) or weight < 0:
        raise ValueError(f"weight must be finite and non-negative, got {weight}")
    w_fp = int(round(weight * FIXED_POINT_SCALE))
    delta = sign * w_fp
    if delta != 0:
        acc.counts += np.where(bits.astype(bool), delta, -delta)
    acc.n_added += delta
    acc.n_updates += 1
    return acc


def majority_bits(counts: np.ndarray, tie_bits: np.ndarray) -> np.ndarray:
    """Unpacked majority readout of signed counters; ties take tie_bits."""
    return np.where(counts > 0, 1, np.where(counts < 0, 0, tie_bits)).astype(np.uint8)


def binarize(acc: Accumulator, tie_break: Hypervector) -> Hypervector:
    """Majority readout: bit is 1 where counts > 0, 0 where < 0, tie bits at 0.

    The tie-break vector is drawn once per experiment and reused so that
    even vote counts resolve deterministically.
    """
    if acc.n_updates == 0:
        raise ValueError("cannot binarize an empty accumulator")
    if acc.dim != tie_break.dim:
        raise ValueError(f"dimension mismatch: {acc.dim} vs {tie_break.dim}")
    return Hypervector.from_bits(majority_bits(acc.counts, tie_break.bits))


def bundle(vectors: Sequence[Hypervector] | Iterable[Hypervector], tie_break: Hypervector) -> Hypervector:
    """Majority-vote bundle of equally weighted vectors."""
    acc = None
    for v in vectors:
        if acc is None:
            acc = Accumulator(v.dim)
        accumulate(acc, v)
    if acc is None:
        raise ValueError("cannot bundle an empty set of vectors")
    return binarize(acc, tie_break)


class LevelTable:
    """Correlated vectors for quantized scalar levels.

    Level 0 is random; each subsequent level flips one fixed block of
    ``dim // (2 * (num_levels - 1))`` previously untouched bit positions, so
    Hamming distance grows linearly in the level gap and the two endpoint
    levels are near-orthogonal.
    """

    __slots__ = ("dim", "num_levels", "block", "levels")

    def __init__(self, dim: int, num_levels: int, levels: list[Hypervector], block: int):
        self.dim = dim
        self.num_levels = num_levels
        self.levels = levels
        self.block = block

    def __len__(self) -> int:
        return self.num_levels

    def __getitem__(self, k: int) -> Hypervector:
        return self.levels[k]


def build_level_table(dim: int, num_levels: int, rng_seed) -> LevelTable:
    if num_levels < 2:
        raise ValueError(f"num_levels must be at least 2, got {num_levels}")
    block = dim // (2 * (num_levels - 1))
    if block == 0:
        raise ValueError(
            f"dim {dim} too small for {num_levels} levels with disjoint flip blocks"
        )
    base = random_hv(dim, rng_seed)
    bits = base.bits.copy()
    levels = [base]
    for k in range(1, num_levels):
        lo = (k - 1) * block
        bits[lo : lo + block] ^= 1
        levels.append(Hypervector.from_bits(bits))
    return LevelTable(dim, num_levels, levels, block)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def serialize_hypervector(v: Hypervector) -> bytes:
    """8-byte little-endian dim, then ceil(dim/8) payload bytes, LSB-first."""
    return _HV_HEADER.pack(v.dim) + v.data.tobytes()


def deserialize_hypervector(buf: bytes, offset: int = 0) -> tuple[Hypervector, int]:
    """Parse one serialized vector; returns (vector, next offset)."""
    if len(buf) - offset < _HV_HEADER.size:
        raise ValueError(f"truncated hypervector header at byte {offset}")
    (dim,) = _HV_HEADER.unpack_from(buf, offset)
    if dim == 0:
        raise ValueError(f"invalid hypervector dim 0 at byte {offset}")
    start = offset + _HV_HEADER.size
    nbytes = (dim + 7) // 8
    if len(buf) - start < nbytes:
        raise ValueError(f"truncated hypervector payload at byte {start}")
    data = np.frombuffer(buf, dtype=np.uint8, count=nbytes, offset=start).copy()
    tail = dim % 8
    if tail and (data[-1] >> tail):
        raise ValueError(f"non-zero padding bits in final byte at byte {start + nbytes - 1}")
    return Hypervector(int(dim), data), start + nbytes


def save_hypervector(v: Hypervector, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_hypervector(v))


def load_hypervector(path) -> Hypervector:
    with open(path, "rb") as fh:
        buf = fh.read()
    v, end = deserialize_hypervector(buf)
    if end != len(buf):
        raise ValueError(f"{path}: {len(buf) - end} trailing bytes after hypervector")
    return v


def serialize_accumulator(acc: Accumulator) -> bytes:
    """Header (dim u64, scale u32, n_added i64), then dim int32 LE counts."""
    if np.any(np.abs(acc.counts) > np.iinfo(np.int32).max):
        raise ValueError("accumulator counts overflow the 4-byte serialized range")
    header = _ACC_HEADER.pack(acc.dim, FIXED_POINT_SCALE, acc.n_added)
    return header + acc.counts.astype("<i4").tobytes()


def deserialize_accumulator(buf: bytes, offset: int = 0) -> tuple[Accumulator, int]:
    if len(buf) - offset < _ACC_HEADER.size:
        raise ValueError(f"truncated accumulator header at byte {offset}")
    dim, scale, n_added = _ACC_HEADER.unpack_from(buf, offset)
    if dim == 0:
        raise ValueError(f"invalid accumulator dim 0 at byte {offset}")
    if scale != FIXED_POINT_SCALE:
        raise ValueError(f"unsupported fixed-point scale {scale} at byte {offset}")
    start = offset + _ACC_HEADER.size
    nbytes = 4 * dim
    if len(buf) - start < nbytes:
        raise ValueError(f"truncated accumulator counts at byte {start}")
    acc = Accumulator(int(dim))
    acc.counts[:] = np.frombuffer(buf, dtype="<i4", count=dim, offset=start)
    acc.n_added = int(n_added)
    acc.n_updates = 1 if acc.n_added or np.any(acc.counts) else 0
    return acc, start + nbytes


def save_accumulator(acc: Accumulator, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_accumulator(acc))


def load_accumulator(path) -> Accumulator:
    with open(path, "rb") as fh:
        buf = fh.read()
    acc, end = deserialize_accumulator(buf)
    if end != len(buf):
        raise ValueError(f"{path}: {len(buf) - end} trailing bytes after accumulator")
    return acc
