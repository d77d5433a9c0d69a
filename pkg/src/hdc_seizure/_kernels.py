"""Hot numeric kernels: numba fast paths with pure-numpy fallbacks.

Everything here operates on raw numpy arrays so the same code serves the
hypervector algebra, the feature extractors and the training loops without
touching Python objects in the inner loop.

Backend selection happens once, at import time:

* the numba path is used when numba is importable and the environment
  variable ``HDC_SEIZURE_NO_NUMBA`` is unset (or set to ``0``),
* otherwise the numpy implementations are used.

Both implementations of every kernel stay importable (``NUMPY_IMPLS`` and
``NUMBA_IMPLS``) so the test suite can assert bit-for-bit equivalence and
``benchmarks/kernel_bench.py`` can time them side by side.

Packed vectors are uint8 arrays, eight bits per byte, LSB-first; unpacked
vectors are uint8 arrays of 0/1 values.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "NUMBA_ENABLED",
    "NUMPY_IMPLS",
    "NUMBA_IMPLS",
    "hamming_one",
    "hamming_many",
    "sampen_counts",
    "step_update",
    "mc_train_file",
    "online_train_file",
    "encode_two_stage",
    "encode_single_stage",
    "warm_up",
]

_ENV_FLAG = "HDC_SEIZURE_NO_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(_ENV_FLAG, "0").strip().lower() not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# numpy implementations (always available; the reference semantics)
# ---------------------------------------------------------------------------


def _hamming_one_np(a: np.ndarray, b: np.ndarray) -> int:
    """Hamming distance between two packed vectors."""
    return int(np.bitwise_count(np.bitwise_xor(a, b)).sum(dtype=np.int64))


def _hamming_many_np(x: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamming distance of packed vector ``q`` to every row of ``x``."""
    return np.bitwise_count(np.bitwise_xor(x, q)).sum(axis=1, dtype=np.int64)


def _sampen_counts_np(x: np.ndarray, m: int, r: float) -> tuple[int, int]:
    """Template match counts for sample entropy.

    Counts pairs i < j (both in ``0 .. n-m-1``, so every template has an
    extension) whose length-``m`` templates are within Chebyshev distance
    ``r`` (count B) and whose length-``m+1`` extensions also match (count A).
    Self-matches are excluded by the strict i < j pairing.
    """
    n = x.shape[0]
    k = n - m
    if k < 2:
        return 0, 0
    tm = np.lib.stride_tricks.sliding_window_view(x, m)[:k]
    ext = x[m : m + k]
    a = 0
    b = 0
    # chunk rows to cap the (rows, k, m) broadcast at ~4M elements
    step = max(1, 4_000_000 // max(1, k * m))
    for i0 in range(0, k - 1, step):
        i1 = min(i0 + step, k - 1)
        d = np.abs(tm[i0:i1, None, :] - tm[None, :, :]).max(axis=2)
        upper = np.arange(k)[None, :] > np.arange(i0, i1)[:, None]
        bm = (d <= r) & upper
        b += int(bm.sum())
        em = np.abs(ext[i0:i1, None] - ext[None, :]) <= r
        a += int((bm & em).sum())
    return a, b


def _step_update_np(
    counts: np.ndarray,
    bits: np.ndarray,
    tie_bits: np.ndarray,
    delta: int,
    out_packed: np.ndarray,
) -> int:
    """One sequential training step, fused.

    Adds ``delta`` fixed-point votes of the 0/1 sample ``bits`` into the
    signed counters (one-bits vote ``+delta``, zero-bits ``-delta``) and
    rewrites ``out_packed`` with the packed majority readout, ties from
    ``tie_bits``. This is the inner step of the per-sample trainers, where
    a separate accumulate / binarize / pack sequence costs three full
    passes over the vector. Returns the Hamming distance between the
    updated readout and ``bits``, which the readout loop yields for free.
    """
    if delta != 0:
        d = counts.dtype.type(delta)
        counts += np.where(bits.astype(bool), d, -d)
    maj = np.where(counts > 0, 1, np.where(counts < 0, 0, tie_bits)).astype(np.uint8)
    out_packed[:] = np.packbits(maj, bitorder="little")
    return int(np.count_nonzero(maj != bits))


def _mc_train_file_np(
    packed: np.ndarray,
    bits: np.ndarray,
    labels: np.ndarray,
    tie_bits: np.ndarray,
    matrix: np.ndarray,
    counts: np.ndarray,
    cls_of: np.ndarray,
    n_added: np.ndarray,
    n_updates: np.ndarray,
    seen: np.ndarray,
    k: int,
    i0: int,
    scale: int,
) -> tuple[int, int]:
    """Multi-centroid training sweep over one encoded file.

    Rows ``0..k`` of ``matrix`` / ``counts`` / ``cls_of`` hold the live
    centroid bank. Starting at sample ``i0``: the first sample of an unseen
    class seeds a centroid; otherwise the nearest centroid wins (ties to
    lower class then lower row) and either absorbs the sample (correct
    class, ``scale`` fixed-point votes, immediate re-binarize) or a new
    centroid of the true class is spawned. Returns ``(k, next_i)``;
    ``next_i < len(packed)`` means the bank is full and the caller must
    grow the arrays and resume.
    """
    n = packed.shape[0]
    cap = matrix.shape[0]
    for i in range(i0, n):
        y = int(labels[i])
        if not seen[y]:
            if k == cap:
                return k, i
            seen[y] = 1
            matrix[k] = packed[i]
            counts[k] = np.where(bits[i].astype(bool), scale, -scale)
            cls_of[k] = y
            n_added[k] = scale
            n_updates[k] = 1
            k += 1
            continue
        dists = _hamming_many_np(matrix[:k], packed[i])
        best = min(range(k), key=lambda r: (dists[r], cls_of[r], r))
        if cls_of[best] == y:
            _step_update_np(counts[best], bits[i], tie_bits, scale, matrix[best])
            n_added[best] += scale
            n_updates[best] += 1
        else:
            if k == cap:
                return k, i
            matrix[k] = packed[i]
            counts[k] = np.where(bits[i].astype(bool), scale, -scale)
            cls_of[k] = y
            n_added[k] = scale
            n_updates[k] = 1
            k += 1
    return k, n


def _online_train_file_np(
    packed: np.ndarray,
    bits: np.ndarray,
    labels: np.ndarray,
    tie_bits: np.ndarray,
    protos: np.ndarray,
    counts: np.ndarray,
    adds: np.ndarray,
    updates: np.ndarray,
    members: np.ndarray,
    seeded: np.ndarray,
    wfp_table: np.ndarray,
    subtract: bool,
    scale: int,
    out_h: np.ndarray,
) -> None:
    """Weighted online training sweep over one encoded file.

    Row index equals the class label. Each sample is added to its class
    prototype with the fixed-point weight ``wfp_table[hamming]`` (the
    quantized ``hamming / dim``), re-binarizing immediately; zero weights
    skip. With ``subtract``, the updated pair then predicts the sample and
    a misprediction subtracts the same weight from the winning row. The
    first sample of a class seeds its row with weight one (``scale`` in
    fixed point). ``out_h[i]`` records the pre-update Hamming distance,
    -1 for the seed samples, so the caller can reconstruct the weight log.
    """
    for i in range(packed.shape[0]):
        y = int(labels[i])
        if not seeded[y]:
            seeded[y] = 1
            protos[y] = packed[i]
            counts[y] = np.where(bits[i].astype(bool), scale, -scale)
            adds[y] = scale
            updates[y] = 1
            members[y] = scale
            out_h[i] = -1
            continue
        h = _hamming_one_np(packed[i], protos[y])
        out_h[i] = h
        w_fp = int(wfp_table[h])
        h_own = h
        if w_fp:
            h_own = _step_update_np(counts[y], bits[i], tie_bits, w_fp, protos[y])
            adds[y] += w_fp
            updates[y] += 1
            members[y] += w_fp
        if subtract and seeded[0] and seeded[1] and w_fp:
            # the add step already reported the distance to the own row
            d_other = _hamming_one_np(protos[1 - y], packed[i])
            d0, d1 = (h_own, d_other) if y == 0 else (d_other, h_own)
            pred = 0 if d0 <= d1 else 1
            if pred != y:
                _step_update_np(counts[pred], bits[i], tie_bits, -w_fp, protos[pred])
                adds[pred] -= w_fp
                updates[pred] += 1


def _majority_rows(votes: np.ndarray, n_voters: int, tie_bits: np.ndarray) -> np.ndarray:
    """Per-position majority of ``n_voters`` one-votes, ties from tie_bits."""
    s2 = 2 * votes
    return np.where(s2 > n_voters, 1, np.where(s2 < n_voters, 0, tie_bits)).astype(np.uint8)


def _encode_two_stage_np(
    level_idx: np.ndarray,
    level_bits: np.ndarray,
    feat_bits: np.ndarray,
    chan_bits: np.ndarray,
    tie_bits: np.ndarray,
) -> np.ndarray:
    """Two-stage window encoding on unpacked bits.

    Per channel: majority-bundle the level-bound feature vectors, then bind
    the channel vector; majority-bundle the channel results. Ties at both
    stages resolve to the tie-break bits.
    """
    n_chan, n_feat = level_idx.shape
    chan_votes = np.zeros(tie_bits.shape[0], dtype=np.int64)
    for c in range(n_chan):
        ones = np.bitwise_xor(level_bits[level_idx[c]], feat_bits).sum(axis=0, dtype=np.int64)
        ch = _majority_rows(ones, n_feat, tie_bits)
        chan_votes += np.bitwise_xor(ch, chan_bits[c])
    return _majority_rows(chan_votes, n_chan, tie_bits)


def _encode_single_stage_np(
    level_idx: np.ndarray,
    level_bits: np.ndarray,
    feat_bits: np.ndarray,
    chan_bits: np.ndarray,
    tie_bits: np.ndarray,
) -> np.ndarray:
    """Single-stage variant: one flat bundle over all (channel, feature) pairs."""
    n_chan, n_feat = level_idx.shape
    votes = np.zeros(tie_bits.shape[0], dtype=np.int64)
    for c in range(n_chan):
        triple = np.bitwise_xor(level_bits[level_idx[c]], feat_bits)
        np.bitwise_xor(triple, chan_bits[c], out=triple)
        votes += triple.sum(axis=0, dtype=np.int64)
    return _majority_rows(votes, n_chan * n_feat, tie_bits)


NUMPY_IMPLS = {
    "hamming_one": _hamming_one_np,
    "hamming_many": _hamming_many_np,
    "sampen_counts": _sampen_counts_np,
    "step_update": _step_update_np,
    "mc_train_file": _mc_train_file_np,
    "online_train_file": _online_train_file_np,
    "encode_two_stage": _encode_two_stage_np,
    "encode_single_stage": _encode_single_stage_np,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

NUMBA_IMPLS: dict | None = None

if _numba_requested():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None
else:
    njit = None

if njit is not None:

    @njit(cache=True)
    def _popcount8(v):
        # SWAR popcount of one byte
        v = v - ((v >> 1) & 0x55)
        v = (v & 0x33) + ((v >> 2) & 0x33)
        return (v + (v >> 4)) & 0x0F

    @njit(cache=True)
    def _hamming_one_nb(a, b):
        total = 0
        for i in range(a.shape[0]):
            total += _popcount8(np.int64(a[i] ^ b[i]))
        return total

    @njit(cache=True)
    def _hamming_many_nb(x, q):
        rows = x.shape[0]
        nbytes = x.shape[1]
        out = np.empty(rows, dtype=np.int64)
        for i in range(rows):
            total = 0
            for j in range(nbytes):
                total += _popcount8(np.int64(x[i, j] ^ q[j]))
            out[i] = total
        return out

    @njit(cache=True)
    def _sampen_counts_nb(x, m, r):
        n = x.shape[0]
        k = n - m
        a = 0
        b = 0
        if k < 2:
            return a, b
        for i in range(k - 1):
            for j in range(i + 1, k):
                d = 0.0
                for t in range(m):
                    diff = abs(x[i + t] - x[j + t])
                    if diff > d:
                        d = diff
                if d <= r:
                    b += 1
                    if abs(x[i + m] - x[j + m]) <= r:
                        a += 1
        return a, b

    @njit(cache=True)
    def _step_update_nb(counts, bits, tie_bits, delta, out_packed):
        dim = counts.shape[0]
        h = 0
        for bidx in range(out_packed.shape[0]):
            base = bidx * 8
            top = dim - base
            if top > 8:
                top = 8
            byte = 0
            for o in range(top):
                j = base + o
                if bits[j]:
                    c = counts[j] + delta
                else:
                    c = counts[j] - delta
                counts[j] = c
                if c > 0 or (c == 0 and tie_bits[j]):
                    byte |= 1 << o
                    if bits[j] == 0:
                        h += 1
                elif bits[j] != 0:
                    h += 1
            out_packed[bidx] = byte
        return h

    @njit(cache=True)
    def _mc_train_file_nb(
        packed, bits, labels, tie_bits, matrix, counts, cls_of, n_added, n_updates, seen, k, i0, scale
    ):
        n = packed.shape[0]
        nbytes = packed.shape[1]
        dim = tie_bits.shape[0]
        cap = matrix.shape[0]
        for i in range(i0, n):
            y = labels[i]
            if seen[y] == 0:
                if k == cap:
                    return k, i
                seen[y] = 1
                for j in range(nbytes):
                    matrix[k, j] = packed[i, j]
                for j in range(dim):
                    counts[k, j] = scale if bits[i, j] else -scale
                cls_of[k] = y
                n_added[k] = scale
                n_updates[k] = 1
                k += 1
                continue
            best_d = np.int64(1) << 62
            best_c = np.int64(1) << 62
            best_r = -1
            for r in range(k):
                d = 0
                for j in range(nbytes):
                    d += _popcount8(np.int64(matrix[r, j] ^ packed[i, j]))
                c = cls_of[r]
                if d < best_d or (d == best_d and c < best_c):
                    best_d = d
                    best_c = c
                    best_r = r
            if best_c == y:
                _step_update_nb(counts[best_r], bits[i], tie_bits, scale, matrix[best_r])
                n_added[best_r] += scale
                n_updates[best_r] += 1
            else:
                if k == cap:
                    return k, i
                for j in range(nbytes):
                    matrix[k, j] = packed[i, j]
                for j in range(dim):
                    counts[k, j] = scale if bits[i, j] else -scale
                cls_of[k] = y
                n_added[k] = scale
                n_updates[k] = 1
                k += 1
        return k, n

    @njit(cache=True)
    def _online_train_file_nb(
        packed, bits, labels, tie_bits, protos, counts, adds, updates, members, seeded,
        wfp_table, subtract, scale, out_h,
    ):
        nbytes = packed.shape[1]
        dim = tie_bits.shape[0]
        for i in range(packed.shape[0]):
            y = labels[i]
            if seeded[y] == 0:
                seeded[y] = 1
                for j in range(nbytes):
                    protos[y, j] = packed[i, j]
                for j in range(dim):
                    counts[y, j] = scale if bits[i, j] else -scale
                adds[y] = scale
                updates[y] = 1
                members[y] = scale
                out_h[i] = -1
                continue
            h = 0
            for j in range(nbytes):
                h += _popcount8(np.int64(packed[i, j] ^ protos[y, j]))
            out_h[i] = h
            w_fp = wfp_table[h]
            h_own = np.int64(h)
            if w_fp != 0:
                h_own = _step_update_nb(counts[y], bits[i], tie_bits, w_fp, protos[y])
                adds[y] += w_fp
                updates[y] += 1
                members[y] += w_fp
            if subtract and seeded[0] == 1 and seeded[1] == 1 and w_fp != 0:
                # the add step already reported the distance to the own row
                other = 1 - y
                d_other = 0
                for j in range(nbytes):
                    d_other += _popcount8(np.int64(protos[other, j] ^ packed[i, j]))
                if y == 0:
                    d0, d1 = h_own, d_other
                else:
                    d0, d1 = d_other, h_own
                pred = 0 if d0 <= d1 else 1
                if pred != y:
                    _step_update_nb(counts[pred], bits[i], tie_bits, -w_fp, protos[pred])
                    adds[pred] -= w_fp
                    updates[pred] += 1

    @njit(cache=True)
    def _encode_two_stage_nb(level_idx, level_bits, feat_bits, chan_bits, tie_bits):
        n_chan, n_feat = level_idx.shape
        dim = tie_bits.shape[0]
        chan_votes = np.zeros(dim, dtype=np.int64)
        ones = np.empty(dim, dtype=np.int64)
        for c in range(n_chan):
            ones[:] = 0
            for f in range(n_feat):
                lrow = level_bits[level_idx[c, f]]
                frow = feat_bits[f]
                for d in range(dim):
                    ones[d] += lrow[d] ^ frow[d]
            crow = chan_bits[c]
            for d in range(dim):
                s2 = 2 * ones[d]
                if s2 > n_feat:
                    bit = 1
                elif s2 < n_feat:
                    bit = 0
                else:
                    bit = tie_bits[d]
                chan_votes[d] += bit ^ crow[d]
        out = np.empty(dim, dtype=np.uint8)
        for d in range(dim):
            s2 = 2 * chan_votes[d]
            if s2 > n_chan:
                out[d] = 1
            elif s2 < n_chan:
                out[d] = 0
            else:
                out[d] = tie_bits[d]
        return out

    @njit(cache=True)
    def _encode_single_stage_nb(level_idx, level_bits, feat_bits, chan_bits, tie_bits):
        n_chan, n_feat = level_idx.shape
        dim = tie_bits.shape[0]
        votes = np.zeros(dim, dtype=np.int64)
        for c in range(n_chan):
            crow = chan_bits[c]
            for f in range(n_feat):
                lrow = level_bits[level_idx[c, f]]
                frow = feat_bits[f]
                for d in range(dim):
                    votes[d] += lrow[d] ^ frow[d] ^ crow[d]
        total = n_chan * n_feat
        out = np.empty(dim, dtype=np.uint8)
        for d in range(dim):
            s2 = 2 * votes[d]
            if s2 > total:
                out[d] = 1
            elif s2 < total:
                out[d] = 0
            else:
                out[d] = tie_bits[d]
        return out

    def _sampen_counts_nb_wrapped(x, m, r):
        a, b = _sampen_counts_nb(x, np.int64(m), float(r))
        return int(a), int(b)

    def _hamming_one_nb_wrapped(a, b):
        return int(_hamming_one_nb(a, b))

    def _step_update_nb_wrapped(counts, bits, tie_bits, delta, out_packed):
        return int(_step_update_nb(counts, bits, tie_bits, np.int64(delta), out_packed))

    def _mc_train_file_nb_wrapped(
        packed, bits, labels, tie_bits, matrix, counts, cls_of, n_added, n_updates, seen, k, i0, scale
    ):
        k, i = _mc_train_file_nb(
            packed, bits, labels, tie_bits, matrix, counts, cls_of, n_added, n_updates,
            seen, np.int64(k), np.int64(i0), np.int64(scale),
        )
        return int(k), int(i)

    def _online_train_file_nb_wrapped(
        packed, bits, labels, tie_bits, protos, counts, adds, updates, members, seeded,
        wfp_table, subtract, scale, out_h,
    ):
        _online_train_file_nb(
            packed, bits, labels, tie_bits, protos, counts, adds, updates, members,
            seeded, wfp_table, bool(subtract), np.int64(scale), out_h,
        )

    NUMBA_IMPLS = {
        "hamming_one": _hamming_one_nb_wrapped,
        "hamming_many": _hamming_many_nb,
        "sampen_counts": _sampen_counts_nb_wrapped,
        "step_update": _step_update_nb_wrapped,
        "mc_train_file": _mc_train_file_nb_wrapped,
        "online_train_file": _online_train_file_nb_wrapped,
        "encode_two_stage": _encode_two_stage_nb,
        "encode_single_stage": _encode_single_stage_nb,
    }


if NUMBA_IMPLS is not None:
    BACKEND = "numba"
    _ACTIVE = NUMBA_IMPLS
else:
    BACKEND = "numpy"
    _ACTIVE = NUMPY_IMPLS

NUMBA_ENABLED = BACKEND == "numba"

hamming_one = _ACTIVE["hamming_one"]
hamming_many = _ACTIVE["hamming_many"]
sampen_counts = _ACTIVE["sampen_counts"]
step_update = _ACTIVE["step_update"]
mc_train_file = _ACTIVE["mc_train_file"]
online_train_file = _ACTIVE["online_train_file"]
encode_two_stage = _ACTIVE["encode_two_stage"]
encode_single_stage = _ACTIVE["encode_single_stage"]


def warm_up() -> None:
    """Trigger JIT compilation of every active kernel on tiny inputs."""
    a = np.array([1, 2, 3], dtype=np.uint8)
    b = np.array([3, 2, 1], dtype=np.uint8)
    hamming_one(a, b)
    hamming_many(np.stack([a, b]), a)
    sampen_counts(np.arange(8, dtype=np.float64), 2, 0.5)
    step_update(
        np.zeros(24, dtype=np.int32),
        np.zeros(24, dtype=np.uint8),
        np.zeros(24, dtype=np.uint8),
        1,
        np.zeros(3, dtype=np.uint8),
    )
    packed = np.zeros((2, 2), dtype=np.uint8)
    bits = np.zeros((2, 16), dtype=np.uint8)
    labels = np.array([0, 1], dtype=np.int64)
    tie16 = np.zeros(16, dtype=np.uint8)
    mc_train_file(
        packed, bits, labels, tie16,
        np.zeros((4, 2), dtype=np.uint8), np.zeros((4, 16), dtype=np.int32),
        np.zeros(4, dtype=np.int64), np.zeros(4, dtype=np.int64), np.zeros(4, dtype=np.int64),
        np.zeros(2, dtype=np.int8), 0, 0, 1000,
    )
    online_train_file(
        packed, bits, labels, tie16,
        np.zeros((2, 2), dtype=np.uint8), np.zeros((2, 16), dtype=np.int32),
        np.zeros(2, dtype=np.int64), np.zeros(2, dtype=np.int64), np.zeros(2, dtype=np.int64),
        np.zeros(2, dtype=np.int8), np.zeros(17, dtype=np.int64), True, 1000,
        np.zeros(2, dtype=np.int64),
    )
    idx = np.zeros((2, 2), dtype=np.int64)
    bits = np.zeros((2, 16), dtype=np.uint8)
    tie = np.zeros(16, dtype=np.uint8)
    encode_two_stage(idx, bits, bits, bits, tie)
    encode_single_stage(idx, bits, bits, bits, tie)
