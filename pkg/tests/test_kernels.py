"""Kernel semantics against slow python references, on both backends.

Every test parametrizes over the available implementations, so the numba
and numpy paths are each held to the same independent oracle.
"""

import numpy as np
import pytest
from oracles import (
    SCALE,
    McReference,
    OnlineReference,
    ham_oracle,
    majority_oracle,
    make_samples,
    pack,
)

from hdc_seizure import _kernels as K

BACKENDS = [("numpy", K.NUMPY_IMPLS)]
if K.NUMBA_IMPLS is not None:
    BACKENDS.append(("numba", K.NUMBA_IMPLS))

impls = pytest.mark.parametrize(
    "impl", [b[1] for b in BACKENDS], ids=[b[0] for b in BACKENDS]
)


# ---------------------------------------------------------------------------
# hamming
# ---------------------------------------------------------------------------


@impls
def test_hamming_one_matches_unpacked_count(impl):
    rng = np.random.default_rng(0)
    for dim in (1, 8, 13, 64, 333):
        packed, _ = make_samples(rng, 2, dim)
        assert impl["hamming_one"](packed[0], packed[1]) == ham_oracle(packed[0], packed[1], dim)
        assert impl["hamming_one"](packed[0], packed[0]) == 0


@impls
def test_hamming_many_matches_per_row(impl):
    rng = np.random.default_rng(1)
    packed, _ = make_samples(rng, 20, 101)
    q = packed[7]
    got = impl["hamming_many"](packed, q)
    want = [ham_oracle(packed[i], q, 101) for i in range(20)]
    assert got.tolist() == want


# ---------------------------------------------------------------------------
# sample-entropy counts
# ---------------------------------------------------------------------------


def sampen_brute(x, m, r):
    n = len(x)
    k = n - m
    a = b = 0
    for i in range(k):
        for j in range(i + 1, k):
            if max(abs(x[i + t] - x[j + t]) for t in range(m)) <= r:
                b += 1
                if abs(x[i + m] - x[j + m]) <= r:
                    a += 1
    return a, b


@impls
@pytest.mark.parametrize("m", [1, 2, 3])
def test_sampen_counts_matches_brute_force(impl, m):
    rng = np.random.default_rng(m)
    for n in (m + 1, m + 2, 10, 40):
        x = rng.normal(size=n)
        r = 0.2 * float(np.std(x)) if n > 1 else 0.1
        assert tuple(impl["sampen_counts"](x, m, r)) == sampen_brute(x, m, r)


@impls
def test_sampen_counts_degenerate_window(impl):
    # fewer than two templates means no pairs at all
    assert tuple(impl["sampen_counts"](np.zeros(2), 2, 0.5)) == (0, 0)


# ---------------------------------------------------------------------------
# step_update
# ---------------------------------------------------------------------------


@impls
@pytest.mark.parametrize("dtype", [np.int32, np.int64])
@pytest.mark.parametrize("delta", [SCALE, -400, 1, 0])
def test_step_update_matches_oracle(impl, dtype, delta):
    rng = np.random.default_rng(abs(delta) + 2)
    dim = 75
    counts = rng.integers(-2 * SCALE, 2 * SCALE, size=dim).astype(dtype)
    counts[rng.integers(0, dim, size=10)] = 0  # force some ties
    bits = (rng.random(dim) < 0.5).astype(np.uint8)
    tie_bits = (rng.random(dim) < 0.5).astype(np.uint8)
    want_counts = counts.astype(np.int64) + (
        0 if delta == 0 else np.where(bits > 0, delta, -delta)
    )
    want_maj = majority_oracle(want_counts, tie_bits)

    out = np.zeros((dim + 7) // 8, dtype=np.uint8)
    h = impl["step_update"](counts, bits, tie_bits, delta, out)

    assert counts.dtype == dtype  # updated in place, not reallocated
    assert np.array_equal(counts.astype(np.int64), want_counts)
    assert np.array_equal(out, pack(want_maj))
    assert h == int(np.sum(want_maj != bits))


@impls
def test_step_update_zero_delta_still_rewrites_readout(impl):
    counts = np.array([5, -5, 0, 0], dtype=np.int32)
    tie = np.array([1, 1, 1, 0], dtype=np.uint8)
    bits = np.array([0, 0, 1, 1], dtype=np.uint8)
    out = np.full(1, 0xFF, dtype=np.uint8)
    h = impl["step_update"](counts, bits, tie, 0, out)
    assert counts.tolist() == [5, -5, 0, 0]
    assert out[0] == 0b0101  # majority 1,0,1,0
    assert h == 2  # differs from bits at positions 0 and 3


# ---------------------------------------------------------------------------
# multi-centroid training kernel
# ---------------------------------------------------------------------------


def run_mc_kernel(impl, files, dim, tie_bits, cap=4):
    """Drive the kernel with the grow-and-resume protocol."""
    nbytes = (dim + 7) // 8
    matrix = np.zeros((cap, nbytes), dtype=np.uint8)
    counts = np.zeros((cap, dim), dtype=np.int32)
    cls_of = np.zeros(cap, dtype=np.int64)
    added = np.zeros(cap, dtype=np.int64)
    updates = np.zeros(cap, dtype=np.int64)
    seen = np.zeros(2, dtype=np.int8)
    k = 0
    grows = 0
    for packed, bits, labels in files:
        labels = np.ascontiguousarray(labels, dtype=np.int64)
        i = 0
        while i < len(labels):
            k, i = impl["mc_train_file"](
                packed, bits, labels, tie_bits,
                matrix, counts, cls_of, added, updates, seen, k, i, SCALE,
            )
            if i < len(labels):
                grows += 1
                cap *= 2
                matrix = np.concatenate([matrix, np.zeros_like(matrix)])
                counts = np.concatenate([counts, np.zeros_like(counts)])
                cls_of = np.concatenate([cls_of, np.zeros_like(cls_of)])
                added = np.concatenate([added, np.zeros_like(added)])
                updates = np.concatenate([updates, np.zeros_like(updates)])
    return k, matrix, counts, cls_of, added, updates, grows


@impls
@pytest.mark.parametrize("seed", range(6))
def test_mc_train_file_matches_reference(impl, seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(16, 80))
    tie_bits = (rng.random(dim) < 0.5).astype(np.uint8)
    files = []
    for _ in range(int(rng.integers(1, 4))):
        n = int(rng.integers(5, 60))
        packed, bits = make_samples(rng, n, dim)
        labels = rng.integers(0, 2, size=n)
        files.append((packed, bits, labels))

    ref = McReference(dim, tie_bits)
    for packed, bits, labels in files:
        ref.feed(packed, bits, labels)

    k, matrix, counts, cls_of, added, updates, _ = run_mc_kernel(impl, files, dim, tie_bits)

    assert k == len(ref.packed)
    for r in range(k):
        assert np.array_equal(matrix[r], ref.packed[r]), f"row {r} readout"
        assert np.array_equal(counts[r].astype(np.int64), ref.counts[r]), f"row {r} counts"
    assert cls_of[:k].tolist() == ref.cls
    assert added[:k].tolist() == ref.added
    assert updates[:k].tolist() == ref.updates


@impls
def test_mc_train_file_growth_resumes_exactly(impl):
    # a tiny bank forces several grow-and-resume round trips; the result
    # must not depend on where the interruptions landed
    rng = np.random.default_rng(99)
    dim = 32
    tie_bits = (rng.random(dim) < 0.5).astype(np.uint8)
    packed, bits = make_samples(rng, 120, dim)
    labels = rng.integers(0, 2, size=120)
    files = [(packed, bits, labels)]

    k_small, m_small, c_small, cls_small, a_small, u_small, grows = run_mc_kernel(
        impl, files, dim, tie_bits, cap=2
    )
    assert grows >= 1, "cap=2 must overflow on this data"
    k_big, m_big, c_big, cls_big, a_big, u_big, _ = run_mc_kernel(
        impl, files, dim, tie_bits, cap=512
    )
    assert k_small == k_big
    assert np.array_equal(m_small[:k_small], m_big[:k_big])
    assert np.array_equal(c_small[:k_small], c_big[:k_big])
    assert np.array_equal(cls_small[:k_small], cls_big[:k_big])
    assert np.array_equal(a_small[:k_small], a_big[:k_big])
    assert np.array_equal(u_small[:k_small], u_big[:k_big])


@impls
def test_mc_tie_goes_to_lower_class_then_lower_row(impl):
    dim = 8
    tie_bits = np.zeros(dim, dtype=np.uint8)
    nbytes = 1

    def bank(cls_pair):
        matrix = np.array([[0x00], [0xFF]], dtype=np.uint8)
        counts = np.where(
            np.unpackbits(matrix, bitorder="little").reshape(2, dim) > 0, SCALE, -SCALE
        ).astype(np.int32)
        cls_of = np.array(cls_pair, dtype=np.int64)
        added = np.full(2, SCALE, dtype=np.int64)
        updates = np.ones(2, dtype=np.int64)
        seen = np.ones(2, dtype=np.int8)
        return matrix, counts, cls_of, added, updates, seen

    sample_bits = np.array([1, 1, 1, 1, 0, 0, 0, 0], dtype=np.uint8)
    sample = pack(sample_bits).reshape(1, nbytes)  # distance 4 to both rows

    # class tie: row 0 is class 1, row 1 is class 0; a class-0 sample must
    # be absorbed by row 1, not spawn a third centroid
    matrix, counts, cls_of, added, updates, seen = bank([1, 0])
    k, i = impl["mc_train_file"](
        sample, sample_bits.reshape(1, dim), np.array([0], dtype=np.int64), tie_bits,
        matrix, counts, cls_of, added, updates, seen, 2, 0, SCALE,
    )
    assert (k, i) == (2, 1)
    assert added.tolist() == [SCALE, 2 * SCALE]

    # row tie: both rows class 0, equidistant; the lower row wins
    matrix, counts, cls_of, added, updates, seen = bank([0, 0])
    seen[1] = 0
    k, _ = impl["mc_train_file"](
        sample, sample_bits.reshape(1, dim), np.array([0], dtype=np.int64), tie_bits,
        matrix, counts, cls_of, added, updates, seen, 2, 0, SCALE,
    )
    assert k == 2
    assert added.tolist() == [2 * SCALE, SCALE]


@impls
def test_mc_first_sample_of_unseen_class_seeds(impl):
    rng = np.random.default_rng(3)
    dim = 24
    tie_bits = (rng.random(dim) < 0.5).astype(np.uint8)
    packed, bits = make_samples(rng, 2, dim)
    labels = np.array([1, 0], dtype=np.int64)
    k, _, counts, cls_of, added, updates, _ = run_mc_kernel(
        impl, [(packed, bits, labels)], dim, tie_bits
    )
    assert k == 2
    assert cls_of[:2].tolist() == [1, 0]  # seed order follows the data
    assert np.array_equal(counts[0].astype(np.int64), np.where(bits[0] > 0, SCALE, -SCALE))
    assert added[:2].tolist() == [SCALE, SCALE] and updates[:2].tolist() == [1, 1]


# ---------------------------------------------------------------------------
# online training kernel
# ---------------------------------------------------------------------------


def run_online_kernel(impl, files, dim, tie_bits, subtract):
    nbytes = (dim + 7) // 8
    protos = np.zeros((2, nbytes), dtype=np.uint8)
    counts = np.zeros((2, dim), dtype=np.int32)
    adds = np.zeros(2, dtype=np.int64)
    updates = np.zeros(2, dtype=np.int64)
    members = np.zeros(2, dtype=np.int64)
    seeded = np.zeros(2, dtype=np.int8)
    wfp_table = np.rint(np.arange(dim + 1) / dim * SCALE).astype(np.int64)
    log = []
    for packed, bits, labels in files:
        labels = np.ascontiguousarray(labels, dtype=np.int64)
        out_h = np.empty(len(labels), dtype=np.int64)
        impl["online_train_file"](
            packed, bits, labels, tie_bits,
            protos, counts, adds, updates, members, seeded,
            wfp_table, subtract, SCALE, out_h,
        )
        log.extend(out_h.tolist())
    return protos, counts, adds, updates, members, log


@impls
@pytest.mark.parametrize("subtract", [False, True], ids=["add", "add_subtract"])
@pytest.mark.parametrize("seed", range(5))
def test_online_train_file_matches_reference(impl, subtract, seed):
    rng = np.random.default_rng(seed + 50)
    dim = int(rng.integers(16, 96))
    tie_bits = (rng.random(dim) < 0.5).astype(np.uint8)
    files = []
    for _ in range(int(rng.integers(1, 4))):
        n = int(rng.integers(5, 80))
        # correlated bits per class so mispredictions happen but not always
        labels = rng.integers(0, 2, size=n)
        base = (rng.random((2, dim)) < 0.5).astype(np.uint8)
        noise = (rng.random((n, dim)) < 0.3).astype(np.uint8)
        bits = base[labels] ^ noise
        packed = np.stack([pack(b) for b in bits])
        files.append((packed, bits, labels))

    ref = OnlineReference(dim, tie_bits, subtract)
    for f in files:
        ref.feed(*f)
    protos, counts, adds, updates, members, log = run_online_kernel(
        impl, files, dim, tie_bits, subtract
    )

    assert log == ref.log  # seeds log -1, others the pre-update distance
    assert np.array_equal(protos, ref.protos)
    assert np.array_equal(counts.astype(np.int64), ref.counts)
    assert adds.tolist() == ref.adds.tolist()
    assert updates.tolist() == ref.updates.tolist()
    assert members.tolist() == ref.members.tolist()


@impls
def test_online_identical_sample_gets_zero_weight(impl):
    # a repeat of the seed has distance 0, weight 0: no counter change
    dim = 16
    tie_bits = np.zeros(dim, dtype=np.uint8)
    bits = np.tile((np.arange(dim) % 2).astype(np.uint8), (3, 1))
    packed = np.stack([pack(b) for b in bits])
    labels = np.array([0, 0, 1], dtype=np.int64)
    protos, counts, adds, updates, members, log = run_online_kernel(
        impl, [(packed, bits, labels)], dim, tie_bits, subtract=True
    )
    assert log == [-1, 0, -1]
    assert adds.tolist() == [SCALE, SCALE]
    assert updates.tolist() == [1, 1]


# ---------------------------------------------------------------------------
# encode kernels
# ---------------------------------------------------------------------------


def encode_two_stage_oracle(level_idx, level_bits, feat_bits, chan_bits, tie_bits):
    n_chan, n_feat = level_idx.shape
    dim = tie_bits.shape[0]
    chan_votes = np.zeros(dim, dtype=np.int64)
    for c in range(n_chan):
        votes = np.zeros(dim, dtype=np.int64)
        for f in range(n_feat):
            votes += level_bits[level_idx[c, f]] ^ feat_bits[f]
        bundled = majority_oracle(2 * votes - n_feat, tie_bits)
        chan_votes += bundled ^ chan_bits[c]
    return majority_oracle(2 * chan_votes - n_chan, tie_bits)


def encode_single_stage_oracle(level_idx, level_bits, feat_bits, chan_bits, tie_bits):
    n_chan, n_feat = level_idx.shape
    dim = tie_bits.shape[0]
    votes = np.zeros(dim, dtype=np.int64)
    for c in range(n_chan):
        for f in range(n_feat):
            votes += level_bits[level_idx[c, f]] ^ feat_bits[f] ^ chan_bits[c]
    return majority_oracle(2 * votes - n_chan * n_feat, tie_bits)


@impls
@pytest.mark.parametrize("kern,oracle", [
    ("encode_two_stage", encode_two_stage_oracle),
    ("encode_single_stage", encode_single_stage_oracle),
])
def test_encode_kernels_match_oracle(impl, kern, oracle):
    rng = np.random.default_rng(61)
    for _ in range(10):
        dim = int(rng.integers(8, 64))
        n_chan = int(rng.integers(1, 5))
        n_feat = int(rng.integers(1, 7))
        n_levels = int(rng.integers(2, 6))
        level_idx = rng.integers(0, n_levels, size=(n_chan, n_feat))
        level_bits = (rng.random((n_levels, dim)) < 0.5).astype(np.uint8)
        feat_bits = (rng.random((n_feat, dim)) < 0.5).astype(np.uint8)
        chan_bits = (rng.random((n_chan, dim)) < 0.5).astype(np.uint8)
        tie_bits = (rng.random(dim) < 0.5).astype(np.uint8)
        got = impl[kern](level_idx, level_bits, feat_bits, chan_bits, tie_bits)
        want = oracle(level_idx, level_bits, feat_bits, chan_bits, tie_bits)
        assert np.array_equal(got, want)


# ---------------------------------------------------------------------------
# backend wiring
# ---------------------------------------------------------------------------


def test_active_backend_is_consistent():
    assert K.BACKEND in ("numba", "numpy")
    assert K.NUMBA_ENABLED == (K.BACKEND == "numba")
    expected = K.NUMBA_IMPLS if K.NUMBA_ENABLED else K.NUMPY_IMPLS
    assert K.hamming_one is expected["hamming_one"]
    assert K.mc_train_file is expected["mc_train_file"]


def test_warm_up_runs():
    K.warm_up()
