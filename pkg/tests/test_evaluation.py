"""Post-processing, episode/duration metrics and the Wilcoxon test."""

import itertools

import numpy as np
import pytest
import scipy.stats

from hdc_seizure.evaluation import (
    InsufficientDataError,
    LabelSequence,
    MetricsReport,
    duration_counts,
    episode_counts,
    evaluate_sequences,
    label_blocks,
    merge_events,
    post_process,
    smooth_labels,
    wilcoxon_signed_rank,
)


def seq(labels, step=1.0):
    return LabelSequence(np.asarray(labels, dtype=np.int8), step)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def smooth_oracle(labels, step, window_sec):
    """Per-index truncated majority vote, ties to 1."""
    w = round(window_sec / step)
    if w <= 1:
        return list(labels)
    n = len(labels)
    out = []
    for i in range(n):
        lo = max(0, i - w // 2)
        hi = min(n, i + (w - 1) // 2 + 1)
        votes = labels[lo:hi]
        out.append(1 if 2 * sum(votes) >= len(votes) else 0)
    return out


def merge_oracle(labels, step, gap_sec):
    """Fill interior zero-gaps strictly shorter than gap_sec."""
    out = list(labels)
    blocks = blocks_oracle(labels)
    for (_, e), (s, _) in zip(blocks, blocks[1:]):
        if (s - e) * step < gap_sec:
            for i in range(e, s):
                out[i] = 1
    return out


def blocks_oracle(labels):
    blocks = []
    i = 0
    n = len(labels)
    while i < n:
        if labels[i] == 1:
            j = i
            while j < n and labels[j] == 1:
                j += 1
            blocks.append((i, j))
            i = j
        else:
            i += 1
    return blocks


def episode_oracle(pred, truth):
    tb = blocks_oracle(truth)
    pb = blocks_oracle(pred)

    def overlaps(a, b):
        return a[0] < b[1] and b[0] < a[1]

    tp = sum(1 for t in tb if any(overlaps(t, p) for p in pb))
    fp = sum(1 for p in pb if not any(overlaps(t, p) for t in tb))
    return tp, fp, len(tb) - tp


def duration_oracle(pred, truth):
    tp = sum(1 for p, t in zip(pred, truth) if p == 1 and t == 1)
    fp = sum(1 for p, t in zip(pred, truth) if p == 1 and t == 0)
    fn = sum(1 for p, t in zip(pred, truth) if p == 0 and t == 1)
    return tp, fp, fn


# ---------------------------------------------------------------------------
# LabelSequence
# ---------------------------------------------------------------------------


def test_label_sequence_validation():
    with pytest.raises(ValueError):
        LabelSequence(np.array([0, 2]), 1.0)
    with pytest.raises(ValueError):
        LabelSequence(np.array([]), 1.0)
    with pytest.raises(ValueError):
        LabelSequence(np.array([0, 1]), 0.0)
    with pytest.raises(ValueError):
        LabelSequence(np.array([[0], [1]]), 1.0)
    assert len(seq([0, 1, 0])) == 3


def test_label_blocks_half_open_runs():
    assert label_blocks(np.array([0, 1, 1, 0, 1])) == [(1, 3), (4, 5)]
    assert label_blocks(np.array([1, 1])) == [(0, 2)]
    assert label_blocks(np.array([0, 0])) == []


# ---------------------------------------------------------------------------
# smoothing
# ---------------------------------------------------------------------------


def test_smooth_hand_cases():
    # window of 3, ties to 1
    assert smooth_labels(seq([0, 1, 0, 1, 1]), 3.0).labels.tolist() == [1, 0, 1, 1, 1]
    # window of 1 or 0 leaves the sequence alone
    assert smooth_labels(seq([0, 1, 0]), 1.0).labels.tolist() == [0, 1, 0]
    assert smooth_labels(seq([0, 1, 0]), 0.0).labels.tolist() == [0, 1, 0]


def test_smooth_window_scales_with_step():
    labels = [0, 1, 0, 0, 1, 1, 0, 1]
    for step, window in ((1.0, 5.0), (0.5, 2.0), (2.0, 9.0)):
        got = smooth_labels(seq(labels, step), window).labels.tolist()
        assert got == smooth_oracle(labels, step, window), (step, window)


def test_smooth_matches_oracle_fuzz():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(1, 40))
        labels = rng.integers(0, 2, size=n).tolist()
        window = float(rng.integers(0, 9))
        got = smooth_labels(seq(labels), window).labels.tolist()
        assert got == smooth_oracle(labels, 1.0, window)


def test_smooth_rejects_negative_window():
    with pytest.raises(ValueError):
        smooth_labels(seq([0, 1]), -1.0)


# ---------------------------------------------------------------------------
# merging
# ---------------------------------------------------------------------------


def test_merge_hand_cases():
    assert merge_events(seq([1, 0, 1]), 1.5).labels.tolist() == [1, 1, 1]
    # a gap of exactly gap_sec stays open
    assert merge_events(seq([1, 0, 1]), 1.0).labels.tolist() == [1, 0, 1]
    assert merge_events(seq([1, 0, 1]), 0.0).labels.tolist() == [1, 0, 1]
    # leading and trailing zeros never fill
    assert merge_events(seq([0, 1, 0]), 99.0).labels.tolist() == [0, 1, 0]
    assert merge_events(seq([0, 0, 0]), 99.0).labels.tolist() == [0, 0, 0]


def test_merge_matches_oracle_fuzz_and_is_idempotent():
    rng = np.random.default_rng(1)
    for _ in range(300):
        n = int(rng.integers(1, 40))
        labels = rng.integers(0, 2, size=n).tolist()
        gap = float(rng.integers(0, 7))
        once = merge_events(seq(labels), gap)
        assert once.labels.tolist() == merge_oracle(labels, 1.0, gap)
        assert merge_events(once, gap).labels.tolist() == once.labels.tolist()


def test_merge_rejects_negative_gap():
    with pytest.raises(ValueError):
        merge_events(seq([0, 1]), -0.1)


def test_post_process_is_smooth_then_merge():
    rng = np.random.default_rng(2)
    for _ in range(50):
        labels = rng.integers(0, 2, size=30).tolist()
        got = post_process(seq(labels), smooth_sec=3.0, merge_gap_sec=4.0)
        want = merge_events(smooth_labels(seq(labels), 3.0), 4.0)
        assert got.labels.tolist() == want.labels.tolist()


# ---------------------------------------------------------------------------
# episode and duration counts
# ---------------------------------------------------------------------------


def test_episode_counts_hand_case():
    pred = seq([0, 1, 1, 0, 0])
    truth = seq([1, 1, 0, 0, 1])
    assert episode_counts(pred, truth) == (1, 0, 1)
    assert duration_counts(pred, truth) == (1, 1, 2)


def test_counts_exhaustive_short_sequences():
    for n in (1, 2, 3, 4, 5, 6):
        for pred in itertools.product((0, 1), repeat=n):
            for truth in itertools.product((0, 1), repeat=n):
                p, t = seq(pred), seq(truth)
                assert episode_counts(p, t) == episode_oracle(pred, truth)
                assert duration_counts(p, t) == duration_oracle(pred, truth)


def test_counts_random_long_sequences():
    rng = np.random.default_rng(3)
    for _ in range(200):
        pred = rng.integers(0, 2, size=150).tolist()
        truth = rng.integers(0, 2, size=150).tolist()
        assert episode_counts(seq(pred), seq(truth)) == episode_oracle(pred, truth)
        assert duration_counts(seq(pred), seq(truth)) == duration_oracle(pred, truth)


def test_counts_reject_mismatched_pairs():
    with pytest.raises(ValueError):
        episode_counts(seq([0, 1]), seq([0, 1, 1]))
    with pytest.raises(ValueError):
        duration_counts(seq([0, 1]), seq([0, 1], step=2.0))


# ---------------------------------------------------------------------------
# scores
# ---------------------------------------------------------------------------


def test_rates_from_counts():
    r = MetricsReport.from_counts((3, 1, 2), (30, 10, 20))
    assert r.tpr_episode == 0.6
    assert r.ppv_episode == 0.75
    assert r.f1_episode == pytest.approx(2 * 0.6 * 0.75 / 1.35)
    assert r.f1_de_mean == pytest.approx((r.f1_episode + r.f1_duration) / 2)


def test_rates_degenerate_conventions():
    # nothing to find and nothing claimed is a perfect score
    r = MetricsReport.from_counts((0, 0, 0), (0, 0, 0))
    assert (r.tpr_episode, r.ppv_episode, r.f1_episode) == (1.0, 1.0, 1.0)
    # claiming events where none exist zeroes precision and recall
    r = MetricsReport.from_counts((0, 5, 0), (0, 5, 0))
    assert (r.tpr_episode, r.ppv_episode, r.f1_episode) == (0.0, 0.0, 0.0)
    # missing every event
    r = MetricsReport.from_counts((0, 0, 5), (0, 0, 5))
    assert (r.tpr_episode, r.ppv_episode, r.f1_episode) == (0.0, 0.0, 0.0)


def test_evaluate_sequences_round_trip():
    pred = seq([0, 1, 1, 0, 0, 0, 1])
    truth = seq([0, 1, 1, 1, 0, 0, 0])
    r = evaluate_sequences(pred, truth)
    assert (r.tp_episode, r.fp_episode, r.fn_episode) == episode_counts(pred, truth)
    assert (r.tp_duration, r.fp_duration, r.fn_duration) == duration_counts(pred, truth)
    d = r.as_dict()
    assert set(d) == set(MetricsReport.SCORE_FIELDS + MetricsReport.COUNT_FIELDS)


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank
# ---------------------------------------------------------------------------


def wilcoxon_exact_oracle(a, b):
    """Full sign enumeration, independent of the implementation."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d = d[d != 0]
    n = len(d)
    ranks = scipy.stats.rankdata(np.abs(d))
    w_plus = ranks[d > 0].sum()
    sums = [
        sum(r for r, bit in zip(ranks, signs) if bit)
        for signs in itertools.product((0, 1), repeat=n)
    ]
    le = sum(1 for s in sums if s <= w_plus + 1e-12)
    ge = sum(1 for s in sums if s >= w_plus - 1e-12)
    return w_plus, min(1.0, 2.0 * min(le, ge) / 2**n)


@pytest.mark.parametrize("seed", range(8))
def test_wilcoxon_exact_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 11))
    a = rng.normal(size=n)
    b = a + rng.normal(size=n) * 0.5
    res = wilcoxon_signed_rank(a, b)
    w, p = wilcoxon_exact_oracle(a, b)
    assert res.method == "exact"
    assert res.statistic == pytest.approx(w)
    assert res.p_value == pytest.approx(p, abs=1e-12)


def test_wilcoxon_exact_with_ties_and_zeros():
    a = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
    b = np.array([1.0, 1.0, 2.0, 5.0, 4.0, 5.0, 5.5])  # one zero diff, tied |d|
    res = wilcoxon_signed_rank(a, b)
    w, p = wilcoxon_exact_oracle(a, b)
    assert res.n == 6
    assert res.statistic == pytest.approx(w)
    assert res.p_value == pytest.approx(p, abs=1e-12)


def test_wilcoxon_exact_agrees_with_scipy_when_tie_free():
    rng = np.random.default_rng(11)
    a = rng.normal(size=9)
    b = rng.normal(size=9)
    res = wilcoxon_signed_rank(a, b)
    ref = scipy.stats.wilcoxon(a, b, alternative="two-sided", method="exact")
    assert res.p_value == pytest.approx(ref.pvalue, abs=1e-12)


def test_wilcoxon_approx_branch_matches_scipy():
    rng = np.random.default_rng(12)
    a = rng.normal(size=40)
    b = a + rng.normal(size=40) * 0.3 + 0.1
    res = wilcoxon_signed_rank(a, b)
    assert res.method == "approx"
    ref = scipy.stats.wilcoxon(
        a, b, alternative="two-sided", method="approx", correction=False
    )
    assert res.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_wilcoxon_is_symmetric():
    rng = np.random.default_rng(13)
    for n in (8, 30):
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        r1 = wilcoxon_signed_rank(a, b)
        r2 = wilcoxon_signed_rank(b, a)
        assert r1.p_value == pytest.approx(r2.p_value, abs=1e-12)


def test_wilcoxon_insufficient_data():
    a = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    with pytest.raises(InsufficientDataError):
        wilcoxon_signed_rank(a, a)  # every difference is zero
    with pytest.raises(InsufficientDataError):
        wilcoxon_signed_rank(a[:4], a[:4] + 1.0)


def test_wilcoxon_input_validation():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank(np.zeros(5), np.zeros(6))
    with pytest.raises(ValueError):
        wilcoxon_signed_rank(np.array([np.nan] * 6), np.zeros(6))
