"""Item memory fitting, quantization and window encoding."""

import numpy as np
import pytest

from hdc_seizure.encoder import (
    ItemMemory,
    encode_table,
    encode_window,
    fit_item_memory,
    load_item_memory,
    quantize,
    save_item_memory,
    serialize_item_memory,
)
from hdc_seizure.features import FeatureTable, FeatureWindow
from hdc_seizure.hv import Hypervector, bind, bundle, hamming

DIM = 256


def make_table(values, channels=("c0", "c1"), columns=("f0", "f1", "f2"), labels=None):
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if labels is None:
        labels = np.zeros(n, dtype=np.int64)
    t0 = np.arange(n, dtype=np.float64)
    return FeatureTable(t0, t0 + 4.0, labels, values, list(channels), list(columns))


def random_table(rng, n=30, n_chan=2, n_col=3):
    return make_table(rng.normal(size=(n, n_chan, n_col)))


# ---------------------------------------------------------------------------
# fit_item_memory
# ---------------------------------------------------------------------------


def test_fit_is_deterministic_in_seed_and_ignores_data():
    rng = np.random.default_rng(0)
    im1 = fit_item_memory(random_table(rng), DIM, num_levels=8, rng_seed=7)
    im2 = fit_item_memory(random_table(rng), DIM, num_levels=8, rng_seed=7)
    # different data, same seed: identical items, different bounds
    for a, b in zip(im1.feature_vectors, im2.feature_vectors):
        assert a == b
    for a, b in zip(im1.channel_vectors, im2.channel_vectors):
        assert a == b
    assert im1.tie_break == im2.tie_break
    assert im1.level_table[3] == im2.level_table[3]
    im3 = fit_item_memory(random_table(rng), DIM, num_levels=8, rng_seed=8)
    assert im1.tie_break != im3.tie_break


def test_fit_bounds_are_percentiles_pooled_over_channels():
    vals = np.zeros((100, 2, 3))
    vals[:, :, 0] = np.linspace(0.0, 100.0, 200).reshape(100, 2)
    vals[:, :, 1] = 5.0  # constant column pads to +-1
    vals[:, 0, 2] = -10.0
    vals[:, 1, 2] = 10.0
    im = fit_item_memory(make_table(vals), DIM, rng_seed=0)
    pooled = vals.reshape(-1, 3)
    lo, hi = np.percentile(pooled, [1.0, 99.0], axis=0)
    assert im.norm_bounds[0].tolist() == [lo[0], hi[0]]
    assert im.norm_bounds[1].tolist() == [4.0, 6.0]
    assert im.norm_bounds[2].tolist() == [lo[2], hi[2]]


def test_fit_pools_multiple_tables():
    lowish = make_table(np.full((10, 2, 3), 1.0))
    highish = make_table(np.full((10, 2, 3), 9.0))
    im = fit_item_memory([lowish, highish], DIM, rng_seed=0)
    assert np.all(im.norm_bounds[:, 0] >= 0.9)
    assert np.all(im.norm_bounds[:, 1] <= 9.1)
    # pooled two-level data spans the full range
    assert np.all(im.norm_bounds[:, 1] - im.norm_bounds[:, 0] > 7.0)


def test_fit_rejects_mismatched_and_empty_inputs():
    rng = np.random.default_rng(1)
    with pytest.raises(ValueError):
        fit_item_memory([], DIM)
    other = make_table(rng.normal(size=(5, 2, 3)), columns=("x", "y", "z"))
    with pytest.raises(ValueError):
        fit_item_memory([random_table(rng), other], DIM)


def test_item_memory_validation():
    rng = np.random.default_rng(2)
    im = fit_item_memory(random_table(rng), DIM, rng_seed=0)
    with pytest.raises(ValueError):
        ItemMemory(
            im.dim, im.num_levels, im.columns, im.channels,
            im.feature_vectors[:-1], im.channel_vectors, im.level_table,
            im.tie_break, im.norm_bounds,
        )
    bad_bounds = im.norm_bounds.copy()
    bad_bounds[0] = (2.0, 2.0)
    with pytest.raises(ValueError):
        ItemMemory(
            im.dim, im.num_levels, im.columns, im.channels,
            im.feature_vectors, im.channel_vectors, im.level_table,
            im.tie_break, bad_bounds,
        )
    with pytest.raises(ValueError):
        ItemMemory(
            im.dim, im.num_levels, im.columns, im.channels,
            im.feature_vectors, im.channel_vectors, im.level_table,
            im.tie_break, im.norm_bounds, mode="triple_stage",
        )


# ---------------------------------------------------------------------------
# quantize
# ---------------------------------------------------------------------------


def test_quantize_equal_width_levels():
    bounds = np.array([[0.0, 10.0]])
    vals = np.array([[0.0], [0.999], [1.0], [5.0], [9.999], [10.0], [11.0], [-3.0]])
    got = quantize(vals, bounds, num_levels=10)
    assert got.ravel().tolist() == [0, 0, 1, 5, 9, 9, 9, 0]


def test_quantize_top_edge_maps_to_last_level():
    bounds = np.array([[0.0, 1.0]])
    got = quantize(np.array([[1.0], [1.5]]), bounds, num_levels=4)
    assert got.ravel().tolist() == [3, 3]


def test_quantize_per_column_bounds():
    bounds = np.array([[0.0, 1.0], [100.0, 200.0]])
    vals = np.array([[0.5, 150.0], [0.25, 100.0]])
    got = quantize(vals, bounds, num_levels=4)
    assert got.tolist() == [[2, 2], [1, 0]]


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------


def fitted(rng, mode="two_stage", num_levels=6):
    table = random_table(rng)
    im = fit_item_memory(table, DIM, num_levels=num_levels, rng_seed=3, mode=mode)
    return table, im


def test_encode_window_matches_hv_algebra():
    rng = np.random.default_rng(3)
    table, im = fitted(rng)
    fw = table[0]
    got = encode_window(fw, im)

    level_idx = quantize(np.asarray(fw.values), im.norm_bounds, im.num_levels)
    per_channel = []
    for c in range(len(im.channels)):
        bound = [
            bind(im.level_table[int(level_idx[c, f])], im.feature_vectors[f])
            for f in range(len(im.columns))
        ]
        per_channel.append(bind(bundle(bound, im.tie_break), im.channel_vectors[c]))
    want = bundle(per_channel, im.tie_break)
    assert got == want


def test_encode_table_rows_equal_encode_window():
    rng = np.random.default_rng(4)
    table, im = fitted(rng)
    packed = encode_table(table, im)
    assert packed.shape == (len(table), DIM // 8)
    for k in (0, 7, 29):
        assert np.array_equal(packed[k], encode_window(table[k], im).data)


def test_single_stage_mode_differs_but_is_deterministic():
    rng = np.random.default_rng(5)
    table, im2 = fitted(rng)
    im1 = ItemMemory(
        im2.dim, im2.num_levels, im2.columns, im2.channels, im2.feature_vectors,
        im2.channel_vectors, im2.level_table, im2.tie_break, im2.norm_bounds,
        mode="single_stage", seed=im2.seed,
    )
    a = encode_table(table, im1)
    b = encode_table(table, im1)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, encode_table(table, im2))


def test_same_levels_encode_identically():
    # raw values that quantize to the same level grid are indistinguishable
    rng = np.random.default_rng(6)
    _, im = fitted(rng)
    lo, hi = im.norm_bounds[:, 0], im.norm_bounds[:, 1]
    width = (hi - lo) / im.num_levels
    base = lo + width * 2.0  # exactly at the level-2 edge
    v1 = np.tile(base + 0.1 * width, (len(im.channels), 1))
    v2 = np.tile(base + 0.9 * width, (len(im.channels), 1))
    fw1 = FeatureWindow(0.0, 4.0, 0, v1)
    fw2 = FeatureWindow(0.0, 4.0, 0, v2)
    assert encode_window(fw1, im) == encode_window(fw2, im)


def test_nearby_levels_encode_similarly():
    # one level step in one column flips far fewer bits than a random pair
    rng = np.random.default_rng(7)
    _, im = fitted(rng)
    lo = im.norm_bounds[:, 0]
    width = (im.norm_bounds[:, 1] - lo) / im.num_levels
    v1 = np.tile(lo + width * 0.5, (len(im.channels), 1))
    v2 = v1.copy()
    v2[0, 0] += width[0]  # bump one feature by exactly one level
    e1 = encode_window(FeatureWindow(0.0, 4.0, 0, v1), im)
    e2 = encode_window(FeatureWindow(0.0, 4.0, 0, v2), im)
    assert 0 < hamming(e1, e2) < DIM // 4


def test_encode_window_shape_validation():
    rng = np.random.default_rng(8)
    _, im = fitted(rng)
    with pytest.raises(ValueError):
        encode_window(FeatureWindow(0.0, 4.0, 0, np.zeros((1, 3))), im)
    other = make_table(rng.normal(size=(3, 2, 3)), columns=("a", "b", "c"))
    with pytest.raises(ValueError):
        encode_table(other, im)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_item_memory_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    table, im = fitted(rng)
    path = tmp_path / "im.bin"
    save_item_memory(im, path)
    got = load_item_memory(path)
    assert got.dim == im.dim and got.num_levels == im.num_levels
    assert got.columns == im.columns and got.channels == im.channels
    assert got.mode == im.mode and got.seed == im.seed
    assert np.allclose(got.norm_bounds, im.norm_bounds)
    assert got.tie_break == im.tie_break
    for a, b in zip(got.feature_vectors, im.feature_vectors):
        assert a == b
    # the loaded memory encodes identically
    assert np.array_equal(encode_table(table, got), encode_table(table, im))


def test_item_memory_deserialize_rejects_corruption(tmp_path):
    rng = np.random.default_rng(10)
    _, im = fitted(rng)
    buf = serialize_item_memory(im)
    path = tmp_path / "im.bin"

    path.write_bytes(buf[:20])
    with pytest.raises(ValueError):
        load_item_memory(path)

    bad = bytearray(buf)
    bad[0] = ord("X")  # magic
    path.write_bytes(bytes(bad))
    with pytest.raises(ValueError):
        load_item_memory(path)

    path.write_bytes(buf + b"\x00")
    with pytest.raises(ValueError):
        load_item_memory(path)
