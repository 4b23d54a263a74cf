import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wmidetect.coarse import (FilterParams, WmStats, analyze_slice, annulus_contour, coarse_detect,
                              filter_candidates, hyperintensity_mask, objects_mask, two_means_small,
                              wm_sample_mask, wm_stats)
from wmidetect.config import RunConfig
from wmidetect.image_core import connected_components_8, distance_transform_l1_raw, normalize_to_unit
from wmidetect.phantom import PhantomConfig, generate

from oracles import bfs_l1_distance, exhaustive_two_means


def disk_brain(size=41, radius=16):
    yy, xx = np.mgrid[:size, :size]
    c = size // 2
    brain = np.hypot(yy - c, xx - c) <= radius
    return brain, c


def test_annulus_around_center_pixel():
    brain, c = disk_brain()
    dp_raw = distance_transform_l1_raw(~brain)
    vent = np.zeros_like(brain)
    vent[c, c] = True
    contour = annulus_contour(dp_raw, vent)
    assert contour.any()
    dv = bfs_l1_distance(vent)
    dp = bfs_l1_distance(~brain)
    assert np.all(np.abs(dp[contour] - dv[contour]) <= 1)
    # along the axes the ring sits halfway between centre and edge
    rows = np.flatnonzero(contour[:, c])
    assert all(abs(abs(r - c) - 16 / 2) <= 1.5 for r in rows)


def test_annulus_fallback_without_ventricles():
    brain, c = disk_brain()
    dp_raw = distance_transform_l1_raw(~brain)
    contour = annulus_contour(dp_raw, np.zeros_like(brain))
    half = dp_raw.max() / 2
    assert np.array_equal(contour, brain & (np.abs(dp_raw - half) <= 1))
    assert contour.any()


def test_wm_sample_is_inner_disk_minus_ventricle():
    brain, c = disk_brain()
    dp_raw = distance_transform_l1_raw(~brain)
    vent = np.zeros_like(brain)
    vent[c - 1:c + 2, c - 1:c + 2] = True
    contour = annulus_contour(dp_raw, vent)
    wm = wm_sample_mask(contour, vent, brain)
    assert not (wm & vent).any()
    assert wm[c, c + 4] and not wm[c, c + 14]
    with pytest.raises(ValueError):
        wm_sample_mask(np.zeros_like(brain), vent, brain)


def test_wm_stats_examples():
    img = np.array([[10, 10, 10]])
    s = wm_stats(img, np.ones_like(img, bool), min_samples=1)
    assert (s.median, s.mad) == (10.0, 0.0)
    img = np.arange(1, 10)[None, :]
    s = wm_stats(img, np.ones_like(img, bool), min_samples=1)
    assert (s.median, s.mad) == (5.0, 2.0)
    with pytest.raises(ValueError):
        wm_stats(img, np.ones_like(img, bool))


def test_wm_stats_matches_sorting():
    rng = np.random.default_rng(0)
    for _ in range(20):
        vals = rng.integers(0, 256, int(rng.integers(16, 80)))
        srt = sorted(vals.tolist())
        n = len(srt)
        med = srt[n // 2] if n % 2 else (srt[n // 2 - 1] + srt[n // 2]) / 2
        dev = sorted(abs(v - med) for v in srt)
        mad = dev[n // 2] if n % 2 else (dev[n // 2 - 1] + dev[n // 2]) / 2
        s = wm_stats(vals[None, :], np.ones((1, n), bool))
        assert (s.median, s.mad, s.sample_count) == (med, mad, n)


def test_hyperintensity_examples():
    img = np.array([[120, 100, 99]])
    fg = np.ones_like(img, bool)
    m = hyperintensity_mask(img, WmStats(100, 10, 3), fg)
    assert m.tolist() == [[True, False, False]]
    assert 0.6745 * 20 / 10 == pytest.approx(1.349)
    # a stricter cutoff drops the 1.349 score
    assert not hyperintensity_mask(img, WmStats(100, 10, 3), fg, 3.5).any()
    assert hyperintensity_mask(img, WmStats(100, 0, 3), fg).tolist() == [[True, False, False]]
    assert not hyperintensity_mask(img, WmStats(100, 10, 3), ~fg).any()


@given(st.integers(0, 255), st.floats(0.5, 40), st.integers(0, 2**31))
@settings(max_examples=50)
def test_zero_cutoff_is_sign_test(median, mad, seed):
    img = np.random.default_rng(seed).integers(0, 256, (8, 8))
    fg = np.random.default_rng(seed + 1).random((8, 8)) < 0.7
    m = hyperintensity_mask(img, WmStats(float(median), mad, 64), fg, 0.0)
    assert np.array_equal(m, fg & (img > median))


def test_two_means_example_and_oracle():
    sizes = np.array([2, 3, 3, 90, 95])
    assert two_means_small(sizes).tolist() == [True, True, True, False, False]
    assert set(np.flatnonzero(two_means_small(sizes))) == exhaustive_two_means(sizes)
    rng = np.random.default_rng(1)
    for _ in range(30):
        small = rng.integers(1, 15, int(rng.integers(2, 10)))
        big = rng.integers(60, 200, int(rng.integers(1, 5)))
        vals = rng.permutation(np.concatenate([small, big]))
        assert set(np.flatnonzero(two_means_small(vals))) == exhaustive_two_means(vals)
    assert two_means_small(np.array([4, 4, 4])).all()
    assert two_means_small(np.array([])).size == 0


def blobs_image(sizes, shape=(60, 60)):
    """Row-separated horizontal bars of the given pixel counts."""
    m = np.zeros(shape, bool)
    r, c = 1, 1
    for s in sizes:
        if c + s >= shape[1]:
            r, c = r + 2, 1
        m[r, c:c + s] = True
        c += s + 1
    return m


def test_size_constraint_drops_top_five_percent():
    sizes = [2] * 19 + [55]
    hyper = blobs_image(sizes)
    dp = np.ones(hyper.shape)
    kept = filter_candidates(hyper, dp, FilterParams(distance_constraint=False))
    assert sorted(c.size for c in kept) == [2] * 19


def test_size_constraint_keeps_small_cluster():
    hyper = blobs_image([2, 3, 3, 30, 32, 50])
    dp = np.ones(hyper.shape)
    kept = filter_candidates(hyper, dp, FilterParams(distance_constraint=False))
    # the 50 goes to the top 5% discard, then K-means splits {2,3,3} vs {30,32}
    assert sorted(c.size for c in kept) == [2, 3, 3]


def test_distance_constraint_drops_boundary_objects():
    hyper = np.zeros((20, 20), bool)
    hyper[0, 2:5] = True       # on the edge
    hyper[10, 10:12] = True    # deep inside
    edge = np.zeros((20, 20), bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    dp = normalize_to_unit(distance_transform_l1_raw(edge))
    kept = filter_candidates(hyper, dp, FilterParams(size_constraint=False))
    assert [c.size for c in kept] == [2]
    assert kept[0].mean_dp >= 0.15


def test_filters_are_subtractive():
    rng = np.random.default_rng(2)
    for _ in range(10):
        hyper = rng.random((40, 40)) < 0.15
        dp = rng.random((40, 40))
        none = filter_candidates(hyper, dp, FilterParams(False, False))
        assert len(none) == connected_components_8(hyper).count
        assert np.array_equal(objects_mask(none, hyper.shape), hyper)
        for p in (FilterParams(True, False), FilterParams(False, True), FilterParams(), FilterParams(min_size=3)):
            got = filter_candidates(hyper, dp, p)
            assert len(got) <= len(none)
            assert np.all(objects_mask(got, hyper.shape) <= hyper)


def test_phantom_annulus_and_wm_sample():
    stack = generate(PhantomConfig(rng_seed=3))
    cfg = RunConfig()
    for z in range(2, 10):
        an = analyze_slice(stack.slices[z], cfg, z)
        dv = bfs_l1_distance(an.selection.mask) if an.selection.mask.any() else None
        if dv is not None:
            dp = bfs_l1_distance(an.pre.background)
            assert np.all(np.abs(dp[an.contour] - dv[an.contour]) <= 1)
        wm_truth = stack.wm_truth(z)
        assert (an.wm_mask & wm_truth).sum() >= 0.95 * an.wm_mask.sum()


def test_distance_only_keeps_same_true_positives():
    stack = generate(PhantomConfig(rng_seed=5))
    cfg = RunConfig()
    for z in range(len(stack)):
        an = analyze_slice(stack.slices[z], cfg, z)
        both = objects_mask(filter_candidates(an.hyper, an.ctx.dp, FilterParams()), an.hyper.shape)
        dist = objects_mask(filter_candidates(an.hyper, an.ctx.dp, FilterParams(size_constraint=False)),
                            an.hyper.shape)
        lesion = stack.lesion[z]
        assert np.array_equal(both & lesion, dist & lesion)


def test_coarse_detect_statuses():
    const = np.full((32, 32), 50, np.uint8)
    assert coarse_detect(const).status == "skipped"
    stack = generate(PhantomConfig(rng_seed=0))
    res = coarse_detect(stack.slices[5], RunConfig(), 5)
    assert res.status == "ok" and res.candidates
    assert res.candidate_mask().shape == stack.slices[5].shape
