import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdsv.errors import DomainError
from tdsv.metrics import DcfParams, compute_eer, compute_min_dcf, det_points, fuse_scores

from .oracles import eer_direct, min_dcf_direct

score_lists = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=40)


def test_perfect_separation():
    eer, threshold = compute_eer([2, 3, 4], [-4, -3, -2])
    assert eer == 0.0
    assert -2 <= threshold <= 2
    dcf, _ = compute_min_dcf([2, 3, 4], [-4, -3, -2])
    assert dcf == 0.0


def test_identical_multisets_give_fifty_percent(rng):
    scores = list(rng.normal(size=20))
    assert compute_eer(scores, scores).eer == pytest.approx(50.0, abs=1e-9)


def test_eer_matches_exhaustive_sweep_oracle(rng):
    for _ in range(100):
        tar = rng.normal(0.5, 1.0, size=50)
        non = rng.normal(-0.5, 1.0, size=50)
        got = compute_eer(tar, non).eer
        assert got == pytest.approx(eer_direct(tar, non), abs=1e-9)


def test_eer_with_ties_matches_oracle(rng):
    for _ in range(50):
        tar = rng.integers(-3, 4, size=30).astype(float)
        non = rng.integers(-4, 3, size=30).astype(float)
        assert compute_eer(tar, non).eer == pytest.approx(eer_direct(tar, non), abs=1e-9)


def test_eer_threshold_separates_at_reported_rate(rng):
    tar = rng.normal(1.0, 1.0, size=200)
    non = rng.normal(-1.0, 1.0, size=200)
    eer, threshold = compute_eer(tar, non)
    frr = 100.0 * np.mean(tar < threshold)
    far = 100.0 * np.mean(non >= threshold)
    assert abs(frr - eer) <= 100.0 / len(tar) + 1e-9
    assert abs(far - eer) <= 100.0 / len(non) + 1e-9


def test_monotone_transform_leaves_eer_and_det_unchanged(rng):
    transforms = [np.exp, lambda s: 3.0 * s + 7.0, lambda s: s ** 3 + s]
    for i in range(50):
        tar = rng.normal(0.3, 1.0, size=30)
        non = rng.normal(-0.3, 1.0, size=30)
        base = compute_eer(tar, non).eer
        f = transforms[i % len(transforms)]
        assert compute_eer(f(tar), f(non)).eer == pytest.approx(base, abs=1e-9)
        # operating points depend only on score ranks
        assert np.array_equal(det_points(f(tar), f(non)), det_points(tar, non))


def test_eer_symmetry_under_swap_and_negation(rng):
    tar = rng.normal(0.5, 1.0, size=40)
    non = rng.normal(-0.5, 1.0, size=40)
    assert compute_eer(-non, -tar).eer == pytest.approx(compute_eer(tar, non).eer,
                                                        abs=1e-9)


def test_empty_inputs_rejected():
    with pytest.raises(DomainError):
        compute_eer([], [1.0])
    with pytest.raises(DomainError):
        compute_min_dcf([1.0], [])


def test_min_dcf_matches_exhaustive_oracle_exactly(rng):
    p = DcfParams()
    for _ in range(100):
        tar = rng.normal(0.5, 1.0, size=50)
        non = rng.normal(-0.5, 1.0, size=50)
        got, _ = compute_min_dcf(tar, non, p)
        assert got == min_dcf_direct(tar, non, p.c_miss, p.c_fa, p.p_target)


@settings(max_examples=60, deadline=None)
@given(tar=score_lists, non=score_lists)
def test_min_dcf_bounded_by_endpoint_costs(tar, non):
    p = DcfParams()
    dcf, _ = compute_min_dcf(tar, non, p)
    assert 0.0 <= dcf <= min(p.c_miss * p.p_target, p.c_fa * (1 - p.p_target)) + 1e-12


def test_reject_everything_bound_is_point_one(rng):
    # worst case never exceeds c_miss * p_target = 0.1 with SRE'08 weights
    tar = rng.normal(size=30)
    dcf, _ = compute_min_dcf(tar, tar + 10.0, DcfParams())  # hopeless separation
    assert dcf <= 0.1 + 1e-12


def test_dcf_params_validation():
    with pytest.raises(DomainError):
        DcfParams(c_miss=0.0)
    with pytest.raises(DomainError):
        DcfParams(p_target=1.0)


def test_fuse_scores_statistics():
    scores = [1.0, 2.0, 3.0]
    assert fuse_scores(scores, "average") == 2.0
    assert fuse_scores(scores, "minimum") == 1.0
    assert fuse_scores(scores, "maximum") == 3.0
    assert fuse_scores(scores, "median") == 2.0


def test_fuse_single_system_is_identity():
    for method in ("average", "minimum", "maximum", "median"):
        assert fuse_scores([4.2], method) == 4.2


def test_fuse_even_median_averages_central_pair():
    assert fuse_scores([1.0, 2.0, 3.0, 10.0], "median") == 2.5


def test_fuse_rejects_empty_and_unknown():
    with pytest.raises(DomainError):
        fuse_scores([], "average")
    with pytest.raises(DomainError):
        fuse_scores([1.0], "geometric")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=10))
def test_fusion_ordering(scores):
    eps = 1e-12 * max(1.0, max(abs(s) for s in scores))  # mean rounding slack
    assert fuse_scores(scores, "maximum") >= fuse_scores(scores, "average") - eps
    assert fuse_scores(scores, "average") >= fuse_scores(scores, "minimum") - eps


class TestDetPoints:
    def test_perfect_separation_touches_both_axes(self):
        points = det_points([2, 3, 4], [-4, -3, -2])
        assert (points == [1.0, 0.0]).all(axis=1).any()  # accept everything
        assert (points == [0.0, 0.0]).all(axis=1).any()  # perfect operating point
        assert (points == [0.0, 1.0]).all(axis=1).any()  # reject everything

    def test_single_scores_give_three_points(self):
        points = det_points([1.0], [0.0])
        assert points.shape == (3, 2)
        assert np.array_equal(points, [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])

    def test_monotone_staircase(self, rng):
        points = det_points(rng.normal(0.5, 1, 40), rng.normal(-0.5, 1, 40))
        assert np.all(np.diff(points[:, 0]) <= 0)  # P_fa non-increasing
        assert np.all(np.diff(points[:, 1]) >= 0)  # P_miss non-decreasing

    def test_curve_passes_near_eer_point(self, rng):
        tar = rng.normal(0.5, 1.0, size=60)
        non = rng.normal(-0.5, 1.0, size=60)
        eer = compute_eer(tar, non).eer / 100.0
        points = det_points(tar, non)
        dist = np.max(np.abs(points - eer), axis=1)
        assert dist.min() <= 1.0 / 60 + 1.0 / 60
