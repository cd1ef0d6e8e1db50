"""Exact-arithmetic tests for the tradeoff curves."""

import io
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rateless_dmt import (
    AntennaConfig,
    DmtCurve,
    GainPoint,
    RatelessConfig,
    conventional_dmt,
    default_r_n_grid,
    parallel_dmt_curve,
    parallel_identical_dmt,
    parallel_iid_dmt,
    rateless_dmt_curve,
    rateless_dmt_point,
    rateless_segment,
    tradeoff_f,
    write_curves_csv,
)

antenna_configs = st.builds(
    AntennaConfig, M=st.integers(min_value=1, max_value=6), N=st.integers(min_value=1, max_value=6)
)

rateless_configs = st.builds(
    RatelessConfig, antennas=antenna_configs, L=st.integers(min_value=1, max_value=8)
)

gains = st.fractions(min_value=0, max_value=8, max_denominator=64)


def test_f_integer_corners_and_interpolation():
    a22 = AntennaConfig(2, 2)
    assert tradeoff_f(a22, 0) == 4
    assert tradeoff_f(a22, F(1, 2)) == F(5, 2)
    a33 = AntennaConfig(3, 3)
    assert tradeoff_f(a33, 3) == 0
    assert tradeoff_f(a33, F(21, 5)) == 0  # clamp beyond min(M, N)
    assert tradeoff_f(a33, F(3, 2)) == F(5, 2)


def test_f_rejects_negative():
    with pytest.raises(ValueError):
        tradeoff_f(AntennaConfig(2, 2), F(-1, 2))


def test_conventional_values_and_domain():
    assert conventional_dmt(AntennaConfig(2, 2), 1) == 1
    assert conventional_dmt(AntennaConfig(3, 3), 0) == 9
    assert conventional_dmt(AntennaConfig(3, 3), F(3, 2)) == F(5, 2)
    with pytest.raises(ValueError):
        conventional_dmt(AntennaConfig(2, 2), F(5, 2))


@given(antenna_configs, gains, gains)
def test_f_nonincreasing(cfg, k1, k2):
    lo, hi = min(k1, k2), max(k1, k2)
    assert tradeoff_f(cfg, lo) >= tradeoff_f(cfg, hi)


@given(antenna_configs, gains, gains)
def test_f_midpoint_convex(cfg, k1, k2):
    mid = (k1 + k2) / 2
    assert tradeoff_f(cfg, mid) <= (tradeoff_f(cfg, k1) + tradeoff_f(cfg, k2)) / 2


@given(antenna_configs)
def test_f_endpoints(cfg):
    assert tradeoff_f(cfg, 0) == cfg.M * cfg.N
    assert tradeoff_f(cfg, cfg.min_antennas) == 0


@given(antenna_configs, gains)
def test_f_exact_under_denominator_scaling(cfg, k):
    scaled = F(3 * k.numerator, 3 * k.denominator)
    assert tradeoff_f(cfg, scaled) == tradeoff_f(cfg, k)


def test_segment_examples():
    assert rateless_segment(RatelessConfig(AntennaConfig(2, 2), L=2), F(1, 2)) == 1
    assert rateless_segment(RatelessConfig(AntennaConfig(3, 3), L=4), F(3, 4)) == 2
    assert rateless_segment(RatelessConfig(AntennaConfig(3, 3), L=4), 3) is None


@given(rateless_configs, gains)
def test_segment_intervals_left_closed(cfg, r_n):
    seg = rateless_segment(cfg, r_n)
    m = cfg.min_antennas
    if r_n >= m:
        assert seg is None
    else:
        assert 1 <= seg <= cfg.L
        assert F(seg - 1, cfg.L) * m <= r_n < F(seg, cfg.L) * m


def test_point_examples():
    pt = rateless_dmt_point(RatelessConfig(AntennaConfig(2, 2), L=2), F(1, 2))
    assert (pt.r, pt.d) == (1, F(5, 2))
    pt = rateless_dmt_point(RatelessConfig(AntennaConfig(3, 3), L=4), 1)
    assert (pt.r, pt.d) == (2, 4)
    pt = rateless_dmt_point(RatelessConfig(AntennaConfig(1, 1), L=2), 0)
    assert (pt.r, pt.d) == (0, 1)


def test_tail_reporting_clamps_to_min_antennas():
    cfg = RatelessConfig(AntennaConfig(3, 3), L=4)
    for r_n in (3, F(7, 2), 100):
        pt = rateless_dmt_point(cfg, r_n)
        assert pt.r == 3 and pt.d == 0 and pt.clamped


@given(rateless_configs, gains)
def test_segment_diversity_identity(cfg, r_n):
    # On every segment l * r / L collapses back to r_n, so d = f(r_n).
    pt = rateless_dmt_point(cfg, r_n)
    if rateless_segment(cfg, r_n) is not None:
        assert pt.d == tradeoff_f(cfg.antennas, r_n)
        assert not pt.clamped


@given(rateless_configs)
def test_segment_gain_interval_endpoints(cfg):
    m = cfg.min_antennas
    for l in range(1, cfg.L + 1):
        left = F(l - 1, cfg.L) * m
        assert rateless_dmt_point(cfg, left).r == F(l - 1, l) * m
        # approach the right edge: (l b_l - epsilon) maps toward min(M, N)
        eps = F(1, 10**9)
        right = F(l, cfg.L) * m - eps
        if right >= left:
            r = rateless_dmt_point(cfg, right).r
            assert F(l - 1, l) * m <= r < m


@given(rateless_configs, gains)
def test_first_segment_multiplies_gain_by_L(cfg, r_n):
    m = cfg.min_antennas
    if r_n < F(m, cfg.L):
        pt = rateless_dmt_point(cfg, r_n)
        assert pt.r == cfg.L * r_n
        assert pt.d == conventional_dmt(cfg.antennas, r_n)
        # and coincides with the shared-matrix parallel baseline at gain r
        assert pt.d == parallel_identical_dmt(cfg, pt.r)


def test_parallel_examples():
    c22 = RatelessConfig(AntennaConfig(2, 2), L=2)
    assert parallel_identical_dmt(c22, 1) == F(5, 2)
    assert parallel_identical_dmt(c22, 0) == 4
    assert parallel_identical_dmt(c22, 4) == 0
    assert parallel_iid_dmt(c22, 1) == 5
    c13 = RatelessConfig(AntennaConfig(1, 1), L=3)
    assert parallel_iid_dmt(c13, 0) == 3
    assert parallel_iid_dmt(c13, 3) == 0
    with pytest.raises(ValueError):
        parallel_identical_dmt(c22, 5)


@given(rateless_configs, gains)
def test_parallel_iid_is_L_times_identical(cfg, r_n):
    r = r_n * cfg.L * cfg.min_antennas / 8  # keep r within [0, L min(M, N)]
    assert parallel_iid_dmt(cfg, r) == cfg.L * parallel_identical_dmt(cfg, r)


def test_curve_small_grid_values():
    cfg = RatelessConfig(AntennaConfig(2, 2), L=2)
    rateless, conventional = rateless_dmt_curve(cfg, [0, F(1, 2), F(999, 1000)])
    assert [(p.r, p.d) for p in rateless.points] == [
        (0, 4),
        (1, F(5, 2)),
        (F(999, 500), tradeoff_f(cfg.antennas, F(999, 1000))),
    ]
    assert [(p.r, p.d) for p in conventional.points][0] == (0, 4)
    assert rateless.segment_index == (1, 1, 1)


def test_curve_four_segments_sweep_toward_min():
    cfg = RatelessConfig(AntennaConfig(3, 3), L=4)
    grid = default_r_n_grid(cfg, points_per_segment=64)
    rateless, _ = rateless_dmt_curve(cfg, grid)
    by_segment = {}
    for seg, pt in zip(rateless.segment_index, rateless.points):
        if seg > 0:
            by_segment.setdefault(seg, []).append(pt.r)
    assert sorted(by_segment) == [1, 2, 3, 4]
    for seg, rs in by_segment.items():
        assert rs == sorted(rs)
        assert all(r < 3 for r in rs)
        assert max(rs) > F(11, 4)  # each segment sweeps up toward min(M, N) = 3


def test_degenerate_single_block_curve_matches_conventional():
    cfg = RatelessConfig(AntennaConfig(2, 3), L=1)
    grid = default_r_n_grid(cfg, points_per_segment=32)
    rateless, conventional = rateless_dmt_curve(cfg, grid)
    for a, b in zip(rateless.points, conventional.points):
        assert (a.r, a.d) == (b.r, b.d)


def test_curve_rejects_unsorted_grid():
    cfg = RatelessConfig(AntennaConfig(2, 2), L=2)
    with pytest.raises(ValueError):
        rateless_dmt_curve(cfg, [F(1, 2), F(1, 2)])
    with pytest.raises(ValueError):
        rateless_dmt_curve(cfg, [F(1, 2), F(1, 4)])


def test_default_grid_contains_segment_boundaries():
    cfg = RatelessConfig(AntennaConfig(3, 3), L=4)
    grid = default_r_n_grid(cfg)
    for b in (0, F(3, 4), F(3, 2), F(9, 4), 3):
        assert b in grid
    assert len(grid) == 4 * 512 + 1
    assert all(a < b for a, b in zip(grid, grid[1:]))


def test_gain_point_rejects_negative():
    with pytest.raises(ValueError):
        GainPoint(r=F(-1), d=F(0))


def test_curve_type_rejects_bad_shapes():
    with pytest.raises(ValueError):
        DmtCurve(scheme="nope", r_n_grid=(F(0),), points=(GainPoint(F(0), F(1)),), segment_index=(0,))
    with pytest.raises(ValueError):
        DmtCurve(
            scheme="rateless",
            r_n_grid=(F(0), F(1)),
            points=(GainPoint(F(0), F(1)),),
            segment_index=(0,),
        )


def test_csv_export_format_and_exact_columns():
    cfg = RatelessConfig(AntennaConfig(2, 2), L=2)
    grid = [0, F(1, 3), F(1, 2)]
    rateless, conventional = rateless_dmt_curve(cfg, grid)
    par = parallel_dmt_curve(cfg, grid, iid=True)
    buf = io.StringIO()
    write_curves_csv(buf, [rateless, conventional, par], exact=True, metadata={"M": 2})
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# M=2"
    assert lines[1] == "r_n,l,r,d,scheme,r_n_exact,r_exact,d_exact"
    row = lines[3].split(",")  # r_n = 1/3 of the rateless curve
    assert row[0] == "0.333333333333"
    assert row[1] == "1"
    assert row[4] == "rateless"
    assert F(row[5]) == F(1, 3) and F(row[6]) == F(2, 3)
    # exact columns reconstruct the rational values bit-for-bit
    assert F(row[7]) == tradeoff_f(cfg.antennas, F(1, 3))
    assert any(line.endswith("parallel_iid,1/2,1,5") for line in lines)
