"""Exact diversity-multiplexing tradeoff curves in rational arithmetic.

Everything here is evaluated with ``fractions.Fraction`` so curve values
are bit-exact: no floating round-off enters until CSV rendering. Floats
are accepted as inputs but are converted verbatim (0.5 is fine, 0.1 is
the binary float); pass Fraction or str for exact decimal grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Mapping, Optional, Sequence

from .configs import AntennaConfig, RatelessConfig

SCHEMES = ("rateless", "conventional", "parallel_identical", "parallel_iid")

DEFAULT_POINTS_PER_SEGMENT = 512


@dataclass(frozen=True)
class GainPoint:
    """One (multiplexing gain r, diversity gain d) point.

    ``clamped`` marks zero-diversity tail reporting, where r is pinned to
    min(M, N) no matter how large the per-level gain was.
    """

    r: Fraction
    d: Fraction
    clamped: bool = False

    def __post_init__(self):
        if self.r < 0 or self.d < 0:
            raise ValueError(f"gains must be >= 0, got r={self.r}, d={self.d}")


@dataclass(frozen=True)
class DmtCurve:
    """A tradeoff curve sampled over a grid of per-level gains r_n.

    ``segment_index[i]`` is the block count l governing point i; 0 means
    the point is not governed by a rate-level segment (non-rateless
    schemes, and the zero-diversity tail).
    """

    scheme: str
    r_n_grid: tuple[Fraction, ...]
    points: tuple[GainPoint, ...]
    segment_index: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if len(self.points) != len(self.r_n_grid):
            raise ValueError("points and r_n_grid must have equal length")
        if len(self.segment_index) != len(self.points):
            raise ValueError("segment_index and points must have equal length")
        for a, b in zip(self.r_n_grid, self.r_n_grid[1:]):
            if not a < b:
                raise ValueError("r_n grid must be strictly increasing")


def tradeoff_f(cfg: AntennaConfig, k) -> Fraction:
    """Piecewise-linear diversity function through (k, (M-k)(N-k)).

    Exact for any rational k >= 0; clamps to 0 beyond min(M, N).
    """
    k = Fraction(k)
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    m = cfg.min_antennas
    if k >= m:
        return Fraction(0)
    i = int(k)  # floor, k is nonnegative
    corner = Fraction((cfg.M - i) * (cfg.N - i))
    slope = 2 * i + 1 - cfg.M - cfg.N
    return corner + (k - i) * slope


def conventional_dmt(cfg: AntennaConfig, r) -> Fraction:
    """Diversity gain of a fixed-rate scheme at multiplexing gain r."""
    r = Fraction(r)
    if not 0 <= r <= cfg.min_antennas:
        raise ValueError(f"r must lie in [0, {cfg.min_antennas}], got {r}")
    return tradeoff_f(cfg, r)


def rateless_segment(cfg: RatelessConfig, r_n) -> Optional[int]:
    """Rate-level segment l in 1..L containing r_n, or None past min(M, N).

    Segments are left-closed, right-open: l covers
    [(l-1) * min(M,N) / L, l * min(M,N) / L).
    """
    r_n = Fraction(r_n)
    if r_n < 0:
        raise ValueError(f"r_n must be >= 0, got {r_n}")
    m = cfg.min_antennas
    if r_n >= m:
        return None
    return int(r_n * cfg.L / m) + 1


def rateless_dmt_point(cfg: RatelessConfig, r_n) -> GainPoint:
    """Effective (r, d) of the rateless scheme at per-level gain r_n.

    On segment l the effective gain is r = r_n * L / l with diversity
    d = f(l * r / L); past min(M, N) diversity is zero and the reported
    gain is clamped to min(M, N).
    """
    r_n = Fraction(r_n)
    seg = rateless_segment(cfg, r_n)
    if seg is None:
        return GainPoint(r=Fraction(cfg.min_antennas), d=Fraction(0), clamped=True)
    r = r_n * cfg.L / seg
    return GainPoint(r=r, d=tradeoff_f(cfg.antennas, seg * r / cfg.L))


def parallel_identical_dmt(cfg: RatelessConfig, r) -> Fraction:
    """Diversity of L parallel channels sharing one fading matrix: f(r / L)."""
    r = Fraction(r)
    if not 0 <= r <= cfg.L * cfg.min_antennas:
        raise ValueError(f"r must lie in [0, {cfg.L * cfg.min_antennas}], got {r}")
    return tradeoff_f(cfg.antennas, r / cfg.L)


def parallel_iid_dmt(cfg: RatelessConfig, r) -> Fraction:
    """Diversity of L parallel channels with independent fading: L * f(r / L)."""
    r = Fraction(r)
    if not 0 <= r <= cfg.L * cfg.min_antennas:
        raise ValueError(f"r must lie in [0, {cfg.L * cfg.min_antennas}], got {r}")
    return cfg.L * tradeoff_f(cfg.antennas, r / cfg.L)


def default_r_n_grid(
    cfg: RatelessConfig, points_per_segment: int = DEFAULT_POINTS_PER_SEGMENT
) -> tuple[Fraction, ...]:
    """Evenly spaced r_n values, points_per_segment per rate-level segment.

    Each segment [a, b) contributes a + j * (b - a) / points_per_segment
    for j = 0..points_per_segment-1; segment boundaries belong to the
    right segment, so the sawtooth discontinuities show up as adjacent
    grid points on either side of every break. The zero-diversity point
    r_n = min(M, N) is appended.
    """
    if points_per_segment < 1:
        raise ValueError("points_per_segment must be >= 1")
    m = cfg.min_antennas
    step = Fraction(m, cfg.L * points_per_segment)
    grid = [j * step for j in range(cfg.L * points_per_segment)]
    grid.append(Fraction(m))
    return tuple(grid)


def _validate_grid(grid: Sequence) -> tuple[Fraction, ...]:
    vals = tuple(Fraction(g) for g in grid)
    if any(v < 0 for v in vals):
        raise ValueError("grid values must be >= 0")
    for a, b in zip(vals, vals[1:]):
        if not a < b:
            raise ValueError("grid must be sorted strictly increasing")
    return vals


def rateless_dmt_curve(cfg: RatelessConfig, r_n_grid: Sequence) -> tuple[DmtCurve, DmtCurve]:
    """Rateless and conventional tradeoff curves over a shared r_n grid.

    Returns (rateless, conventional). The conventional curve evaluates
    f(r_n) directly (zero past min(M, N)), so both curves cover the whole
    grid for side-by-side comparison.
    """
    grid = _validate_grid(r_n_grid)
    rateless_points = []
    segments = []
    conventional_points = []
    for r_n in grid:
        pt = rateless_dmt_point(cfg, r_n)
        rateless_points.append(pt)
        seg = rateless_segment(cfg, r_n)
        segments.append(0 if seg is None else seg)
        conventional_points.append(GainPoint(r=r_n, d=tradeoff_f(cfg.antennas, r_n)))
    rateless = DmtCurve(
        scheme="rateless",
        r_n_grid=grid,
        points=tuple(rateless_points),
        segment_index=tuple(segments),
    )
    conventional = DmtCurve(
        scheme="conventional",
        r_n_grid=grid,
        points=tuple(conventional_points),
        segment_index=(0,) * len(grid),
    )
    return rateless, conventional


def parallel_dmt_curve(cfg: RatelessConfig, r_n_grid: Sequence, iid: bool) -> DmtCurve:
    """Parallel-channel baseline over the r_n grid, plotted at r = L * r_n."""
    grid = _validate_grid(r_n_grid)
    fn = parallel_iid_dmt if iid else parallel_identical_dmt
    points = tuple(GainPoint(r=cfg.L * r_n, d=fn(cfg, cfg.L * r_n)) for r_n in grid)
    return DmtCurve(
        scheme="parallel_iid" if iid else "parallel_identical",
        r_n_grid=grid,
        points=points,
        segment_index=(0,) * len(grid),
    )


def format_sig12(x: float) -> str:
    """Render a float with 12 significant digits."""
    return format(float(x), ".12g")


def write_curves_csv(
    out: IO[str],
    curves: Iterable[DmtCurve],
    exact: bool = False,
    metadata: Mapping[str, object] | None = None,
) -> None:
    """Write curves as CSV rows `r_n,l,r,d,scheme`.

    With ``exact`` three p/q columns are appended so the rational values
    survive the decimal rendering. Metadata keys are embedded as leading
    `#` comment lines, sorted for byte-stable output.
    """
    if metadata:
        for key in sorted(metadata):
            out.write(f"# {key}={metadata[key]}\n")
    header = "r_n,l,r,d,scheme"
    if exact:
        header += ",r_n_exact,r_exact,d_exact"
    out.write(header + "\n")
    for curve in curves:
        for r_n, l, pt in zip(curve.r_n_grid, curve.segment_index, curve.points):
            row = (
                f"{format_sig12(float(r_n))},{l},{format_sig12(float(pt.r))},"
                f"{format_sig12(float(pt.d))},{curve.scheme}"
            )
            if exact:
                row += f",{r_n},{pt.r},{pt.d}"
            out.write(row + "\n")
