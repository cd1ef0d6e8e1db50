"""Monte Carlo engine for the rateless protocol over Rayleigh block fading.

One fading matrix is drawn per codeword and held for all L blocks. The
receiver accumulates mutual information block by block and decodes at the
first block l where l * I_b >= L * R; if no block qualifies the codeword
is in outage. Decoding itself is not simulated here: information outage
is the error proxy, which is the operative event once blocks are long
enough. Everything is driven by the counter-based substreams in
:mod:`rateless_dmt.rng`, so results are bit-identical for any chunking or
thread count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import IO, Mapping, Optional, Sequence

import numpy as np

from . import rng
from .configs import AntennaConfig, RatelessConfig
from .tradeoff import format_sig12

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class SnrPoint:
    """Average SNR per receive antenna, carried in linear and dB form."""

    eta_linear: float
    eta_db: float

    def __post_init__(self):
        if not self.eta_linear > 0:
            raise ValueError(f"eta_linear must be > 0, got {self.eta_linear}")
        if abs(10.0 ** (self.eta_db / 10.0) - self.eta_linear) > 1e-12 * self.eta_linear:
            raise ValueError(
                f"eta_db={self.eta_db} inconsistent with eta_linear={self.eta_linear}"
            )

    @classmethod
    def from_db(cls, eta_db: float) -> "SnrPoint":
        return cls(eta_linear=10.0 ** (eta_db / 10.0), eta_db=eta_db)

    @classmethod
    def from_linear(cls, eta_linear: float) -> "SnrPoint":
        return cls(eta_linear=eta_linear, eta_db=10.0 * math.log10(eta_linear))

    @property
    def log2_eta(self) -> float:
        return math.log2(self.eta_linear)


@dataclass(frozen=True)
class ChannelRealization:
    """One sampled N x M fading matrix with CN(0, 1) entries."""

    H: np.ndarray

    def __post_init__(self):
        if self.H.ndim != 2:
            raise ValueError(f"H must be 2-D, got shape {self.H.shape}")
        if not np.iscomplexobj(self.H):
            raise ValueError("H must be complex")

    @property
    def N(self) -> int:
        return self.H.shape[0]

    @property
    def M(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True)
class StopOutcome:
    """First block index at which decoding succeeds, or None for outage."""

    stop_block: Optional[int]

    @property
    def is_outage(self) -> bool:
        return self.stop_block is None


@dataclass(frozen=True)
class OutageProfile:
    """Estimated p(l) = Pr(accumulated information < message size after block l).

    Index 0..L; p_hat[0] is identically 1. The standard errors are the
    binomial sqrt(p (1 - p) / n).
    """

    p_hat: np.ndarray
    stderr: np.ndarray
    trials: int

    def __post_init__(self):
        if self.p_hat.shape != self.stderr.shape or self.p_hat.ndim != 1:
            raise ValueError("p_hat and stderr must be 1-D and equal length")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.p_hat[0] != 1.0:
            raise ValueError("p_hat[0] must be exactly 1")
        if np.any(np.diff(self.p_hat) > 0):
            raise ValueError("p_hat must be nonincreasing in l")

    @property
    def L(self) -> int:
        return len(self.p_hat) - 1


@dataclass(frozen=True)
class EffectiveRate:
    """Average per-message rate r_bar and its SNR-normalized form r_hat."""

    r_bar: float
    r_hat: Optional[float] = None


@dataclass(frozen=True)
class SlopeEstimate:
    """Least-squares diversity slope with a secant cross-check.

    slope: OLS slope of -log2(p) against log2(eta).
    secant: the same ratio using only the two highest-SNR points.
    residual_rms: root-mean-square OLS residual.
    """

    slope: float
    secant: float
    residual_rms: float
    n_used: int


@dataclass(frozen=True)
class SnrRecord:
    """Everything measured at one SNR point of a rateless experiment."""

    eta: SnrPoint
    R: float
    profile: OutageProfile
    rate: EffectiveRate
    stop_hist: np.ndarray = field(repr=False)  # counts: stop at 1..L, then outage


def sample_channel(cfg: AntennaConfig, rng_stream: np.random.Generator) -> ChannelRealization:
    """Draw one N x M matrix of i.i.d. CN(0, 1) entries."""
    shape = (cfg.N, cfg.M)
    h = (rng_stream.standard_normal(shape) + 1j * rng_stream.standard_normal(shape)) * math.sqrt(0.5)
    return ChannelRealization(H=h)


def block_mutual_info(h: ChannelRealization, eta: SnrPoint, M: Optional[int] = None) -> float:
    """Per-channel-use mutual information log2 det(I + (eta / M) H H*).

    Gaussian inputs with equal power per transmit antenna. M defaults to
    the matrix width; passing a mismatching M is an error.
    """
    if M is None:
        M = h.M
    elif M != h.M:
        raise ValueError(f"M={M} does not match H shape {h.H.shape}")
    if not np.all(np.isfinite(h.H)):
        raise ValueError("channel matrix has non-finite entries")
    if h.M == 1 and h.N == 1:
        return math.log1p(eta.eta_linear * abs(h.H[0, 0]) ** 2) / _LN2
    gram = np.eye(h.N, dtype=complex) + (eta.eta_linear / M) * (h.H @ h.H.conj().T)
    sign, logdet = np.linalg.slogdet(gram)
    return float(logdet) / _LN2


def rateless_stop(I_b: float, R: float, L: int) -> StopOutcome:
    """First block l in 1..L with l * I_b >= L * R; outage if none.

    Ties count as decodable. The block length T cancels from both sides
    and deliberately does not appear.
    """
    if R < 0:
        raise ValueError(f"R must be >= 0, got {R}")
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    for l in range(1, L + 1):
        if l * I_b >= L * R:
            return StopOutcome(stop_block=l)
    return StopOutcome(stop_block=None)


def siso_outage_closed_form(eta: SnrPoint, rate_threshold: float) -> float:
    """Exact Pr(log2(1 + eta |h|^2) < threshold) for SISO Rayleigh fading.

    |h|^2 is unit-mean exponential, so this is 1 - exp(-(2^t - 1) / eta).
    """
    if rate_threshold < 0:
        raise ValueError(f"rate_threshold must be >= 0, got {rate_threshold}")
    return -math.expm1(-(2.0**rate_threshold - 1.0) / eta.eta_linear)


def siso_outage_neg_log2(eta: SnrPoint, rate_threshold: float) -> float:
    """-log2 of the SISO outage probability, stable where p rounds to 1.

    For large (2^t - 1) / eta the probability is 1 minus a sub-epsilon
    sliver, unrepresentable in binary64; the exponent is still exact via
    exp/log1p.
    """
    if rate_threshold < 0:
        raise ValueError(f"rate_threshold must be >= 0, got {rate_threshold}")
    x = (2.0**rate_threshold - 1.0) / eta.eta_linear
    if x == 0.0:
        return math.inf  # p = 0, infinite exponent
    t = math.exp(-x)
    if t >= 1.0:
        return math.inf
    return -math.log1p(-t) / _LN2


def siso_outage_profile(eta: SnrPoint, R: float, L: int) -> np.ndarray:
    """Closed-form p(0..L) for the SISO stopping rule at rate R."""
    p = np.ones(L + 1)
    for l in range(1, L + 1):
        p[l] = siso_outage_closed_form(eta, L * R / l)
    return p


def _outage_counts(
    cfg: RatelessConfig,
    eta: SnrPoint,
    R: float,
    trials: int,
    seed: int,
    stream: int,
    workers: int,
    chunk: int,
) -> np.ndarray:
    """Counts of trials still short of the message size after each block.

    Entry l - 1 counts trials with l * I_b < L * R, all evaluated on the
    same per-trial fading draw.
    """
    M, N, L = cfg.M, cfg.N, cfg.L
    key = rng.stream_key(seed, stream)
    uniforms = 2 * M * N
    eta_lin = eta.eta_linear

    def one_chunk(t0: int, n: int) -> np.ndarray:
        u = rng.trial_uniforms(key, uniforms, t0, n)
        hflat = rng.complex_normals(u)
        if M == 1 and N == 1:
            ib = np.log1p(eta_lin * np.abs(hflat[:, 0]) ** 2) / _LN2
        else:
            h = hflat.reshape(n, N, M)
            gram = np.eye(N, dtype=complex) + (eta_lin / M) * (h @ h.conj().transpose(0, 2, 1))
            ib = np.linalg.slogdet(gram)[1] / _LN2
        counts = np.empty(L, dtype=np.int64)
        for l in range(1, L + 1):
            counts[l - 1] = np.count_nonzero(l * ib < L * R)
        return counts

    parts = rng.map_chunks(one_chunk, trials, chunk=chunk, workers=workers)
    return rng.reduce_counts(parts)


def _profile_from_counts(counts: np.ndarray, trials: int) -> OutageProfile:
    L = len(counts)
    p_hat = np.empty(L + 1)
    stderr = np.zeros(L + 1)
    p_hat[0] = 1.0
    for l in range(1, L + 1):
        p = counts[l - 1] / trials
        p_hat[l] = p
        stderr[l] = math.sqrt(p * (1.0 - p) / trials)
    return OutageProfile(p_hat=p_hat, stderr=stderr, trials=trials)


def estimate_outage_profile(
    cfg: RatelessConfig,
    eta: SnrPoint,
    R: float,
    trials: int,
    seed: int,
    *,
    stream: int = 0,
    workers: int = 1,
    chunk: int = rng.DEFAULT_CHUNK,
) -> OutageProfile:
    """Monte Carlo estimate of p(l) for l = 0..L at fixed rate R.

    One fading draw per trial is shared across all l, so the estimates
    are exactly nonincreasing in l. Calls with the same seed and stream
    reuse the same fading draws, which couples comparisons across SNR or
    rate through common random numbers.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if R < 0:
        raise ValueError(f"R must be >= 0, got {R}")
    counts = _outage_counts(cfg, eta, R, trials, seed, stream, workers, chunk)
    return _profile_from_counts(counts, trials)


def effective_rate(
    R: float,
    L: int,
    profile: OutageProfile | Sequence[float],
    eta: Optional[SnrPoint] = None,
) -> EffectiveRate:
    """Average per-message rate R * L / sum_{l=0}^{L-1} p(l).

    Accepts an estimated profile or a plain p(0..L) sequence (e.g. the
    closed-form oracle). r_hat = r_bar / log2(eta) is attached when eta
    is given.
    """
    p = profile.p_hat if isinstance(profile, OutageProfile) else np.asarray(profile, dtype=float)
    if len(p) < L:
        raise ValueError(f"profile has {len(p)} entries, need at least L={L}")
    denom = float(np.sum(p[:L]))
    r_bar = R * L / denom
    r_hat = r_bar / eta.log2_eta if eta is not None else None
    return EffectiveRate(r_bar=r_bar, r_hat=r_hat)


def _fit_slope(x: np.ndarray, y: np.ndarray) -> SlopeEstimate:
    order = np.argsort(x)
    x, y = x[order], y[order]
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    secant = (y[-1] - y[-2]) / (x[-1] - x[-2])
    return SlopeEstimate(
        slope=float(slope),
        secant=float(secant),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_used=len(x),
    )


def diversity_slope(points: Sequence[tuple[SnrPoint, float]]) -> SlopeEstimate:
    """OLS slope of -log2(p) against log2(eta) over (SNR, probability) pairs.

    Points with p outside (0, 1) carry no slope information and are
    dropped with a warning; at least two usable points with distinct SNR
    are required.
    """
    usable = []
    for eta, p in points:
        if not 0.0 < p < 1.0:
            warnings.warn(
                f"probability {p} at eta_db={eta.eta_db} is not in (0, 1); point skipped",
                stacklevel=2,
            )
            continue
        usable.append((eta.log2_eta, -math.log2(p)))
    if len(usable) < 2:
        raise ValueError("need at least two points with probabilities in (0, 1)")
    x = np.array([u[0] for u in usable])
    y = np.array([u[1] for u in usable])
    if len(np.unique(x)) != len(x):
        raise ValueError("SNR points must be distinct")
    return _fit_slope(x, y)


def diversity_slope_from_neg_log2(
    etas: Sequence[SnrPoint], neg_log2_p: Sequence[float]
) -> SlopeEstimate:
    """Slope fit on precomputed -log2(p) values.

    Used where p itself is not representable (it rounds to 1) but its
    exponent is, e.g. from :func:`siso_outage_neg_log2`.
    """
    if len(etas) != len(neg_log2_p):
        raise ValueError("etas and neg_log2_p must have equal length")
    if len(etas) < 2:
        raise ValueError("need at least two points")
    x = np.array([e.log2_eta for e in etas])
    y = np.asarray(neg_log2_p, dtype=float)
    if np.any(~np.isfinite(y)):
        raise ValueError("neg_log2_p values must be finite")
    return _fit_slope(x, y)


def run_rateless_experiment(
    cfg: RatelessConfig,
    r_n: float,
    eta_grid: Sequence[SnrPoint],
    trials: int,
    seed: int,
    *,
    workers: int = 1,
    chunk: int = rng.DEFAULT_CHUNK,
) -> list[SnrRecord]:
    """Full protocol sweep: per SNR, estimate p(l), stop counts, and rates.

    The rate scales with SNR as R = r_n * log2(eta). Each SNR point uses
    its own substream tagged by grid position, so records are independent
    of evaluation order.
    """
    if not eta_grid:
        raise ValueError("eta_grid must be nonempty")
    if float(r_n) < 0:
        raise ValueError(f"r_n must be >= 0, got {r_n}")
    records = []
    for i, eta in enumerate(eta_grid):
        R = float(r_n) * eta.log2_eta
        counts = _outage_counts(cfg, eta, R, trials, seed, i, workers, chunk)
        profile = _profile_from_counts(counts, trials)
        rate = effective_rate(R, cfg.L, profile, eta)
        # stop at l <=> still short after l-1 blocks but not after l
        after = np.concatenate(([trials], counts))
        stop_hist = np.concatenate((after[:-1] - after[1:], [counts[-1]]))
        records.append(SnrRecord(eta=eta, R=R, profile=profile, rate=rate, stop_hist=stop_hist))
    return records


def write_experiment_csv(
    out: IO[str],
    records: Sequence[SnrRecord],
    seed: int,
    metadata: Mapping[str, object] | None = None,
) -> None:
    """Rows `eta_db,l,p_hat,stderr,trials,r_bar,r_hat,seed`, one per (SNR, l)."""
    if metadata:
        for key in sorted(metadata):
            out.write(f"# {key}={metadata[key]}\n")
    out.write("eta_db,l,p_hat,stderr,trials,r_bar,r_hat,seed\n")
    for rec in records:
        for l in range(len(rec.profile.p_hat)):
            out.write(
                f"{format_sig12(rec.eta.eta_db)},{l},"
                f"{format_sig12(rec.profile.p_hat[l])},{format_sig12(rec.profile.stderr[l])},"
                f"{rec.profile.trials},{format_sig12(rec.rate.r_bar)},"
                f"{format_sig12(rec.rate.r_hat)},{seed}\n"
            )
