"""SISO permutation codes and their use as rateless codes.

A codebook maps each of 2^bits messages to one constellation point per
block; block 1 uses the points verbatim and every other block applies a
permutation. Decoding works on whatever prefix of blocks the stopping
rule releases, so permutations are scored by the minimum pairwise
product distance of every prefix, longest prefix first. Unit block
length throughout (T = 1), so a code of `bits` bits runs at R = bits / L
bits per channel use.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Mapping, Optional, Sequence

import numpy as np

from . import rng
from .simulate import (
    EffectiveRate,
    OutageProfile,
    SnrPoint,
    effective_rate,
)
from .tradeoff import format_sig12

_LN2 = math.log(2.0)

MAX_BITS = 8

DEFAULT_SEARCH_BUDGET = 200_000

_HILL_CLIMB_RESTARTS = 16


@dataclass(frozen=True, eq=False)
class Constellation:
    """A normalized set of 2^bits distinct complex signal points."""

    points: np.ndarray
    bits: int

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError(f"bits must be >= 1, got {self.bits}")
        if len(self.points) != 2**self.bits:
            raise ValueError(
                f"expected {2 ** self.bits} points for bits={self.bits}, got {len(self.points)}"
            )
        if len(np.unique(self.points)) != len(self.points):
            raise ValueError("constellation points must be distinct")
        energy = float(np.mean(np.abs(self.points) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"mean energy must be 1 within 1e-12, got {energy!r}")

    @property
    def size(self) -> int:
        return len(self.points)

    @cached_property
    def min_distance(self) -> float:
        i, j = np.triu_indices(self.size, k=1)
        return float(np.min(np.abs(self.points[i] - self.points[j])))


def build_qam(bits: int) -> Constellation:
    """Unit-energy QAM alphabet of 2^bits points.

    Even bit counts give the square grid; odd bit counts give the
    2^((bits+1)/2) x 2^((bits-1)/2) rectangular grid, which degenerates
    to the +-1 pair at bits = 1.
    """
    if not 1 <= bits <= MAX_BITS:
        raise ValueError(f"bits must be in 1..{MAX_BITS}, got {bits}")
    w = 2 ** ((bits + 1) // 2)
    h = 2 ** (bits // 2)
    xs = np.arange(-(w - 1), w, 2)
    ys = np.arange(-(h - 1), h, 2)
    grid = xs[None, :] + 1j * ys[:, None]
    points = grid.ravel()
    scale = 1.0 / math.sqrt(np.mean(np.abs(points) ** 2))
    return Constellation(points=points * scale, bits=bits)


@dataclass(frozen=True, eq=False)
class PermutationCode:
    """L per-block permutations of one constellation; block 1 is identity."""

    constellation: Constellation
    perms: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.perms) < 1:
            raise ValueError("need at least one block")
        n = self.constellation.size
        identity = tuple(range(n))
        if self.perms[0] != identity:
            raise ValueError("perms[0] must be the identity permutation")
        for k, perm in enumerate(self.perms):
            if tuple(sorted(perm)) != identity:
                raise ValueError(f"perms[{k}] is not a permutation of 0..{n - 1}")

    @property
    def L(self) -> int:
        return len(self.perms)

    @property
    def bits(self) -> int:
        return self.constellation.bits

    @property
    def n_messages(self) -> int:
        return self.constellation.size

    @cached_property
    def symbol_table(self) -> np.ndarray:
        """Shape (L, n_messages): symbol sent in block l for each message."""
        pts = self.constellation.points
        return np.stack([pts[np.asarray(perm)] for perm in self.perms])


def identity_code(L: int, bits: int) -> PermutationCode:
    """The repetition baseline: every block transmits the same point."""
    n = 2**bits
    return PermutationCode(
        constellation=build_qam(bits), perms=tuple(tuple(range(n)) for _ in range(L))
    )


def prefix_min_products(code: PermutationCode) -> tuple[float, ...]:
    """Minimum pairwise product distance of each prefix, l = 1..L.

    Entry l - 1 is min over message pairs of prod_{k <= l} |x_k - x'_k|.
    """
    i, j = np.triu_indices(code.n_messages, k=1)
    prod = np.ones(len(i))
    minima = []
    for k in range(code.L):
        row = code.symbol_table[k]
        prod = prod * np.abs(row[i] - row[j])
        minima.append(float(prod.min()))
    return tuple(minima)


@dataclass(frozen=True)
class UniversalityEvidence:
    """Geometry and decay evidence for prefix decodability.

    per_prefix holds the minimum product distance of each prefix;
    min_product_distance / worst_subset point at the weakest prefix.
    decay_estimate is the fitted exponent of ln(-ln p) against ln(eta)
    for the conditional non-outage error (NaN until measured), reported
    as evidence only, never asserted against a target.
    """

    min_product_distance: float
    worst_subset: int
    decay_estimate: float
    per_prefix: tuple[float, ...]
    prefix_decay: tuple[float, ...] = ()
    cells: Optional[Mapping[tuple[int, float], Optional[float]]] = None


def _geometry_evidence(code: PermutationCode) -> UniversalityEvidence:
    per_prefix = prefix_min_products(code)
    worst = int(np.argmin(per_prefix)) + 1
    return UniversalityEvidence(
        min_product_distance=per_prefix[worst - 1],
        worst_subset=worst,
        decay_estimate=math.nan,
        per_prefix=per_prefix,
    )


def _objective(points: np.ndarray, perms: Sequence[Sequence[int]], i, j) -> tuple[float, ...]:
    """Per-prefix minima ordered longest prefix first, for lexicographic max."""
    prod = np.ones(len(i))
    minima = []
    for perm in perms:
        row = points[np.asarray(perm)]
        prod = prod * np.abs(row[i] - row[j])
        minima.append(float(prod.min()))
    return tuple(reversed(minima))


def search_permutation_code(
    L: int,
    bits: int,
    budget: int = DEFAULT_SEARCH_BUDGET,
    seed: int = 0,
) -> tuple[PermutationCode, UniversalityEvidence]:
    """Find permutations maximizing prefix product distances.

    The score of a candidate is the tuple of per-prefix minimum product
    distances, compared lexicographically from the full prefix down to
    block 1. Exhaustive enumeration runs when (2^bits)!^(L-1) candidate
    tuples fit the evaluation budget; otherwise seeded random restarts
    with pairwise-swap hill climbing. Ties go to the lexicographically
    smallest permutation tuple, so the result does not depend on
    evaluation order.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    const = build_qam(bits)
    n = const.size
    identity = tuple(range(n))
    if L == 1:
        code = PermutationCode(constellation=const, perms=(identity,))
        return code, _geometry_evidence(code)

    i, j = np.triu_indices(n, k=1)
    points = const.points

    best_perms = (identity,) * L
    best_obj = _objective(points, best_perms, i, j)

    def consider(perms: tuple[tuple[int, ...], ...], obj: tuple[float, ...]):
        nonlocal best_perms, best_obj
        if obj > best_obj or (obj == best_obj and perms < best_perms):
            best_perms, best_obj = perms, obj

    n_candidates = math.factorial(n) ** (L - 1)
    if n_candidates <= budget:
        for tail in itertools.product(itertools.permutations(range(n)), repeat=L - 1):
            perms = (identity,) + tail
            consider(perms, _objective(points, perms, i, j))
    else:
        per_restart = max(1, budget // _HILL_CLIMB_RESTARTS)
        for restart in range(_HILL_CLIMB_RESTARTS):
            gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, restart))))
            tail = [tuple(gen.permutation(n)) for _ in range(L - 1)]
            perms = (identity,) + tuple(tail)
            obj = _objective(points, perms, i, j)
            consider(perms, obj)
            evals = 1
            improved = True
            while improved and evals < per_restart:
                improved = False
                for k in range(1, L):
                    for a in range(n - 1):
                        for b in range(a + 1, n):
                            cand = list(perms[k])
                            cand[a], cand[b] = cand[b], cand[a]
                            cand_perms = perms[:k] + (tuple(cand),) + perms[k + 1 :]
                            cand_obj = _objective(points, cand_perms, i, j)
                            evals += 1
                            if cand_obj > obj:
                                perms, obj = cand_perms, cand_obj
                                improved = True
                            if evals >= per_restart:
                                break
                        if evals >= per_restart:
                            break
                    if evals >= per_restart:
                        break
            consider(perms, obj)

    code = PermutationCode(constellation=const, perms=best_perms)
    return code, _geometry_evidence(code)


def encode(code: PermutationCode, message: int) -> np.ndarray:
    """Symbols sent in blocks 1..L for one message."""
    if not 0 <= message < code.n_messages:
        raise ValueError(f"message must be in 0..{code.n_messages - 1}, got {message}")
    return code.symbol_table[:, message].copy()


@dataclass(frozen=True)
class ReceivedPrefix:
    """Observations of the first l blocks through a scalar channel h."""

    y: np.ndarray
    h: complex
    eta: SnrPoint
    l: int

    def __post_init__(self):
        if self.y.ndim != 1 or len(self.y) != self.l:
            raise ValueError(f"y must be 1-D of length l={self.l}, got shape {self.y.shape}")
        if self.l < 1:
            raise ValueError(f"l must be >= 1, got {self.l}")


def ml_decode_prefix(code: PermutationCode, rx: ReceivedPrefix) -> int:
    """Maximum-likelihood message over the received prefix.

    Minimizes the summed squared distance to sqrt(eta) * h * x over all
    messages; ties resolve to the smallest message index.
    """
    if rx.l > code.L:
        raise ValueError(f"prefix length {rx.l} exceeds code length {code.L}")
    if rx.h == 0:
        warnings.warn("zero channel gain: all hypotheses equidistant, tie-break applies", stacklevel=2)
    scale = math.sqrt(rx.eta.eta_linear) * rx.h
    cands = scale * code.symbol_table[: rx.l]
    d2 = np.sum(np.abs(rx.y[:, None] - cands) ** 2, axis=0)
    return int(np.argmin(d2))


@dataclass(frozen=True)
class ErrorDecomposition:
    """Per-stopping-block error accounting over one batch of trials.

    joint_err[l - 1] estimates Pr(decoding error and stop at block l);
    the final entry also carries the outage mass, since an undecoded
    message is a failure, so p_e = sum(joint_err) is the overall error
    probability. stop_hist counts stops at 1..L and then outages.
    cond_err_nonoutage is the error rate among trials that decoded.
    """

    joint_err: np.ndarray
    joint_stderr: np.ndarray
    p_e: float
    p_e_stderr: float
    stop_hist: np.ndarray
    cond_err_nonoutage: float
    trials: int

    def __post_init__(self):
        if abs(self.p_e - float(np.sum(self.joint_err))) > 1e-12:
            raise ValueError("p_e must equal the sum of joint_err")
        if np.any(self.joint_err < 0) or np.any(self.joint_err > 1):
            raise ValueError("joint_err entries must lie in [0, 1]")


@dataclass(frozen=True)
class CodeTrialResult:
    errors: ErrorDecomposition
    outage: OutageProfile
    rate: EffectiveRate
    eta: SnrPoint
    R: float


def _resolve_rate(code: PermutationCode, eta: SnrPoint, R, r_n, T: int) -> float:
    if (R is None) == (r_n is None):
        raise ValueError("pass exactly one of R, r_n")
    if r_n is not None:
        R = float(r_n) * eta.log2_eta
    if abs(code.L * R * T - code.bits) > 1e-9:
        raise ValueError(
            f"rate mismatch: codebook carries {code.bits} bits but L*R*T = {code.L * R * T}"
        )
    return float(R)


def _trial_counts(
    code: PermutationCode,
    eta: SnrPoint,
    R: float,
    trials: int,
    seed: int,
    stream: int,
    workers: int,
    chunk: int,
) -> tuple[np.ndarray, np.ndarray]:
    """(stop_counts, err_counts): stops at 1..L then outage; errors per stop block.

    Trial layout in the substream: one uniform for the message, two for
    the fading draw, 2L for the block noises. The layout is independent
    of the codebook, so runs with equal (seed, stream) share all
    randomness; that is what makes paired code comparisons tight.
    """
    L = code.L
    n_msgs = code.n_messages
    key = rng.stream_key(seed, stream)
    uniforms = 3 + 2 * L
    eta_lin = eta.eta_linear
    sqrt_eta = math.sqrt(eta_lin)
    table = code.symbol_table
    # bound the per-chunk distance matrix to ~32 MB for large codebooks
    chunk = min(chunk, max(1 << 12, (1 << 22) // n_msgs))

    def one_chunk(t0: int, n: int) -> np.ndarray:
        u = rng.trial_uniforms(key, uniforms, t0, n)
        msg = np.minimum((u[:, 0] * n_msgs).astype(np.int64), n_msgs - 1)
        h = rng.complex_normals(u[:, 1:3])[:, 0]
        noise = rng.complex_normals(u[:, 3:])
        ib = np.log1p(eta_lin * np.abs(h) ** 2) / _LN2
        # l * I_b >= L * R first succeeds at `stop`; all L failing is outage
        failed = np.zeros(n, dtype=np.int64)
        for l in range(1, L + 1):
            failed += l * ib < L * R
        stop = failed + 1  # in 1..L+1, L+1 meaning outage
        stop_counts = np.bincount(stop, minlength=L + 2)[1:]
        tx = table[:, msg].T
        y = sqrt_eta * h[:, None] * tx + noise
        err_counts = np.zeros(L, dtype=np.int64)
        for l in range(1, L + 1):
            sel = stop == l
            if not np.any(sel):
                continue
            scale = (sqrt_eta * h[sel])[:, None]
            d2 = np.zeros((int(np.count_nonzero(sel)), n_msgs))
            for k in range(l):
                d2 += np.abs(y[sel, k][:, None] - scale * table[k][None, :]) ** 2
            decoded = np.argmin(d2, axis=1)
            err_counts[l - 1] = np.count_nonzero(decoded != msg[sel])
        return np.concatenate((stop_counts, err_counts))

    parts = rng.map_chunks(one_chunk, trials, chunk=chunk, workers=workers)
    totals = rng.reduce_counts(parts)
    return totals[: L + 1], totals[L + 1 :]


def run_rateless_code_trials(
    code: PermutationCode,
    eta: SnrPoint,
    trials: int,
    seed: int,
    *,
    R: Optional[float] = None,
    r_n: Optional[float] = None,
    T: int = 1,
    workers: int = 1,
    stream: int = 0,
    chunk: int = rng.DEFAULT_CHUNK,
) -> CodeTrialResult:
    """Simulate the full rateless protocol with actual ML decoding.

    Per trial: draw h, accumulate Gaussian-input mutual information to
    pick the stopping block, then ML-decode the received prefix. Outage
    trials never decode and count as errors in the final joint term.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rate = _resolve_rate(code, eta, R, r_n, T)
    L = code.L
    stop_counts, err_counts = _trial_counts(code, eta, rate, trials, seed, stream, workers, chunk)
    outage_count = int(stop_counts[L])

    fail_counts = err_counts.copy()
    fail_counts[L - 1] += outage_count
    joint = fail_counts / trials
    joint_stderr = np.sqrt(joint * (1.0 - joint) / trials)
    p_e = float(np.sum(joint))
    p_e_stderr = math.sqrt(p_e * (1.0 - p_e) / trials)

    decoded_trials = int(np.sum(stop_counts[:L]))
    cond = float(np.sum(err_counts)) / decoded_trials if decoded_trials else math.nan

    errors = ErrorDecomposition(
        joint_err=joint,
        joint_stderr=joint_stderr,
        p_e=p_e,
        p_e_stderr=p_e_stderr,
        stop_hist=stop_counts,
        cond_err_nonoutage=cond,
        trials=trials,
    )

    # still short after block l == has not stopped at any block <= l
    after = trials - np.cumsum(stop_counts[:L])
    p_hat = np.concatenate(([1.0], after / trials))
    stderr = np.concatenate(([0.0], np.sqrt(p_hat[1:] * (1.0 - p_hat[1:]) / trials)))
    profile = OutageProfile(p_hat=p_hat, stderr=stderr, trials=trials)

    return CodeTrialResult(
        errors=errors,
        outage=profile,
        rate=effective_rate(rate, L, profile, eta),
        eta=eta,
        R=rate,
    )


def universality_margin(
    code: PermutationCode,
    eta_grid: Sequence[SnrPoint],
    trials: int,
    seed: int,
    *,
    R: Optional[float] = None,
    min_count: int = 100,
    workers: int = 1,
    chunk: int = rng.DEFAULT_CHUNK,
) -> UniversalityEvidence:
    """Measure conditional non-outage error decay across an SNR grid.

    For every prefix length l, estimates Pr(error | stop at l) at each
    SNR; cells with fewer than min_count stopping trials are left
    unestimable (None). Each prefix with at least two estimable cells in
    (0, 1) gets a fitted exponent of ln(-ln p) against ln(eta);
    decay_estimate is the smallest such exponent. No target value is
    asserted: the evidence is reported as-is.
    """
    if not eta_grid:
        raise ValueError("eta_grid must be nonempty")
    if R is None:
        R = code.bits / code.L
    L = code.L
    geometry = _geometry_evidence(code)
    cells: dict[tuple[int, float], Optional[float]] = {}
    for idx, eta in enumerate(eta_grid):
        stop_counts, err_counts = _trial_counts(code, eta, R, trials, seed, idx, workers, chunk)
        for l in range(1, L + 1):
            stopped = int(stop_counts[l - 1])
            cells[(l, eta.eta_db)] = err_counts[l - 1] / stopped if stopped >= min_count else None

    prefix_decay = []
    for l in range(1, L + 1):
        pts = [
            (math.log(eta.eta_linear), math.log(-math.log(p)))
            for eta in eta_grid
            for p in [cells[(l, eta.eta_db)]]
            if p is not None and 0.0 < p < 1.0
        ]
        if len(pts) >= 2:
            x = np.array([p[0] for p in pts])
            y = np.array([p[1] for p in pts])
            prefix_decay.append(float(np.polyfit(x, y, 1)[0]))
        else:
            prefix_decay.append(math.nan)
    finite = [d for d in prefix_decay if not math.isnan(d)]
    return UniversalityEvidence(
        min_product_distance=geometry.min_product_distance,
        worst_subset=geometry.worst_subset,
        decay_estimate=min(finite) if finite else math.nan,
        per_prefix=geometry.per_prefix,
        prefix_decay=tuple(prefix_decay),
        cells=cells,
    )


def codebook_text(code: PermutationCode) -> str:
    """Canonical plain-text form: L, bits, `re,im` point lines, L perm lines."""
    lines = [str(code.L), str(code.bits)]
    for p in code.constellation.points:
        lines.append(f"{float(p.real)!r},{float(p.imag)!r}")
    for perm in code.perms:
        lines.append(" ".join(str(i) for i in perm))
    return "\n".join(lines) + "\n"


def save_codebook(code: PermutationCode, path: str) -> None:
    with open(path, "w", newline="") as f:
        f.write(codebook_text(code))


def parse_codebook(text: str) -> PermutationCode:
    """Parse the plain-text codebook format; errors carry the line number."""
    lines = text.splitlines()

    def need(idx: int) -> str:
        if idx >= len(lines):
            raise ValueError(f"line {idx + 1}: unexpected end of codebook")
        return lines[idx]

    def parse_int(idx: int, label: str) -> int:
        raw = need(idx).strip()
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"line {idx + 1}: expected integer {label}, got {raw!r}") from None

    L = parse_int(0, "L")
    bits = parse_int(1, "bits")
    if L < 1 or not 1 <= bits <= MAX_BITS:
        raise ValueError(f"line 1: invalid dimensions L={L}, bits={bits}")
    n = 2**bits
    points = np.empty(n, dtype=complex)
    for k in range(n):
        idx = 2 + k
        raw = need(idx).strip()
        parts = raw.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {idx + 1}: expected `re,im`, got {raw!r}")
        try:
            points[k] = complex(float(parts[0]), float(parts[1]))
        except ValueError:
            raise ValueError(f"line {idx + 1}: malformed point {raw!r}") from None
    perms = []
    for k in range(L):
        idx = 2 + n + k
        raw = need(idx).strip()
        try:
            perm = tuple(int(tok) for tok in raw.split())
        except ValueError:
            raise ValueError(f"line {idx + 1}: malformed permutation {raw!r}") from None
        if len(perm) != n:
            raise ValueError(f"line {idx + 1}: permutation has {len(perm)} entries, expected {n}")
        perms.append(perm)
    extra = 2 + n + L
    if any(line.strip() for line in lines[extra:]):
        raise ValueError(f"line {extra + 1}: trailing content after codebook")
    try:
        return PermutationCode(constellation=Constellation(points=points, bits=bits), perms=tuple(perms))
    except ValueError as exc:
        raise ValueError(f"line 1: invalid codebook: {exc}") from None


def load_codebook(path: str) -> PermutationCode:
    with open(path, "r", newline="") as f:
        return parse_codebook(f.read())


def write_trials_csv(
    out: IO[str],
    results: Sequence[CodeTrialResult],
    seed: int,
    metadata: Mapping[str, object] | None = None,
) -> None:
    """Rows `eta_db,l,joint_err,stderr,p_e,cond_err_nonoutage,seed`."""
    if metadata:
        for key in sorted(metadata):
            out.write(f"# {key}={metadata[key]}\n")
    out.write("eta_db,l,joint_err,stderr,p_e,cond_err_nonoutage,seed\n")
    for res in results:
        for l in range(1, len(res.errors.joint_err) + 1):
            out.write(
                f"{format_sig12(res.eta.eta_db)},{l},"
                f"{format_sig12(res.errors.joint_err[l - 1])},"
                f"{format_sig12(res.errors.joint_stderr[l - 1])},"
                f"{format_sig12(res.errors.p_e)},"
                f"{format_sig12(res.errors.cond_err_nonoutage)},{seed}\n"
            )
