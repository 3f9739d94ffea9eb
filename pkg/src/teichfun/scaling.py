"""Pre-scaling and scaling functions on dual words, with certified error bounds.

Error bound used throughout: for a dual word w of depth n with parent P = I_{w[:-1]},
every infinite extension w* to the left satisfies

    |log S(w*) - log S(w)| <= M_log * R * |P|

where M_log bounds |d/dtheta log|f'|| on the branch domains and
R = sum_{l>=1} sup|g_u'| over inverse-branch compositions of length l.
This is the distortion estimate for the nested cylinders I_{uw} = g_u(I_w)
and I_{uP} = g_u(I_P) summed over all the intermediate iterates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CombinatoricsMismatch, InputError, NotHyperbolic
from .mobius import TAU, classify, fixed_points, log_derivative_slope
from .symbolic import (
    WordGraph, count_words, cylinder_length, cylinder_lengths, distortion_scan,
    random_prefixes, require_admissible, word_arcs,
)

ROUND_REL = 64 * np.finfo(float).eps    # per-composition relative rounding allowance
GRID_POINTS = 2048
SAFETY = 1.05
EXHAUSTIVE_LIMIT = 10**7
PARTITION_ERR_FACTOR = 10.0


@dataclass(frozen=True)
class ScalingSample:
    dual_word: tuple
    value: float
    error_bound: float       # certified, per word
    uniform_bound: float     # C_lip * mu^n, the depth-only bound


@dataclass(frozen=True)
class DistortionConstants:
    m: float                 # min branch derivative
    M_bound: float           # max |f''| over branch domains (grid, with safety factor)
    M_log: float             # max |(log f')'| over branch domains (grid, with safety factor)
    A_len: float             # nu_n <= A_len * mu^n for all n
    mu: float
    log_B: float             # A M / (m (1 - mu)); B = exp(log_B) may overflow
    B: float                 # exp(log_B), inf when not representable
    B_sharp: float           # exp(M_log * R * nu_0), a tighter distortion bound
    C_lip: float             # |S(w*) - S(w*_n)| <= C_lip mu^n
    R: float                 # sum over l >= 1 of rho_l
    rho: tuple               # rho_0 .. rho_L
    nu: tuple                # measured max cylinder lengths nu_0 .. nu_L
    fit_A: float             # least-squares fit of log nu_n over n = 1..L
    fit_mu: float
    depth: int
    max_distortion: tuple    # measured worst ratio of derivative extremes per depth
    base_rel_error: float    # relative length uncertainty of a pre-scaling from W itself


def _branch_domains(system):
    """(side, start angle, length) of the union of intervals carrying each side's branch."""
    k = system.k
    L = system.lengths
    out = []
    side = system.side
    for s in np.unique(side):
        idx = np.flatnonzero(side == s)
        # the block is cyclically contiguous; find its first interval
        first = [i for i in idx if side[(i - 1) % k] != s]
        if len(first) != 1:
            raise InputError(f"branch domain of side {s} is not an arc")
        out.append((int(s), float(system.W[first[0]]), float(L[idx].sum())))
    return out


def distortion_constants(system, depth: int = 4) -> DistortionConstants:
    key = ("constants", depth)
    if key in system._cache:
        return system._cache[key]
    m_log, m2 = 0.0, 0.0
    for s, start, length in _branch_domains(system):
        mp = system.side_map(s)
        th = start + np.linspace(0.0, length, GRID_POINTS)
        slope = np.abs(log_derivative_slope(mp.a, mp.b, th))
        d1 = 1.0 / np.abs(np.conj(mp.b) * np.exp(1j * th) + np.conj(mp.a)) ** 2
        m_log = max(m_log, float(slope.max()))
        m2 = max(m2, float((slope * d1).max()))
    m_log *= SAFETY
    m2 *= SAFETY
    graph = WordGraph(system.A, depth)
    rho, ratio = distortion_scan(system, graph, depth)
    if rho[depth] >= 1.0:
        from .errors import ExpansionFailure
        raise ExpansionFailure(f"rho_{depth} = {rho[depth]} >= 1")
    R = sum(rho[1:]) / (1.0 - rho[depth])
    lens = cylinder_lengths(system, graph, depth)
    nu = tuple(float(l.max()) for l in lens)
    mu = rho[depth] ** (1.0 / depth)
    A = nu[0] * max(rho[r] / mu**r for r in range(depth))
    n = np.arange(1, depth + 1)
    slope, icpt = np.polyfit(n, np.log(nu[1:]), 1)
    lam = system.lambda0
    log_B = A * m2 / (lam * (1.0 - mu))
    B = math.exp(log_B) if log_B < 700 else math.inf
    B_sharp = math.exp(m_log * R * nu[0])
    C = math.expm1(m_log * R * A) / mu
    # partition points are known to about the Markov closure residual; each of the
    # two arcs in a ratio inherits twice that, relative to its base interval
    w_err = PARTITION_ERR_FACTOR * max(system.markov_residual, np.finfo(float).eps)
    base_rel = 4.0 * w_err / float(system.lengths.min())
    out = DistortionConstants(lam, m2, m_log, A, mu, log_B, B, B_sharp, C, R, tuple(rho), nu,
                              float(math.exp(icpt)), float(math.exp(slope)), depth, tuple(ratio),
                              base_rel)
    system._cache[key] = out
    return out


def log_error(consts: DistortionConstants, parent_len, n):
    """Certified bound on |log S(w*) - log S(w*_n)| given the parent arc length.

    Besides the distortion term this carries the arithmetic floor: rounding in the
    n compositions and the uncertainty of the partition points themselves."""
    return (consts.M_log * consts.R * np.asarray(parent_len)
            + ROUND_REL * (n + 1) + consts.base_rel_error)


def value_error(consts, S, parent_len, n):
    return np.asarray(S) * np.expm1(log_error(consts, parent_len, n))


# ---------------------------------------------------------------- single words

def prescaling(system, dual_word, precision: int | None = None) -> float:
    """|I_w| / |I_{w[:-1]}| for the dual word w (n >= 1)."""
    w = require_admissible(system.A, dual_word)
    if len(w) < 2:
        raise InputError("pre-scaling needs at least two symbols")
    return cylinder_length(system, w, precision) / cylinder_length(system, w[:-1], precision)


def scaling_estimate(system, tail, n: int, precision: int | None = None) -> ScalingSample:
    """Depth-n estimate of S at the dual word whose rightmost symbols are `tail`."""
    t = require_admissible(system.A, tail)
    if n < 1 or n + 1 > len(t):
        raise InputError(f"depth {n} needs a tail of at least {n + 1} symbols")
    w = t[len(t) - n - 1:]
    c = distortion_constants(system)
    P = cylinder_length(system, w[:-1], precision)
    S = cylinder_length(system, w, precision) / P
    return ScalingSample(w, S, float(value_error(c, S, P, n)), c.C_lip * c.mu**n)


def scaling_profile(system, tails: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """S and certified errors at every depth 1..N-1 for a batch of tails of N symbols.

    Returns arrays of shape (batch, N) with column n the depth-n estimate (column 0 unused)."""
    tails = np.atleast_2d(np.asarray(tails, dtype=np.int64))
    N = tails.shape[1]
    c = distortion_constants(system)
    S = np.full((len(tails), N), np.nan)
    E = np.full((len(tails), N), np.nan)
    for n in range(1, N):
        w = tails[:, N - n - 1:]
        Lw = word_arcs(system, w)[2]
        Lp = word_arcs(system, w[:, :-1])[2]
        S[:, n] = Lw / Lp
        E[:, n] = value_error(c, S[:, n], Lp, n)
    return S, E


# ---------------------------------------------------------------- all words of a depth

@dataclass
class ScalingTable:
    depth: int
    graph: WordGraph
    S: np.ndarray            # pre-scaling per level-n word (graph storage order)
    parent_len: np.ndarray
    error: np.ndarray        # certified per-word error bound


def scaling_table(system, depth: int, graph: WordGraph | None = None) -> ScalingTable:
    if depth < 1:
        raise InputError("depth must be >= 1")
    graph = graph if graph is not None else WordGraph(system.A, depth)
    lens = cylinder_lengths(system, graph, depth)
    P = lens[depth - 1][graph.parent[depth]]
    S = lens[depth] / P
    c = distortion_constants(system)
    return ScalingTable(depth, graph, S, P, value_error(c, S, P, depth))


def partition_of_unity_residual(table: ScalingTable) -> float:
    g = table.graph
    sums = np.bincount(g.parent[table.depth], weights=table.S, minlength=g.count(table.depth - 1))
    return float(np.abs(sums - 1.0).max())


# ---------------------------------------------------------------- d_max

@dataclass(frozen=True)
class DmaxEstimate:
    depth: int
    lower: float
    upper: float
    central: float           # max |S_X - S_Y| over the evaluated words
    argmax_word: tuple
    sampled: bool
    n_words: int
    sample_upper: float      # max (|dS| + errors) over evaluated words (certified only when exhaustive)
    certified_upper_depth: int

    def to_dict(self) -> dict:
        return {"depth": self.depth, "lower": self.lower, "upper": self.upper,
                "central": self.central, "argmax_word": list(self.argmax_word),
                "sampled": self.sampled, "n_words": self.n_words,
                "sample_upper": self.sample_upper,
                "certified_upper_depth": self.certified_upper_depth}


def _dmax_exhaustive(X, Y, depth):
    g = WordGraph(X.A, depth)
    tx, ty = scaling_table(X, depth, g), scaling_table(Y, depth, g)
    d = np.abs(tx.S - ty.S)
    err = tx.error + ty.error
    i = int(np.argmax(d))
    word = tuple(int(x) for x in g.words(depth)[i])
    return float(max(0.0, (d - err).max())), float((d + err).max()), float(d[i]), word, g.count(depth)


def d_max_estimate(X, Y, depth: int, exhaustive_limit: int = EXHAUSTIVE_LIMIT,
                   strata_depth: int | None = None, seed: int = 0) -> DmaxEstimate:
    """Certified interval for sup |S_X - S_Y| from depth-n pre-scaling.

    Above `exhaustive_limit` words: every depth-`strata_depth` word (rightmost symbols)
    is extended to the left by random admissible symbols.  The lower bound stays
    certified; the certified upper bound then comes from the exhaustive pass at the
    strata depth, since every dual word lies in one stratum.  By default the strata
    depth is the deepest one that fits under the limit (at least 3)."""
    if not np.array_equal(X.A, Y.A):
        raise CombinatoricsMismatch("systems have different transition matrices")
    if depth < 1:
        raise InputError("depth must be >= 1")
    total = count_words(X.A, depth)
    if total <= exhaustive_limit:
        lo, up, cen, word, cnt = _dmax_exhaustive(X, Y, depth)
        return DmaxEstimate(depth, lo, up, cen, word, False, cnt, up, depth)
    if strata_depth is None:
        strata_depth = 3
        while strata_depth + 1 < depth and count_words(X.A, strata_depth + 1) <= exhaustive_limit:
            strata_depth += 1
    rng = np.random.default_rng(seed)
    g = WordGraph(X.A, strata_depth)
    strata = g.words(strata_depth).astype(np.int64)
    words = random_prefixes(X.A, strata, depth - strata_depth, rng)
    cx, cy = distortion_constants(X), distortion_constants(Y)
    out = {}
    for name, sys_, c in (("x", X, cx), ("y", Y, cy)):
        Lw = word_arcs(sys_, words)[2]
        Lp = word_arcs(sys_, words[:, :-1])[2]
        S = Lw / Lp
        out[name] = (S, value_error(c, S, Lp, depth))
    d = np.abs(out["x"][0] - out["y"][0])
    err = out["x"][1] + out["y"][1]
    i = int(np.argmax(d))
    lower = float(max(0.0, (d - err).max()))
    _, up_strata, _, _, _ = _dmax_exhaustive(X, Y, strata_depth)
    return DmaxEstimate(depth, lower, max(up_strata, lower), float(d[i]),
                        tuple(int(x) for x in words[i]), True, len(words),
                        float((d + err).max()), strata_depth)


# ---------------------------------------------------------------- periodic cycles

def periodic_cycles(A: np.ndarray, p: int) -> list[tuple]:
    """All words c of length p with c cyclically admissible (rotations listed separately)."""
    k = A.shape[0]
    paths = [(i,) for i in range(k)]
    for _ in range(p - 1):
        paths = [w + (j,) for w in paths for j in np.flatnonzero(A[w[-1]])]
    return [tuple(int(x) for x in w) for w in paths if A[w[-1], w[0]]]


@dataclass(frozen=True)
class CycleSumResult:
    cycle: tuple
    depth: int
    log_sum: float
    log_multiplier: float    # -log |(f^p)'(x_per)|
    residual: float
    bound: float


def periodic_point(system, cycle) -> tuple[float, float]:
    """Repelling fixed point of the branch composition along the cycle, and log of its multiplier."""
    F = None
    for i in cycle:
        b = system.branch(i)
        F = b if F is None else b @ F
    if classify(F) != "hyperbolic":
        raise NotHyperbolic(f"cycle {cycle} composition is not hyperbolic")
    _, rep = fixed_points(F)
    return rep.angle, math.log(F.derivative_angle(rep.angle))


def cycle_sum_check(system, cycle, depth: int) -> CycleSumResult:
    c = tuple(int(x) for x in cycle)
    p = len(c)
    require_admissible(system.A, c + c[:1])
    reps = (depth + 2 * p) // p + 1
    long = c * reps
    consts = distortion_constants(system)
    words = []
    for k in range(p):
        s = long[: len(long) - k]
        words.append(s[len(s) - depth - 1:])
    words = np.array(words, dtype=np.int64)
    Lw = word_arcs(system, words)[2]
    Lp = word_arcs(system, words[:, :-1])[2]
    total = float(np.log(Lw / Lp).sum())
    x, logd = periodic_point(system, c)
    bound = float(log_error(consts, Lp, depth).sum())
    return CycleSumResult(c, depth, total, -logd, abs(total + logd), bound)
