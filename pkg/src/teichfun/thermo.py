"""Transfer matrices on depth-n words: pressure, Gibbs measures, variance, pressure metric.

States are the admissible words of n+1 symbols (a WordGraph level).  The weighted
matrix is M[u, v] = exp(phi(v)) whenever v[:-1] == u[1:].  M is never formed:
M x is a bincount over the children of each parent word followed by a gather.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bowen_series import check_transitive
from .errors import (
    CombinatoricsMismatch, ConvergenceFailure, DepthMismatch, InputError, NotIrreducible,
)
from .symbolic import WordGraph, cylinder_lengths

PRESSURE_TOL = 1e-13
MAX_ITER = 20000


def surface_area(genus: int) -> float:
    """Hyperbolic area of a closed genus-g surface (Gauss-Bonnet)."""
    return 4.0 * math.pi * (genus - 1)


@dataclass
class Potential:
    graph: WordGraph
    depth: int
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.graph.count(self.depth):
            raise InputError("potential does not cover every admissible word")
        if not np.all(np.isfinite(self.values)):
            raise InputError("potential has non-finite values")

    def __add__(self, other):
        if isinstance(other, Potential):
            _same(self, other)
            return Potential(self.graph, self.depth, self.values + other.values)
        return Potential(self.graph, self.depth, self.values + float(other))

    def __mul__(self, c: float):
        return Potential(self.graph, self.depth, self.values * float(c))

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1.0) * other

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())


def _same(p: Potential, q: Potential):
    if p.depth != q.depth:
        raise DepthMismatch(f"depths {p.depth} and {q.depth}")
    if p.graph is not q.graph and not np.array_equal(p.graph.A, q.graph.A):
        raise CombinatoricsMismatch("potentials live on different subshifts")


# ---------------------------------------------------------------- operators

def _apply(graph: WordGraph, n: int, w: np.ndarray, x: np.ndarray, buf: np.ndarray) -> np.ndarray:
    if n == 0:
        return graph.A.astype(float) @ np.multiply(w, x, out=buf)
    y = np.bincount(graph.parent[n], weights=np.multiply(w, x, out=buf), minlength=graph.count(n - 1))
    return y[graph.suffix[n]]


def _apply_T(graph: WordGraph, n: int, w: np.ndarray, x: np.ndarray, buf: np.ndarray) -> np.ndarray:
    if n == 0:
        return w * (graph.A.astype(float).T @ x)
    z = np.bincount(graph.suffix[n], weights=x, minlength=graph.count(n - 1))
    y = z[graph.parent[n]]
    y *= w
    return y


def _perron(pot: Potential, transpose: bool, tol: float, values: np.ndarray | None = None,
            consume: bool = False):
    """Power iteration with the Collatz-Wielandt bracket min/max (Mx/x).

    `values` overrides pot.values (same graph and depth) without building a Potential;
    with consume=True that array is overwritten to save memory at large depth."""
    graph, n = pot.graph, pot.depth
    if not check_transitive(graph.A)[0]:
        raise NotIrreducible("transition graph is not strongly connected")
    vals = pot.values if values is None else values
    shift = float(vals.max())                # keep exp() in range; pressure shifts by it
    w = vals if (consume and values is not None) else vals.copy()
    w -= shift
    np.exp(w, out=w)
    op = _apply_T if transpose else _apply
    x = np.ones(len(w))
    buf = np.empty_like(x)
    for it in range(1, MAX_ITER + 1):
        y = op(graph, n, w, x, buf)
        r = np.divide(y, x, out=buf)         # buf is free again once y exists
        lo, hi = float(r.min()), float(r.max())
        np.divide(y, y.max(), out=x)
        del y
        if math.log(hi / lo) <= tol:
            break
    else:
        raise ConvergenceFailure(f"power iteration did not converge (bracket {lo}, {hi})")
    return math.log(lo) + shift, math.log(hi) + shift, x, it


@dataclass(frozen=True)
class PressureResult:
    value: float
    lower: float
    upper: float
    iterations: int


def pressure_bracket(pot: Potential, tol: float = PRESSURE_TOL) -> PressureResult:
    lo, hi, _, it = _perron(pot, False, tol)
    return PressureResult(0.5 * (lo + hi), lo, hi, it)


def pressure(pot: Potential, tol: float = PRESSURE_TOL) -> float:
    return pressure_bracket(pot, tol).value


# ---------------------------------------------------------------- potentials from geometry

def potential_from_scaling(system, depth: int, graph: WordGraph | None = None,
                           lengths: list | None = None) -> Potential:
    """log of the pre-scaling |I_w| / |I_{w[:-1]}| on depth-n dual words."""
    if depth < 1:
        raise InputError("depth must be >= 1")
    graph = graph if graph is not None else WordGraph(system.A, depth)
    lens = lengths if lengths is not None else cylinder_lengths(system, graph, depth)
    vals = np.log(lens[depth])
    vals -= np.log(lens[depth - 1])[graph.parent[depth]]
    return Potential(graph, depth, vals)


def geometric_potential(system, depth: int, graph: WordGraph | None = None,
                        lengths: list | None = None) -> Potential:
    """log |I_w| / |I_{w[1:]}|: minus log f' at a point of I_w (mean value theorem)."""
    if depth < 1:
        raise InputError("depth must be >= 1")
    graph = graph if graph is not None else WordGraph(system.A, depth)
    lens = lengths if lengths is not None else cylinder_lengths(system, graph, depth)
    vals = np.log(lens[depth]) - np.log(lens[depth - 1])[graph.suffix[depth]]
    return Potential(graph, depth, vals)


@dataclass(frozen=True)
class ZeroPressureReport:
    depth: int
    dual_pressure: float
    residual: float              # |P(log S)| on the dual side
    geometric_pressure: float
    geometric_residual: float    # |P(-log f')| with the locally constant depth-n potential
    geometric_bracket: tuple


def check_zero_pressure(system, depth: int) -> ZeroPressureReport:
    graph = WordGraph(system.A, depth)
    lens = cylinder_lengths(system, graph, depth)
    dual = pressure_bracket(potential_from_scaling(system, depth, graph, lens))
    geo = pressure_bracket(geometric_potential(system, depth, graph, lens))
    return ZeroPressureReport(depth, dual.value, abs(dual.value), geo.value, abs(geo.value),
                              (geo.lower, geo.upper))


# ---------------------------------------------------------------- Gibbs measures

@dataclass
class GibbsApprox:
    potential: Potential
    pressure: float
    left_vec: np.ndarray
    right_vec: np.ndarray
    measure: np.ndarray

    @property
    def depth(self) -> int:
        return self.potential.depth

    def marginal(self, side: str = "last") -> np.ndarray:
        """Measure of the depth-(n-1) words, summing out the last (or first) symbol."""
        g, n = self.potential.graph, self.depth
        idx = g.parent[n] if side == "last" else g.suffix[n]
        return np.bincount(idx, weights=self.measure, minlength=g.count(n - 1))


def gibbs(pot: Potential, tol: float = PRESSURE_TOL, keep_vectors: bool = True) -> GibbsApprox:
    """Gibbs measure from the Perron vectors.  keep_vectors=False drops them after use
    (then Birkhoff sampling is unavailable) to save memory at large depth."""
    lo, hi, r, _ = _perron(pot, False, tol)
    _, _, l, _ = _perron(pot, True, tol)
    if not (r > 0).all() or not (l > 0).all():
        raise NotIrreducible("Perron vectors are not positive")
    if keep_vectors:
        m = l * r
    else:
        m = l
        m *= r
        l = r = None
    m /= m.sum()
    return GibbsApprox(pot, 0.5 * (lo + hi), l, r, m)


def mean(psi: Potential, g: GibbsApprox) -> float:
    if psi.depth != g.depth:
        raise DepthMismatch(f"depths {psi.depth} and {g.depth}")
    return float(np.dot(psi.values, g.measure))


def variance(psi: Potential, g: GibbsApprox, method: str = "pressure", h: float = 1e-3,
             n_samples: int = 100_000, length: int = 64, seed: int = 0) -> float:
    if psi.depth != g.depth:
        raise DepthMismatch(f"depths {psi.depth} and {g.depth}")
    if method == "pressure":
        phi = g.potential
        m = mean(psi, g)
        p = []
        for step in (h, 0.0, -h):
            vals = psi.values - m
            vals *= step
            vals += phi.values
            lo, hi, _, _ = _perron(phi, False, PRESSURE_TOL, vals, consume=True)
            del vals
            p.append(0.5 * (lo + hi))
        return (p[0] - 2.0 * p[1] + p[2]) / (h * h)
    if method == "birkhoff":
        return birkhoff_variance(psi + (-mean(psi, g)), g, n_samples, length, seed)[0]
    raise InputError(f"unknown variance method {method!r}")


def _chain_tables(g: GibbsApprox):
    pot = g.potential
    graph, n = pot.graph, pot.depth
    order, off = graph.children_csr(n)
    q = np.exp(pot.values - pot.values.max()) * g.right_vec
    qs = q[order]
    grp = np.repeat(np.arange(len(off) - 1), np.diff(off))
    csum = np.cumsum(qs)
    start_tot = np.concatenate(([0.0], csum))[off[:-1]]
    tot = csum[off[1:] - 1] - start_tot
    within = (csum - start_tot[grp]) / tot[grp]
    within[off[1:] - 1] = 1.0
    keys = grp + within
    return order, keys


def sample_chain(g: GibbsApprox, n_samples: int, length: int, seed: int = 0) -> np.ndarray:
    """Stationary paths of the Gibbs Markov chain u -> v (v[:-1] == u[1:])."""
    if g.depth < 1:
        raise InputError("Birkhoff sampling needs depth >= 1")
    if g.right_vec is None:
        raise InputError("Gibbs data was built without its Perron vectors")
    rng = np.random.default_rng(seed)
    order, keys = _chain_tables(g)
    suffix = g.potential.graph.suffix[g.depth]
    cm = np.cumsum(g.measure)
    cm /= cm[-1]
    x = np.minimum(np.searchsorted(cm, rng.random(n_samples)), len(cm) - 1)
    out = np.empty((length, n_samples), dtype=np.int64)
    out[0] = x
    for t in range(1, length):
        p = suffix[x]
        pos = np.searchsorted(keys, p + rng.random(n_samples) * (1 - 1e-12) + 1e-13)
        pos = np.minimum(pos, len(keys) - 1)
        x = order[pos]
        out[t] = x
    return out


def birkhoff_variance(centred: Potential, g: GibbsApprox, n_samples: int = 100_000,
                      length: int = 64, seed: int = 0) -> tuple[float, float]:
    """(estimate, standard error) of Var from (sum of psi over a stationary path)^2 / length."""
    paths = sample_chain(g, n_samples, length, seed)
    sums = centred.values[paths].sum(axis=0)
    sq = sums * sums / length
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(n_samples))


def coboundary(graph: WordGraph, depth: int, u: np.ndarray) -> Potential:
    """psi(v) = u(v[:-1]) - u(v[1:]) for u on depth-(n-1) words; sums telescope along paths."""
    if len(u) != graph.count(depth - 1):
        raise DepthMismatch("u must live on depth n-1 words")
    return Potential(graph, depth, u[graph.parent[depth]] - u[graph.suffix[depth]])


# ---------------------------------------------------------------- pressure metric

@dataclass(frozen=True)
class PressureMetricResult:
    depth: int
    delta: float
    value: float
    variance: float
    denominator: float        # -integral of log S_0 against the Gibbs measure
    mean_residual: float      # |integral of psi| / sup|psi|
    psi_norm: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def pressure_metric(systems, depth: int, delta: float) -> PressureMetricResult:
    """Pressure metric of the tangent to a path from the systems at t = -delta, 0, +delta."""
    minus, zero, plus = systems
    for s in (minus, plus):
        if not np.array_equal(s.A, zero.A):
            raise CombinatoricsMismatch("path leaves the combinatorial class")
    graph = WordGraph(zero.A, depth)
    phi0 = potential_from_scaling(zero, depth, graph)
    # built one at a time: at depth 6 each potential holds tens of millions of values
    diff = potential_from_scaling(plus, depth, graph).values
    diff -= potential_from_scaling(minus, depth, graph).values
    diff /= 2.0 * delta
    psi = Potential(graph, depth, diff)
    g = gibbs(phi0, keep_vectors=False)
    mu = mean(psi, g)
    norm = psi.sup_norm
    var = variance(psi, g, "pressure") if norm > 0 else 0.0
    denom = -mean(phi0, g)
    return PressureMetricResult(depth, delta, var / denom, var, denom,
                                abs(mu) / norm if norm > 0 else 0.0, norm)
