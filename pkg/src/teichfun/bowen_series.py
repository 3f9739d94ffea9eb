"""Markov boundary map of the standard group: net, partition points, branches, A."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CombinatoricsMismatch, ConstructionFailure, DegenerateGeodesic, ExpansionFailure,
    MarkovFailure, NetIncomplete, NotTransitive, OrderViolation, UncoveredInterval,
)
from .fuchsian import (
    Marking, Polygon, SurfaceGroupRep, build_standard_group, paired_side, side_label,
)
from .mobius import (
    ANGLE_TOL, TAU, Arc, DiskMobius, angle_gap, ccw_dist, derivative_extrema_on_arcs,
    direction_at, geodesic_through, norm_angle, to_origin,
)

MARKOV_TOL = 1e-8


# ---------------------------------------------------------------- net

@dataclass(frozen=True)
class Tile:
    word: tuple          # generator labels, h = product left to right
    h: DiskMobius
    vertices: tuple      # images of the base vertices, same cyclic order


@dataclass(frozen=True)
class Net:
    polygon: Polygon
    tiles: tuple         # Tile, the first one is D itself
    V0: tuple
    V: tuple             # net vertices edge-adjacent to V0, not in V0
    max_word_length: int

    def tiles_at(self, z: complex, tol: float = ANGLE_TOL) -> list[Tile]:
        return [t for t in self.tiles if any(abs(v - z) < tol for v in t.vertices)]

    def edge_neighbours(self, z: complex, tol: float = ANGLE_TOL) -> list[complex]:
        out: list[complex] = []
        for t in self.tiles:
            vs = t.vertices
            n = len(vs)
            for i, v in enumerate(vs):
                if abs(v - z) < tol:
                    for w in (vs[i - 1], vs[(i + 1) % n]):
                        if not any(abs(w - u) < tol for u in out):
                            out.append(w)
        return out


def _near_any(z: complex, pts, tol: float = ANGLE_TOL) -> bool:
    return any(abs(z - p) < tol for p in pts)


def build_net(polygon: Polygon, rep: SurfaceGroupRep, cutoff: int | None = None) -> Net:
    """Tiles h(D) sharing at least a vertex with D, by breadth-first side crossing.

    The neighbour of h(D) across its side k is h gamma_{pair(k)} (D)."""
    g = polygon.genus
    n = 4 * g
    cutoff = 2 * g if cutoff is None else cutoff
    V0 = polygon.vertices
    crossing = [rep.side_map(paired_side(k)) for k in range(n)]
    crossing_label = [side_label(paired_side(k)) for k in range(n)]
    base = Tile((), DiskMobius.identity(), tuple(V0))
    tiles = [base]
    centres = [0j]
    frontier = [base]
    depth = 0
    while frontier and depth < cutoff:
        depth += 1
        nxt = []
        for t in frontier:
            for k in range(n):
                h = t.h @ crossing[k]
                c = h.apply_z(0j)
                if any(abs(c - c2) < ANGLE_TOL for c2 in centres):
                    continue
                verts = tuple(h.apply_z(v) for v in V0)
                if not any(_near_any(v, V0) for v in verts):
                    continue
                tile = Tile(t.word + (crossing_label[k],), h, verts)
                tiles.append(tile)
                centres.append(c)
                nxt.append(tile)
        frontier = nxt
    # completeness: 4g tiles (angle pi/(2g) each) around every base vertex
    for v in V0:
        cnt = sum(1 for t in tiles if _near_any(v, t.vertices))
        if abs(cnt * math.pi / (2 * g) - TAU) > 1e-6:
            raise NetIncomplete(f"base vertex {v} surrounded by {cnt} tiles with cutoff {cutoff}")
    V: list[complex] = []
    for t in tiles[1:]:
        vs = t.vertices
        for i, p in enumerate(vs):
            if _near_any(p, V0) or _near_any(p, V):
                continue
            if _near_any(vs[i - 1], V0) or _near_any(vs[(i + 1) % n], V0):
                V.append(p)
    return Net(polygon, tuple(tiles), tuple(V0), tuple(V), max(len(t.word) for t in tiles))


# ---------------------------------------------------------------- W

def geodesic_star(p: complex, q: complex, g: int) -> list[float]:
    """The 4g ideal endpoints of the 2g net geodesics through the vertex p.

    q is any vertex joined to p by a net edge; the geodesics through p meet at
    equal angles pi/(2g)."""
    psi = direction_at(p, q)
    mi = to_origin(p).inverse()
    step = math.pi / (2 * g)
    return [norm_angle(cmath.phase(mi.apply_z(cmath.exp(1j * (psi + k * step))))) for k in range(4 * g)]


def _star_at(net: Net, p: complex) -> list[float]:
    for t in net.tiles:
        for i, v in enumerate(t.vertices):
            if abs(v - p) < ANGLE_TOL:
                return geodesic_star(p, t.vertices[(i + 1) % len(t.vertices)], net.polygon.genus)
    raise ConstructionFailure(f"vertex {p} not in net")


def compute_W(net: Net, tol: float = ANGLE_TOL) -> tuple[np.ndarray, tuple]:
    """Sorted partition points and their provenance ((vertex index in V, direction k), ...)."""
    pts: list[float] = []
    prov: list[list] = []
    for pi, p in enumerate(net.V):
        star = _star_at(net, p)
        for i in range(len(star)):
            for j in range(i):
                if angle_gap(star[i], star[j]) < tol:
                    raise DegenerateGeodesic(f"endpoints collide at vertex {pi}")
        for k, a in enumerate(star):
            for idx, b in enumerate(pts):
                if angle_gap(a, b) < tol:
                    prov[idx].append((pi, k))
                    break
            else:
                pts.append(a)
                prov.append([(pi, k)])
    order = np.argsort(pts)
    W = np.array(pts)[order]
    provenance = tuple(tuple(prov[i]) for i in order)
    # base vertices contribute nothing new
    for i, q in enumerate(net.V0):
        for a in _star_at(net, q):
            if _nearest(W, a)[1] > tol:
                raise ConstructionFailure(f"W_q not contained in W for base vertex {i}")
    return W, provenance


def _nearest(W: np.ndarray, theta: float) -> tuple[int, float]:
    d = np.abs(np.mod(W - theta + math.pi, TAU) - math.pi)
    i = int(np.argmin(d))
    return i, float(d[i])


def nearest_indices(W: np.ndarray, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized nearest partition point (W in cyclic ccw order, not necessarily sorted)."""
    order = np.argsort(W)
    ws = W[order]
    t = np.mod(np.asarray(thetas, dtype=float), TAU)
    j = np.searchsorted(ws, t)
    lo = (j - 1) % len(ws)
    hi = j % len(ws)
    dlo = np.abs(np.mod(t - ws[lo] + math.pi, TAU) - math.pi)
    dhi = np.abs(np.mod(t - ws[hi] + math.pi, TAU) - math.pi)
    pick = np.where(dlo <= dhi, lo, hi)
    return order[pick], np.minimum(dlo, dhi)


# ---------------------------------------------------------------- J arcs

def side_arc(polygon: Polygon, s: int) -> Arc:
    """J_s: the arc (of length < pi) cut off by the geodesic through side s."""
    v0, v1 = polygon.side(s)
    gd = geodesic_through(v0, v1)
    mid = norm_angle(TAU * s / polygon.n_sides)
    arc = Arc(gd.p, gd.q) if Arc(gd.p, gd.q).contains(mid) else Arc(gd.q, gd.p)
    if not arc.length < math.pi:
        raise ConstructionFailure(f"J_{s} is not the smaller arc")
    return arc


def compute_Jv(net: Net, k: int, W: np.ndarray, tol: float = ANGLE_TOL) -> tuple[int, int]:
    """J(v) for the base vertex v = V0[k] (sides k and k-1 meet there).

    Returns (start index, end index) in W; the arc runs ccw from start to end."""
    poly = net.polygon
    n = poly.n_sides
    V0 = net.V0
    v = V0[k]
    beta = geodesic_through(v, V0[(k + 1) % n])
    beta2 = geodesic_through(V0[(k - 1) % n], v)
    nbrs = [u for u in net.edge_neighbours(v) if not _near_any(u, V0)]
    p = [u for u in nbrs if beta.contains_point(u)]
    p2 = [u for u in nbrs if beta2.contains_point(u)]
    if len(p) != 1 or len(p2) != 1:
        raise ConstructionFailure(f"vertex {k}: found {len(p)}, {len(p2)} continuation vertices")
    p, p2 = p[0], p2[0]
    tile = [t for t in net.tiles if all(_near_any(x, t.vertices) for x in (v, p, p2))]
    if len(tile) != 1:
        raise ConstructionFailure(f"vertex {k}: tile through v, p, p' not unique ({len(tile)})")
    vs = tile[0].vertices
    m = len(vs)
    iv = [i for i, x in enumerate(vs) if abs(x - v) < tol][0]
    a, b = vs[(iv - 1) % m], vs[(iv + 1) % m]
    if abs(a - p) < tol and abs(b - p2) < tol:
        q, q2 = vs[(iv - 2) % m], vs[(iv + 2) % m]
    elif abs(b - p) < tol and abs(a - p2) < tol:
        q, q2 = vs[(iv + 2) % m], vs[(iv - 2) % m]
    else:
        raise ConstructionFailure(f"vertex {k}: pattern q, p, v, p', q' not found")
    J, J2 = side_arc(poly, k), side_arc(poly, k - 1)
    overlap = Arc(J.start, J2.end)
    ends = []
    for x, y in ((p, q), (p2, q2)):
        gd = geodesic_through(x, y)
        inside = [e for e in (gd.p, gd.q) if overlap.contains_strict(e, 1e-10)]
        if len(inside) != 1:
            raise ConstructionFailure(f"vertex {k}: geodesic endpoint not in J_s cap J_s'")
        ends.append(inside[0])
    e0, e1 = sorted(ends, key=lambda e: ccw_dist(overlap.start, e))
    i0, d0 = _nearest(W, e0)
    i1, d1 = _nearest(W, e1)
    if max(d0, d1) > tol:
        raise ConstructionFailure(f"vertex {k}: J(v) endpoints not in W ({d0}, {d1})")
    arc = Arc(W[i0], W[i1])
    if any(arc.contains_strict(w, 1e-10) for w in W):
        raise ConstructionFailure(f"vertex {k}: J(v) contains further points of W")
    return i0, i1


# ---------------------------------------------------------------- system

@dataclass(frozen=True, eq=False)
class MarkovSystem:
    rep: SurfaceGroupRep
    W: np.ndarray                 # partition points, cyclic ccw order; interval i = [W[i], W[i+1])
    side: np.ndarray              # branch side per interval
    A: np.ndarray                 # transition matrix (uint8)
    image_lo: np.ndarray          # W index of branch_i(W[i])
    image_hi: np.ndarray          # W index of branch_i(W[i+1])
    lambda0: float
    depth_used: int
    n_mix: int
    markov_residual: float
    provenance: tuple = ()
    Jv: tuple = ()                # (start, end) W indices per base vertex
    alternatives: tuple = ()      # per interval: sides s with I_i inside J_s
    polygon: Polygon | None = None
    rho: tuple = ()               # sup of inverse-branch derivatives per depth (when computed)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for arr in (self.W, self.side, self.A, self.image_lo, self.image_hi):
            arr.setflags(write=False)

    @property
    def genus(self) -> int:
        return self.rep.genus

    @property
    def k(self) -> int:
        return len(self.W)

    @property
    def lengths(self) -> np.ndarray:
        return np.mod(np.roll(self.W, -1) - self.W, TAU)

    def interval(self, i: int) -> Arc:
        return Arc(self.W[i], self.W[(i + 1) % self.k])

    def branch_label(self, i: int) -> str:
        return side_label(int(self.side[i]))

    def side_map(self, s: int) -> DiskMobius:
        return self.rep.side_map(int(s))

    def branch(self, i: int) -> DiskMobius:
        return self.side_map(self.side[i])

    def branch_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """Disk-form coefficients (a, b) of the branch map on each interval."""
        if "coeffs" not in self._cache:
            maps = [self.side_map(s) for s in range(4 * self.genus)]
            a = np.array([maps[s].a for s in self.side])
            b = np.array([maps[s].b for s in self.side])
            self._cache["coeffs"] = (a, b)
        return self._cache["coeffs"]

    def inverse_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.branch_coeffs()
        return np.conj(a), -b

    def locate(self, theta: float) -> int:
        """Index of the half-open interval [W_i, W_{i+1}) containing theta."""
        d = np.mod(theta - self.W, TAU)
        return int(np.argmin(d))

    def f(self, theta: float) -> float:
        return self.branch(self.locate(theta)).apply_angle(theta)

    @property
    def codes(self):
        from .symbolic import all_codes
        if "codes" not in self._cache:
            self._cache["codes"] = all_codes(self)
        return self._cache["codes"]

    def summary(self) -> dict:
        return {
            "genus": self.genus,
            "k": self.k,
            "lambda0": self.lambda0,
            "depth_used": self.depth_used,
            "n_mix": self.n_mix,
            "markov_residual": self.markov_residual,
            "spectral_radius_A": float(max(abs(np.linalg.eigvals(self.A.astype(float))))),
        }


def branch_images(W: np.ndarray, side: np.ndarray, maps) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """W indices of the images of both endpoints of every interval, and the worst residual."""
    k = len(W)
    a = np.array([maps[s].a for s in side])
    b = np.array([maps[s].b for s in side])
    z0 = np.exp(1j * W)
    z1 = np.roll(z0, -1)
    im0 = np.angle((a * z0 + b) / (np.conj(b) * z0 + np.conj(a)))
    im1 = np.angle((a * z1 + b) / (np.conj(b) * z1 + np.conj(a)))
    lo, r0 = nearest_indices(W, im0)
    hi, r1 = nearest_indices(W, im1)
    return lo, hi, np.arange(k), float(max(r0.max(), r1.max()))


def transition_matrix(W: np.ndarray, side: np.ndarray, maps, tol: float = MARKOV_TOL):
    """A from the images of interval endpoints: row i covers W[lo]..W[hi] ccw."""
    k = len(W)
    lo, hi, _, res = branch_images(W, side, maps)
    if res > tol:
        raise MarkovFailure(f"branch image of a partition point misses W by {res:.3e}")
    A = np.zeros((k, k), dtype=np.uint8)
    for i in range(k):
        if lo[i] == hi[i]:
            raise MarkovFailure(f"degenerate image of interval {i}")
        span = (hi[i] - lo[i]) % k
        A[i, (lo[i] + np.arange(span)) % k] = 1
    return A, lo, hi, res


def check_transitive(A: np.ndarray, max_steps: int | None = None) -> tuple[bool, int, tuple | None]:
    """(transitive, n_mix, witness).  n_mix: least n with every pair joined by a path of length <= n."""
    k = A.shape[0]
    max_steps = k if max_steps is None else max_steps
    B = (A > 0).astype(float)          # 0/1 entries: float products are exact and use BLAS
    reach = np.eye(k, dtype=bool)
    power = np.eye(k)
    for n in range(1, max_steps + 1):
        power = ((power @ B) > 0).astype(float)
        reach |= power > 0
        if reach.all():
            return True, n, None
    bad = np.argwhere(~reach)[0]
    return False, -1, (int(bad[0]), int(bad[1]))


def _interval_min_derivative(W, maps, sides_for) -> np.ndarray:
    lengths = np.mod(np.roll(W, -1) - W, TAU)
    a = np.array([maps[s].a for s in sides_for])
    b = np.array([maps[s].b for s in sides_for])
    lo, _ = derivative_extrema_on_arcs(a, b, W, lengths)
    return lo


def assign_branches(W: np.ndarray, polygon: Polygon, Jv: list, rep: SurfaceGroupRep):
    """Branch side per interval: side s takes [start J(v_s), start J(v_{s+1})).

    Returns (side array, alternatives)."""
    k = len(W)
    n = polygon.n_sides
    side = -np.ones(k, dtype=np.int64)
    for s in range(n):
        i, stop = Jv[s][0], Jv[(s + 1) % n][0]
        while i != stop:
            if side[i] >= 0:
                raise UncoveredInterval(f"interval {i} claimed by sides {side[i]} and {s}")
            side[i] = s
            i = (i + 1) % k
    if (side < 0).any():
        raise UncoveredInterval(f"interval {int(np.argmin(side))} has no branch")
    Js = [side_arc(polygon, s) for s in range(n)]
    maps = [rep.side_map(s) for s in range(n)]
    alternatives = []
    for i in range(k):
        I = Arc(W[i], W[(i + 1) % k])
        alternatives.append(tuple(s for s in range(n) if Js[s].contains_arc(I, 1e-10)))
        if not Js[side[i]].contains_arc(I, -1e-10):
            raise ConstructionFailure(f"interval {i} not strictly inside J_{side[i]}")
    return side, tuple(alternatives), maps


def branch_choice_report(system: MarkovSystem) -> dict:
    """Compare the chosen branch with every admissible alternative by min derivative."""
    maps = [system.side_map(s) for s in range(4 * system.genus)]
    L = system.lengths
    worse, ties = 0, 0
    for i, alts in enumerate(system.alternatives):
        vals = {}
        for s in alts:
            lo, _ = derivative_extrema_on_arcs(np.array([maps[s].a]), np.array([maps[s].b]),
                                               np.array([system.W[i]]), np.array([L[i]]))
            vals[s] = float(lo[0])
        best = max(vals.values())
        chosen = vals[int(system.side[i])]
        if chosen < best * (1 - 1e-9):
            worse += 1
        elif sum(1 for v in vals.values() if v >= best * (1 - 1e-9)) > 1:
            ties += 1
    return {"intervals_with_alternatives": sum(len(a) > 1 for a in system.alternatives),
            "chosen_not_max": worse, "ties": ties}


def _expansion(W, side, maps, A, n_max: int):
    from .symbolic import WordGraph, inverse_branch_sup
    lam = float(_interval_min_derivative(W, maps, side).min())
    if lam > 1.0:
        return lam, 1, ()
    graph = WordGraph(A, n_max)
    rho = inverse_branch_sup(W, side, maps, graph, n_max)
    for n in range(1, n_max + 1):
        if rho[n] < 1.0:
            return lam, n, tuple(rho)
    raise ExpansionFailure(f"no expansion certificate up to depth {n_max} (rho={rho})")


def build_standard_system(g: int = 2, n_max: int = 4) -> MarkovSystem:
    rep, poly = build_standard_group(g)
    net = build_net(poly, rep)
    W, prov = compute_W(net)
    Jv = [compute_Jv(net, k, W) for k in range(poly.n_sides)]
    for i in range(len(Jv)):
        for j in range(i):
            a, b = Arc(W[Jv[i][0]], W[Jv[i][1]]), Arc(W[Jv[j][0]], W[Jv[j][1]])
            if a.contains_strict(b.midpoint, 0.0) or b.contains_strict(a.midpoint, 0.0):
                raise ConstructionFailure("J(v) arcs overlap")
    side, alts, maps = assign_branches(W, poly, Jv, rep)
    A, lo, hi, res = transition_matrix(W, side, maps)
    ok, n_mix, wit = check_transitive(A)
    if not ok:
        raise NotTransitive(f"no path {wit[0]} -> {wit[1]}")
    lam, depth, rho = _expansion(W, side, maps, A, n_max)
    return MarkovSystem(rep, W, side, A, lo, hi, lam, depth, n_mix, res,
                        prov, tuple(Jv), alts, poly, rho)


def conjugated_system(system0: MarkovSystem, marking: Marking, n_max: int = 4) -> MarkovSystem:
    """f_X = H f_0 H^-1 on the partition transported through preperiodic codes."""
    from .symbolic import transport_point
    target = marking.target
    Wx = np.array([transport_point(c, marking) for c in system0.codes])
    gaps = np.mod(np.roll(Wx, -1) - Wx, TAU)
    if gaps.min() < 1e-12 or abs(gaps.sum() - TAU) > 1e-9:
        raise OrderViolation("transported partition points are not in the original cyclic order")
    maps = [target.side_map(s) for s in range(4 * target.genus)]
    A, lo, hi, res = transition_matrix(Wx, system0.side, maps)
    if not np.array_equal(A, system0.A):
        raise CombinatoricsMismatch("transition matrix changed under transport")
    lam, depth, rho = _expansion(Wx, system0.side, maps, A, n_max)
    return MarkovSystem(target, Wx, system0.side.copy(), A, lo, hi, lam, depth, system0.n_mix, res,
                        system0.provenance, system0.Jv, system0.alternatives, None, rho)
