"""Subshift of finite type, dual words, cylinder arcs, and transport of partition points.

Words are stored as forward strings i_0 ... i_n.  A dual word written
j_n ... j_0 has the same symbols in the same written order, so a single tuple
serves both readings: the forward shift drops the first symbol, the dual shift
drops the last one.  The cylinder of a word w is I_w = g_{i_0}(...g_{i_{n-1}}(I_{i_n})),
where g_i is the inverse of the branch on I_i.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CodeFailure, EmptyWord, Inadmissible, NotHyperbolic
from .mobius import (
    TAU, Arc, DiskMobius, IDENTITY, chord_to_arc, classify, compose_arr,
    derivative_extrema_on_arcs, fixed_points, push_chord,
)


# ---------------------------------------------------------------- words

def _check(word) -> tuple:
    w = tuple(int(x) for x in word)
    if not w:
        raise EmptyWord("empty word")
    return w


def is_admissible(A: np.ndarray, word) -> bool:
    w = _check(word)
    k = A.shape[0]
    if any(x < 0 or x >= k for x in w):
        return False
    return all(A[w[i], w[i + 1]] for i in range(len(w) - 1))


def require_admissible(A: np.ndarray, word) -> tuple:
    w = _check(word)
    if not is_admissible(A, w):
        raise Inadmissible(f"word {w} is not admissible")
    return w


def shift(word) -> tuple:
    """Forward shift: drop the leftmost symbol."""
    w = _check(word)
    if len(w) < 2:
        raise EmptyWord("shift of a one-symbol word")
    return w[1:]


def dual_shift(word) -> tuple:
    """Dual shift: drop the rightmost symbol."""
    w = _check(word)
    if len(w) < 2:
        raise EmptyWord("dual shift of a one-symbol word")
    return w[:-1]


def count_words(A: np.ndarray, n: int) -> int:
    """Number of admissible words with n+1 symbols (exact integer arithmetic)."""
    B = A.astype(object)
    v = np.ones(A.shape[0], dtype=object)
    for _ in range(n):
        v = B @ v
    return int(v.sum())


def random_words(A: np.ndarray, n_words: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random admissible paths (first symbol uniform, then uniform successor)."""
    k = A.shape[0]
    succ = [np.flatnonzero(A[i]) for i in range(k)]
    out = np.empty((n_words, length), dtype=np.int64)
    out[:, 0] = rng.integers(0, k, n_words)
    for t in range(1, length):
        prev = out[:, t - 1]
        cnt = np.array([len(succ[p]) for p in prev])
        pick = (rng.random(n_words) * cnt).astype(np.int64)
        out[:, t] = [succ[p][c] for p, c in zip(prev, pick)]
    return out


def random_prefixes(A: np.ndarray, tails: np.ndarray, extra: int, rng: np.random.Generator) -> np.ndarray:
    """Extend each row of `tails` to the left by `extra` random admissible symbols."""
    k = A.shape[0]
    pred = [np.flatnonzero(A[:, j]) for j in range(k)]
    cols = [tails]
    cur = tails[:, 0]
    for _ in range(extra):
        cnt = np.array([len(pred[c]) for c in cur])
        pick = (rng.random(len(cur)) * cnt).astype(np.int64)
        cur = np.array([pred[c][p] for c, p in zip(cur, pick)], dtype=np.int64)
        cols.insert(0, cur[:, None])
    return np.hstack(cols)


# ---------------------------------------------------------------- word graph

class WordGraph:
    """All admissible words up to a depth, generated level by level by prepending.

    Level n holds the words of n+1 symbols.  For each level n >= 1:
      suffix[n][x]  index at level n-1 of w[1:]
      parent[n][x]  index at level n-1 of w[:-1]
    and first[n], last[n] are the end symbols.  The words i.u for fixed u occupy
    the contiguous block start[n][u] .. start[n][u] + npred[u_0]."""

    def __init__(self, A: np.ndarray, depth: int):
        A = np.asarray(A)
        self.A = A
        self.k = k = A.shape[0]
        self.depth = depth
        self.pred_ptr = np.zeros(k + 1, dtype=np.int64)
        preds = [np.flatnonzero(A[:, j]) for j in range(k)]
        self.pred_ptr[1:] = np.cumsum([len(p) for p in preds])
        self.pred_flat = np.concatenate(preds).astype(np.int64)
        self.npred = np.diff(self.pred_ptr)
        self.rank = -np.ones((k, k), dtype=np.int64)   # rank[i, j]: position of i among preds of j
        for j, p in enumerate(preds):
            self.rank[p, j] = np.arange(len(p))
        ar = np.arange(k, dtype=np.int64)
        self.first = [ar.astype(np.int16)]
        self.last = [ar.astype(np.int16)]
        self.suffix = [None]
        self.parent = [None]
        self.start = [None]
        for n in range(1, depth + 1):
            self._grow()

    def _grow(self):
        n = len(self.first)
        itype = np.int64 if self.count(n - 1) * self.k > 2**31 - 1 else np.int32
        f_prev = self.first[n - 1].astype(np.int64)
        cnt = self.npred[f_prev]
        start = np.zeros(len(cnt), dtype=np.int64)
        np.cumsum(cnt[:-1], out=start[1:])
        total = int(cnt.sum())
        suffix = np.repeat(np.arange(len(cnt), dtype=itype), cnt)
        pos = np.arange(total, dtype=np.int64) - np.repeat(start, cnt)
        first = self.pred_flat[np.repeat(self.pred_ptr[f_prev], cnt) + pos]
        if n == 1:
            parent = first.astype(itype)
        else:
            parent = (self.start[n - 1][self.parent[n - 1][suffix]] + pos).astype(itype)
        self.start.append(start)
        self.suffix.append(suffix)
        self.parent.append(parent)
        self.first.append(first.astype(np.int16))
        self.last.append(self.last[n - 1][suffix])

    def count(self, n: int) -> int:
        return len(self.first[n])

    def words(self, n: int) -> np.ndarray:
        """(count, n+1) array of the level-n words in storage order."""
        out = np.empty((self.count(n), n + 1), dtype=np.int16)
        idx = np.arange(self.count(n))
        for level in range(n, -1, -1):
            out[:, n - level] = self.first[level][idx]
            if level > 0:
                idx = self.suffix[level][idx]
        return out

    def index_of(self, word) -> int:
        w = require_admissible(self.A, word)
        n = len(w) - 1
        if n > self.depth:
            raise Inadmissible(f"word longer than graph depth {self.depth}")
        idx = w[-1]
        for level in range(1, n + 1):
            i, j = w[n - level], w[n - level + 1]
            idx = int(self.start[level][idx] + self.rank[i, j])
        return idx

    def children_csr(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Level-n words grouped by parent (w[:-1]): (order, offsets into order)."""
        par = self.parent[n]
        order = np.argsort(par, kind="stable")
        off = np.zeros(self.count(n - 1) + 1, dtype=np.int64)
        np.cumsum(np.bincount(par, minlength=self.count(n - 1)), out=off[1:])
        return order, off


# ---------------------------------------------------------------- cylinders

def _interval_chords(W: np.ndarray):
    k = len(W)
    L = np.mod(np.roll(W, -1) - W, TAU)
    z = np.exp(1j * W)
    dz = z * (np.exp(1j * L) - 1.0)
    return z, dz, L


def cylinder_lengths(system, graph: WordGraph, depth: int | None = None,
                     chunk: int = 1 << 21) -> list[np.ndarray]:
    """Arc lengths |I_w| for all levels 0..depth, aligned with the graph storage order."""
    depth = graph.depth if depth is None else depth
    ia, ib = system.inverse_coeffs()
    z, dz, L0 = _interval_chords(system.W)
    out = [L0]
    for n in range(1, depth + 1):
        suf, first = graph.suffix[n], graph.first[n]
        cnt = len(suf)
        keep = n < depth
        nz = np.empty(cnt, dtype=complex) if keep else None
        ndz = np.empty(cnt, dtype=complex) if keep else None
        lens = np.empty(cnt)
        for s in range(0, cnt, chunk):
            e = min(cnt, s + chunk)
            u = suf[s:e]
            f = first[s:e]
            zz, dd = push_chord(ia[f], ib[f], z[u], dz[u])
            lens[s:e] = chord_to_arc(dd)
            if keep:
                nz[s:e], ndz[s:e] = zz, dd
        out.append(lens)
        z, dz = nz, ndz
    return out


def word_arcs(system, words: np.ndarray):
    """Cylinder chords for a batch of equal-length words: (z_start, dz, length)."""
    words = np.atleast_2d(np.asarray(words, dtype=np.int64))
    ia, ib = system.inverse_coeffs()
    z0, dz0, _ = _interval_chords(system.W)
    last = words[:, -1]
    z, dz = z0[last], dz0[last]
    for c in range(words.shape[1] - 2, -1, -1):
        f = words[:, c]
        z, dz = push_chord(ia[f], ib[f], z, dz)
    return z, dz, chord_to_arc(dz)


def cylinder_interval(system, word, precision: int | None = None) -> Arc:
    """Arc I_w with endpoints from the composed inverse branches.

    precision: mantissa bits for an mpmath evaluation (None = binary64)."""
    w = require_admissible(system.A, word)
    if precision is None:
        z, dz, _ = word_arcs(system, np.array([w]))
        return Arc(float(np.angle(z[0])), float(np.angle(z[0] + dz[0])))
    s, e = _mp_endpoints(system, w, precision)
    return Arc(s, e)


def cylinder_length(system, word, precision: int | None = None) -> float:
    w = require_admissible(system.A, word)
    if precision is None:
        return float(word_arcs(system, np.array([w]))[2][0])
    import mpmath as mp
    with mp.workprec(precision):
        z, dz = _mp_chord(system, w)
        return float(2 * mp.asin(abs(dz) / 2))


def _mp_chord(system, w):
    import mpmath as mp
    W = system.W
    k = len(W)
    j = w[-1]
    t0 = mp.mpf(float(W[j]))
    L = mp.mpf(float(np.mod(W[(j + 1) % k] - W[j], TAU)))
    z = mp.expj(t0)
    dz = z * (mp.expj(L) - 1)
    for i in reversed(w[:-1]):
        m = system.branch(i).inverse()
        a, b = mp.mpc(m.a), mp.mpc(m.b)
        d0 = mp.conj(b) * z + mp.conj(a)
        d1 = mp.conj(b) * (z + dz) + mp.conj(a)
        z, dz = (a * z + b) / d0, dz / (d0 * d1)
    return z, dz


def _mp_endpoints(system, w, precision):
    import mpmath as mp
    with mp.workprec(precision):
        z, dz = _mp_chord(system, w)
        return float(mp.arg(z)), float(mp.arg(z + dz))


@dataclass(frozen=True)
class PointEstimate:
    angle: float
    radius: float      # the true point lies within this angular distance


def pi_point(system, word) -> PointEstimate:
    """Midpoint of I_w as an enclosure of the point coded by any extension of w."""
    arc = cylinder_interval(system, word)
    return PointEstimate(arc.midpoint, 0.5 * arc.length)


# ---------------------------------------------------------------- expansion data

def inverse_branch_sup(W, side, maps, graph: WordGraph, depth: int) -> list[float]:
    """rho[n] = max over level-n words u of sup |g_u'| on I_{last(u)} (rho[0] = 1).

    g_u is the composition of n inverse branches; rho[n] < 1 certifies that every
    depth-n iterate expands."""
    return _inverse_branch_scan(W, side, maps, graph, depth)[0]


def distortion_scan(system, graph: WordGraph, depth: int):
    """(rho list, worst ratio max|g'|/min|g'| per level) for the system's branches."""
    maps = [system.side_map(s) for s in range(4 * system.genus)]
    return _inverse_branch_scan(system.W, system.side, maps, graph, depth)


def _inverse_branch_scan(W, side, maps, graph, depth):
    a = np.array([maps[s].a for s in side])
    b = np.array([maps[s].b for s in side])
    ia, ib = np.conj(a), -b
    L = np.mod(np.roll(W, -1) - W, TAU)
    ga, gb = np.ones(len(W), dtype=complex), np.zeros(len(W), dtype=complex)
    rho, ratio = [1.0], [1.0]
    for n in range(1, depth + 1):
        suf, first, last = graph.suffix[n], graph.first[n], graph.last[n]
        ga, gb = compose_arr(ia[first], ib[first], ga[suf], gb[suf])
        lo, hi = derivative_extrema_on_arcs(ga, gb, W[last], L[last])
        rho.append(float(hi.max()))
        ratio.append(float((hi / lo).max()))
    return rho, ratio


# ---------------------------------------------------------------- codes and transport

@dataclass(frozen=True)
class PreperiodicCode:
    point_index: int
    point: float
    preperiod: tuple          # branch labels, applied first to last
    period: tuple
    residual: float
    alternative: tuple = ()   # the other one-sided branch choice at each step, if also valid

    def to_dict(self) -> dict:
        return {"point_index": self.point_index, "point": self.point,
                "preperiod": list(self.preperiod), "period": list(self.period),
                "residual": self.residual, "alternative": list(self.alternative)}

    @classmethod
    def from_dict(cls, d: dict) -> "PreperiodicCode":
        return cls(int(d["point_index"]), float(d["point"]), tuple(d["preperiod"]),
                   tuple(d["period"]), float(d["residual"]), tuple(d.get("alternative", ())))


def _compose_labels(maps_by_label, labels) -> DiskMobius:
    """Composition applying labels[0] first."""
    m = IDENTITY
    for l in labels:
        m = maps_by_label(l) @ m
    return m


def code_of_partition_point(system0, index: int, tol: float = 1e-9) -> PreperiodicCode:
    from .fuchsian import side_label
    k = system0.k
    W = system0.W
    seen: dict[int, int] = {}
    path: list[int] = []
    labels: list[str] = []
    alts: list[str] = []
    c = index
    while c not in seen:
        seen[c] = len(path)
        path.append(c)
        # right-hand branch: interval c starts at W[c]; left-hand: interval c-1 ends there
        right, left = c, (c - 1) % k
        cand = []
        for i, img in ((right, system0.image_lo[right]), (left, system0.image_hi[left])):
            m = system0.branch(i)
            res = abs(((m.apply_angle(W[c]) - W[img]) + math.pi) % TAU - math.pi)
            cand.append((res, i, int(img)))
        cand.sort()
        res, i, img = cand[0]
        if res > 1e-8:
            raise CodeFailure(f"orbit of W[{index}] leaves W (residual {res:.3e})")
        labels.append(side_label(int(system0.side[i])))
        other = cand[1]
        alts.append(side_label(int(system0.side[other[1]])) if other[0] <= 1e-8 else "")
        c = img
    m = seen[c]
    pre, per = tuple(labels[:m]), tuple(labels[m:])
    F = _compose_labels(system0.rep.gen, per)
    if classify(F) != "hyperbolic":
        raise CodeFailure(f"period word of W[{index}] is not hyperbolic")
    _, rep = fixed_points(F)
    residual = abs(((rep.angle - W[c]) + math.pi) % TAU - math.pi)
    if residual > tol:
        raise CodeFailure(f"code of W[{index}] does not close up (residual {residual:.3e})")
    return PreperiodicCode(index, float(W[index]), pre, per, float(residual), tuple(alts))


def all_codes(system0) -> tuple:
    return tuple(code_of_partition_point(system0, i) for i in range(system0.k))


def transport_point(code: PreperiodicCode, marking) -> float:
    """H(w): pull the repelling fixed point of the transported period word back
    through the transported preperiod, one inverse branch at a time."""
    F = _compose_labels(marking.image, code.period)
    if classify(F) != "hyperbolic":
        raise NotHyperbolic("transported period composition is not hyperbolic")
    _, rep = fixed_points(F)
    theta = rep.angle
    for l in reversed(code.preperiod):
        theta = marking.image(l).inverse().apply_angle(theta)
    return theta
