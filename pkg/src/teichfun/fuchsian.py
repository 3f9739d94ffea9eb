"""Standard genus-g surface group from the regular 4g-gon, and twist deformations."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .errors import InvalidGenus, UnknownLabel, InputError
from .mobius import (
    IDENTITY, DiskMobius, axis, compose, conjugate, direction_at, translation_along,
)

REP_FORMAT = "teichfun.surface-group"
REP_VERSION = 1


def generator_labels(g: int) -> list[str]:
    out = []
    for j in range(1, g + 1):
        out += [f"a{j}", f"b{j}", f"a{j}inv", f"b{j}inv"]
    return out


def inverse_label(label: str) -> str:
    return label[:-3] if label.endswith("inv") else label + "inv"


def side_label(side: int) -> str:
    """Generator pairing side `side` (sides numbered ccw from the one bisected by angle 0).

    With this assignment the side pairings satisfy prod_j [a_j, b_j] = +-1."""
    j, r = divmod(side, 4)
    return [f"a{j + 1}inv", f"b{j + 1}", f"a{j + 1}", f"b{j + 1}inv"][r]


def paired_side(side: int) -> int:
    return side + 2 if side % 4 < 2 else side - 2


SIDE_CONVENTION = (
    "sides numbered counterclockwise, side 0 bisected by angle 0; "
    "side 4j is paired by a_{j+1}^-1, 4j+1 by b_{j+1}, 4j+2 by a_{j+1}, 4j+3 by b_{j+1}^-1; "
    "the map of side s carries side s onto side s+2 (s mod 4 < 2) or s-2"
)


@dataclass(frozen=True)
class Polygon:
    genus: int
    circumradius: float          # Euclidean radius of the vertex circle
    vertices: tuple              # complex, vertex k is the clockwise end of side k

    @property
    def n_sides(self) -> int:
        return 4 * self.genus

    def side(self, k: int) -> tuple[complex, complex]:
        n = self.n_sides
        return self.vertices[k % n], self.vertices[(k + 1) % n]

    def interior_angle(self, k: int = 0) -> float:
        n = self.n_sides
        v = self.vertices[k % n]
        d1 = direction_at(v, self.vertices[(k + 1) % n])
        d0 = direction_at(v, self.vertices[(k - 1) % n])
        x = abs(d1 - d0)
        return min(x, 2 * math.pi - x)


def _regular_polygon(g: int, r: float) -> Polygon:
    n = 4 * g
    verts = tuple(r * cmath.exp(1j * (2 * math.pi * k / n - math.pi / n)) for k in range(n))
    return Polygon(g, r, verts)


def solve_circumradius(g: int, tol: float = 1e-16) -> float:
    """Bisection on r so that the regular 4g-gon has vertex angle pi/(2g)."""
    target = math.pi / (2 * g)
    lo, hi = 1e-6, 1.0 - 1e-12
    # the vertex angle decreases monotonically from the Euclidean value to 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _regular_polygon(g, mid).interior_angle() > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SurfaceGroupRep:
    genus: int
    generators: tuple            # DiskMobius, ordered as generator_labels(genus)
    is_standard: bool = False
    history: tuple = ()          # ((kind, params...), ...)

    @property
    def labels(self) -> list[str]:
        return generator_labels(self.genus)

    def gen(self, label: str) -> DiskMobius:
        try:
            return self.generators[self.labels.index(label)]
        except ValueError:
            raise UnknownLabel(label) from None

    def side_map(self, side: int) -> DiskMobius:
        return self.gen(side_label(side % (4 * self.genus)))

    @property
    def relation_residual(self) -> float:
        p = IDENTITY
        for j in range(1, self.genus + 1):
            a, b = self.gen(f"a{j}"), self.gen(f"b{j}")
            p = p @ a @ b @ a.inverse() @ b.inverse()
        return min(max(abs(p.a - 1), abs(p.b)), max(abs(p.a + 1), abs(p.b)))

    @property
    def inverse_residual(self) -> float:
        worst = 0.0
        for j in range(1, self.genus + 1):
            for x in ("a", "b"):
                m = self.gen(f"{x}{j}") @ self.gen(f"{x}{j}inv")
                worst = max(worst, min(abs(m.a - 1), abs(m.a + 1)) + abs(m.b))
        return worst

    def to_dict(self) -> dict:
        return {
            "format": REP_FORMAT,
            "version": REP_VERSION,
            "genus": self.genus,
            "is_standard": self.is_standard,
            "side_convention": SIDE_CONVENTION,
            "generators": [dict(label=l, **m.to_dict()) for l, m in zip(self.labels, self.generators)],
            "history": [list(h) for h in self.history],
            "relation_residual": self.relation_residual,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurfaceGroupRep":
        if d.get("format") != REP_FORMAT or d.get("version") != REP_VERSION:
            raise InputError("unsupported representation document")
        g = int(d["genus"])
        by_label = {e["label"]: DiskMobius.from_dict(e) for e in d["generators"]}
        try:
            gens = tuple(by_label[l] for l in generator_labels(g))
        except KeyError as e:
            raise UnknownLabel(str(e)) from None
        return cls(g, gens, bool(d["is_standard"]), tuple(tuple(h) for h in d.get("history", [])))


@dataclass(frozen=True)
class Marking:
    """Label-preserving isomorphism source -> target."""
    source: SurfaceGroupRep
    target: SurfaceGroupRep
    generator_map: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.source.genus != self.target.genus:
            raise InputError("genus mismatch in marking")
        if not self.generator_map:
            object.__setattr__(self, "generator_map", {l: l for l in self.source.labels})

    def image(self, label: str) -> DiskMobius:
        return self.target.gen(self.generator_map[label])


def build_standard_group(g: int) -> tuple[SurfaceGroupRep, Polygon]:
    if not isinstance(g, int) or g < 2:
        raise InvalidGenus(f"genus must be an integer >= 2, got {g!r}")
    n = 4 * g
    poly = _regular_polygon(g, solve_circumradius(g))
    # side 0 lies on the circle orthogonal to the unit circle, centred on the positive axis
    v = poly.vertices[1]
    c = (abs(v) ** 2 + 1.0) / (2.0 * v.real)
    x0 = c - math.sqrt(c * c - 1.0)
    d = 2.0 * math.atanh(x0)
    side_maps = []
    for k in range(n):
        l = paired_side(k)
        tk, tl = 2 * math.pi * k / n, 2 * math.pi * l / n
        side_maps.append(compose(DiskMobius.rotation(tl - math.pi),
                                 compose(DiskMobius.real_translation(-2 * d), DiskMobius.rotation(-tk))))
    by_label = {side_label(k): side_maps[k] for k in range(n)}
    gens = tuple(by_label[l] for l in generator_labels(g))
    return SurfaceGroupRep(g, gens, True, ()), poly


def evaluate_word(rep: SurfaceGroupRep, word) -> DiskMobius:
    """Product of generators, leftmost factor outermost.  word: str or sequence of labels."""
    tokens = word.split() if isinstance(word, str) else list(word)
    m = IDENTITY
    for t in tokens:
        m = m @ rep.gen(t)
    return m


def relator_word(g: int) -> str:
    parts = []
    for j in range(1, g + 1):
        parts += [f"a{j}", f"b{j}", f"a{j}inv", f"b{j}inv"]
    return " ".join(parts)


def twist_deform(rep: SurfaceGroupRep, curve: str, t: float) -> tuple[SurfaceGroupRep, Marking]:
    """Twist along the axis of generator `curve` (an a_i): b_i -> b_i A_t."""
    if not (curve.startswith("a") and not curve.endswith("inv")):
        raise UnknownLabel(f"twist curve must be some a_i, got {curve!r}")
    a = rep.gen(curve)
    i = curve[1:]
    A = translation_along(axis(a), t)
    b = rep.gen(f"b{i}") @ A
    new = {l: m for l, m in zip(rep.labels, rep.generators)}
    new[f"b{i}"] = b
    new[f"b{i}inv"] = b.inverse()
    out = SurfaceGroupRep(rep.genus, tuple(new[l] for l in rep.labels), False,
                          rep.history + (("twist", curve, float(t)),))
    return out, Marking(rep, out)


def conjugate_rep(rep: SurfaceGroupRep, m: DiskMobius) -> tuple[SurfaceGroupRep, Marking]:
    gens = tuple(conjugate(x, m) for x in rep.generators)
    out = SurfaceGroupRep(rep.genus, gens, False,
                          rep.history + (("conjugate", *m.to_dict()["a"], *m.to_dict()["b"]),))
    return out, Marking(rep, out)

