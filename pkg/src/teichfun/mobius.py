"""Isometries of the unit disk acting on the circle.

A map is stored in the disk-preserving form z -> (a z + b) / (conj(b) z + conj(a))
with |a|^2 - |b|^2 = 1.  Circle points are plain angles in [0, 2pi).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeodesic, InvalidMap, NotHyperbolic

TAU = 2.0 * math.pi
ANGLE_TOL = 1e-9
TRACE_TOL = 1e-12


def norm_angle(theta: float) -> float:
    t = math.fmod(theta, TAU)
    if t < 0.0:
        t += TAU
    # fmod can return TAU - tiny, which rounds to TAU on addition
    return 0.0 if t >= TAU else t


def ccw_dist(a: float, b: float) -> float:
    """Counterclockwise angular distance from a to b, in [0, 2pi)."""
    return norm_angle(b - a)


def angle_gap(a: float, b: float) -> float:
    """Unsigned angular distance between two circle points, in [0, pi]."""
    d = ccw_dist(a, b)
    return min(d, TAU - d)


@dataclass(frozen=True)
class CirclePoint:
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", norm_angle(float(self.angle)))

    @property
    def z(self) -> complex:
        return cmath.exp(1j * self.angle)

    @classmethod
    def from_complex(cls, z: complex) -> "CirclePoint":
        return cls(cmath.phase(z))


@dataclass(frozen=True)
class Arc:
    """Counterclockwise arc from start to end."""
    start: float
    end: float

    def __post_init__(self):
        object.__setattr__(self, "start", norm_angle(float(self.start)))
        object.__setattr__(self, "end", norm_angle(float(self.end)))

    @property
    def length(self) -> float:
        return ccw_dist(self.start, self.end)

    def contains(self, theta: float, tol: float = ANGLE_TOL) -> bool:
        """Closed containment with tolerance."""
        d = ccw_dist(self.start, theta)
        return d <= self.length + tol or d >= TAU - tol

    def contains_strict(self, theta: float, margin: float = 1e-10) -> bool:
        d = ccw_dist(self.start, theta)
        return margin < d < self.length - margin

    def contains_arc(self, other: "Arc", tol: float = ANGLE_TOL) -> bool:
        d = ccw_dist(self.start, other.start)
        if d >= TAU - tol:
            d = 0.0
        return d + other.length <= self.length + tol

    @property
    def midpoint(self) -> float:
        return norm_angle(self.start + 0.5 * self.length)


@dataclass(frozen=True)
class Geodesic:
    """Oriented geodesic between two ideal endpoints (angles), from p to q."""
    p: float
    q: float

    def __post_init__(self):
        p, q = norm_angle(float(self.p)), norm_angle(float(self.q))
        if angle_gap(p, q) < ANGLE_TOL:
            raise DegenerateGeodesic(f"endpoints coincide: {p} {q}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def contains_point(self, z: complex, tol: float = 1e-9) -> bool:
        """Whether the interior point z lies on the geodesic."""
        m = to_origin(z)
        u, v = m.apply_z(cmath.exp(1j * self.p)), m.apply_z(cmath.exp(1j * self.q))
        return abs(u + v) < tol


@dataclass(frozen=True)
class DiskMobius:
    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        det = abs(a) ** 2 - abs(b) ** 2
        if not det > 0.0:
            raise InvalidMap(f"not disk preserving: |a|^2-|b|^2 = {det}")
        s = math.sqrt(det)
        object.__setattr__(self, "a", a / s)
        object.__setattr__(self, "b", b / s)

    @classmethod
    def identity(cls) -> "DiskMobius":
        return cls(1.0, 0.0)

    @classmethod
    def rotation(cls, theta: float) -> "DiskMobius":
        return cls(cmath.exp(0.5j * theta), 0.0)

    @classmethod
    def real_translation(cls, t: float) -> "DiskMobius":
        """Translation by hyperbolic distance t along the real diameter towards +1."""
        return cls(math.cosh(0.5 * t), math.sinh(0.5 * t))

    @classmethod
    def from_matrix(cls, m) -> "DiskMobius":
        m = np.asarray(m, dtype=complex)
        a, b = m[0, 0], m[0, 1]
        scale = abs(a) + abs(b)
        if (abs(m[1, 0] - b.conjugate()) > 1e-9 * scale
                or abs(m[1, 1] - a.conjugate()) > 1e-9 * scale):
            # allow an overall sign / phase: m = c * [[a, b], [conj b, conj a]]
            raise InvalidMap("matrix is not in disk-preserving form")
        return cls(a, b)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.b.conjugate(), self.a.conjugate()]])

    @property
    def det(self) -> float:
        return abs(self.a) ** 2 - abs(self.b) ** 2

    @property
    def trace(self) -> float:
        return 2.0 * self.a.real

    def __matmul__(self, other: "DiskMobius") -> "DiskMobius":
        return compose(self, other)

    def inverse(self) -> "DiskMobius":
        return DiskMobius(self.a.conjugate(), -self.b)

    def apply_z(self, z: complex) -> complex:
        return (self.a * z + self.b) / (self.b.conjugate() * z + self.a.conjugate())

    def apply_angle(self, theta: float) -> float:
        return norm_angle(cmath.phase(self.apply_z(cmath.exp(1j * theta))))

    def derivative_angle(self, theta: float) -> float:
        return 1.0 / abs(self.b.conjugate() * cmath.exp(1j * theta) + self.a.conjugate()) ** 2

    def close_to(self, other: "DiskMobius", tol: float = 1e-10) -> bool:
        """Equality as maps (up to the sign of the matrix)."""
        d1 = max(abs(self.a - other.a), abs(self.b - other.b))
        d2 = max(abs(self.a + other.a), abs(self.b + other.b))
        return min(d1, d2) <= tol

    def to_dict(self) -> dict:
        return {"a": [self.a.real, self.a.imag], "b": [self.b.real, self.b.imag]}

    @classmethod
    def from_dict(cls, d: dict) -> "DiskMobius":
        """Inverse of to_dict.  Stored coefficients are kept bit for bit when already normalized."""
        a, b = complex(*d["a"]), complex(*d["b"])
        det = abs(a) ** 2 - abs(b) ** 2
        if not abs(det - 1.0) < 1e-12:
            return cls(a, b)
        m = object.__new__(cls)
        object.__setattr__(m, "a", a)
        object.__setattr__(m, "b", b)
        return m


IDENTITY = DiskMobius.identity()


def compose(m1: DiskMobius, m2: DiskMobius) -> DiskMobius:
    """m1 after m2."""
    a = m1.a * m2.a + m1.b * m2.b.conjugate()
    b = m1.a * m2.b + m1.b * m2.a.conjugate()
    return DiskMobius(a, b)


def inverse(m: DiskMobius) -> DiskMobius:
    return m.inverse()


def conjugate(m: DiskMobius, h: DiskMobius) -> DiskMobius:
    """h m h^-1."""
    return compose(compose(h, m), h.inverse())


def apply(m: DiskMobius, z: CirclePoint) -> CirclePoint:
    return CirclePoint.from_complex(m.apply_z(z.z))


def circle_derivative(m: DiskMobius, z: CirclePoint) -> float:
    return m.derivative_angle(z.angle)


def classify(m: DiskMobius, tol: float = TRACE_TOL) -> str:
    tr = abs(m.trace)
    if abs(tr - 2.0) <= tol:
        return "identity" if abs(m.b) <= tol else "parabolic"
    return "hyperbolic" if tr > 2.0 else "elliptic"


def translation_length(m: DiskMobius) -> float:
    if classify(m) != "hyperbolic":
        raise NotHyperbolic(f"trace {m.trace}")
    return 2.0 * math.acosh(abs(m.a.real))


def fixed_points(m: DiskMobius) -> tuple[CirclePoint, CirclePoint]:
    """(attracting, repelling) fixed points of a hyperbolic map."""
    if classify(m) != "hyperbolic":
        raise NotHyperbolic(f"trace {m.trace}")
    a, b = m.a, m.b
    if a.real < 0:
        a, b = -a, -b
    s = math.sqrt(a.real * a.real - 1.0)
    bc = b.conjugate()
    # at z = (i Im a + e s)/conj(b) we get conj(b) z + conj(a) = Re a + e s
    attr = (1j * a.imag + s) / bc
    rep = (1j * a.imag - s) / bc
    return CirclePoint.from_complex(attr), CirclePoint.from_complex(rep)


def axis(m: DiskMobius) -> Geodesic:
    """Axis oriented from the repelling to the attracting fixed point."""
    att, rep = fixed_points(m)
    return Geodesic(rep.angle, att.angle)


def translation_along(g: Geodesic, t: float) -> DiskMobius:
    """Translation by hyperbolic distance t along g, moving towards g.q."""
    beta = 0.5 * ccw_dist(g.p, g.q)
    c = g.p + beta
    s = math.asinh(math.cos(beta) / math.sin(beta))
    h = compose(DiskMobius.rotation(c), compose(DiskMobius.real_translation(s),
                                               DiskMobius.rotation(0.5 * math.pi)))
    return conjugate(DiskMobius.real_translation(t), h)


def isometric_circle(m: DiskMobius) -> tuple[complex, float]:
    if abs(m.b) < 1e-15:
        raise NotHyperbolic("isometric circle undefined for a rotation")
    return -m.a.conjugate() / m.b.conjugate(), 1.0 / abs(m.b)


def to_origin(p: complex) -> DiskMobius:
    """Disk automorphism z -> (z - p)/(1 - conj(p) z), normalized."""
    return DiskMobius(1.0, -p)


def geodesic_through(z1: complex, z2: complex) -> Geodesic:
    """Geodesic through two interior points, oriented from z1 towards z2."""
    m = to_origin(z1)
    w = m.apply_z(z2)
    if abs(w) < 1e-15:
        raise DegenerateGeodesic("coincident points")
    u = w / abs(w)
    mi = m.inverse()
    return Geodesic(cmath.phase(mi.apply_z(-u)), cmath.phase(mi.apply_z(u)))


def direction_at(p: complex, q: complex) -> float:
    """Angle of the tangent direction at p of the geodesic from p to q."""
    return cmath.phase(to_origin(p).apply_z(q))


# ---- vectorized helpers (arrays of disk-form coefficients) ----

def apply_arr(a, b, z):
    return (a * z + b) / (np.conj(b) * z + np.conj(a))


def compose_arr(a1, b1, a2, b2):
    return a1 * a2 + b1 * np.conj(b2), a1 * b2 + b1 * np.conj(a2)


def push_chord(a, b, z, dz):
    """Image of the chord (z, z + dz) under the disk-form map (a, b).

    Returns (z', dz') with dz' computed from the difference formula, so that
    tiny chords keep full relative accuracy."""
    bc, ac = np.conj(b), np.conj(a)
    d0 = bc * z + ac
    d1 = bc * (z + dz) + ac
    return (a * z + b) / d0, dz / (d0 * d1)


def chord_to_arc(dz):
    """Arc length subtended by a chord of the unit circle."""
    return 2.0 * np.arcsin(np.minimum(np.abs(dz) * 0.5, 1.0))


def derivative_extrema_on_arcs(a, b, start, length):
    """Exact (min, max) of |m'| over the ccw arcs [start, start + length].

    |conj(b) z + conj(a)|^2 = (|a| - |b|)^2 + 4|a||b| sin^2(d/2) with d the angular distance
    from z to phi = pi - arg(a conj(b)), so |m'| peaks at phi, bottoms out at the
    antipode, and is monotone in between."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    start = np.asarray(start, dtype=float)
    length = np.asarray(length, dtype=float)
    phi = math.pi - np.angle(a * np.conj(b))
    off = np.mod(phi - start, TAU)          # where phi falls along the arc
    d_end0 = np.minimum(off, TAU - off)
    off1 = np.mod(phi - (start + length), TAU)
    d_end1 = np.minimum(off1, TAU - off1)
    dmin = np.where(off <= length, 0.0, np.minimum(d_end0, d_end1))
    dmax = np.where(np.mod(off + math.pi, TAU) <= length, math.pi, np.maximum(d_end0, d_end1))
    na, nb = np.abs(a), np.abs(b)
    # (|a| - |b|)^2 written via |a|^2 - |b|^2 to avoid cancellation for long compositions
    gap = (np.abs(a) ** 2 - np.abs(b) ** 2) / (na + nb)

    def denom(d):
        return gap * gap + 4.0 * na * nb * np.sin(0.5 * d) ** 2

    return 1.0 / denom(dmax), 1.0 / denom(dmin)


def log_derivative_slope(a, b, theta):
    """d/dtheta log|m'(e^{i theta})| for disk-form (a, b)."""
    z = np.exp(1j * np.asarray(theta))
    w = np.conj(b) * z + np.conj(a)
    return 2.0 * np.imag(np.conj(w) * np.conj(b) * z) / np.abs(w) ** 2
