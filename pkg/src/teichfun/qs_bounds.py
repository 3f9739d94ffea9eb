"""Explicit quasisymmetric bounds: zeta(M), M(K), lambda(K), and a dyadic sampler."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, InvalidK, InvalidM

SERIES_TOL = 1e-17
MAX_TERMS = 100_000


def _check_M(M: float) -> float:
    M = float(M)
    if not math.isfinite(M) or M < 1.0:
        raise InvalidM(f"M must be a finite real >= 1, got {M!r}")
    return M


def chi(M: float, k: int) -> float:
    """Per-level deviation increment: the larger of the two one-sided excursions."""
    M = _check_M(M)
    return max((M / (M + 1)) ** k - 0.5 ** k, 0.5 ** k - (1 / (M + 1)) ** k)


def zeta_partial_sums(M: float, n: int) -> np.ndarray:
    """delta_1..delta_n, the cumulative sums of chi_k."""
    M = _check_M(M)
    k = np.arange(1, n + 1, dtype=float)
    terms = np.maximum((M / (M + 1)) ** k - 0.5 ** k, 0.5 ** k - (1 / (M + 1)) ** k)
    return np.cumsum(terms)


def zeta(M: float) -> float:
    """sup_n of the partial sums of chi_k, by direct summation.

    chi_k >= 0, so the partial sums increase and the sup is the limit.  Summation stops
    once the dominant geometric term (M/(M+1))^k drops below SERIES_TOL; the neglected
    tail is then at most (M+1) * SERIES_TOL.
    """
    M = _check_M(M)
    if M == 1.0:
        return 0.0
    total, q = 0.0, M / (M + 1)
    for k in range(1, MAX_TERMS + 1):
        total += max(q ** k - 0.5 ** k, 0.5 ** k - (1 / (M + 1)) ** k)
        if q ** k < SERIES_TOL:
            break
    return total


def _branches(M: float, n: np.ndarray, second_base: float):
    first = M - 1 + 0.5 ** n - M * (M / (1 + M)) ** n
    second = 1 - 1 / M + (1 / M) * second_base ** n - 0.5 ** n
    return first, second


def zeta_closed_form(M: float, n_max: int = 2000) -> float:
    """Geometric-series closed form: max over n of the summed upper and lower excursions.

    The lower branch sums 2^-k - (1/(M+1))^k, so its geometric ratio is 1/(M+1).
    The n -> infinity limits (M - 1 and 1 - 1/M) are included in the max because the
    upper branch increases without attaining its sup.
    """
    M = _check_M(M)
    n = np.arange(1, n_max + 1, dtype=float)
    first, second = _branches(M, n, 1 / (M + 1))
    return float(max(first.max(), second.max(), M - 1, 1 - 1 / M))


def zeta_closed_form_printed(M: float, n_max: int = 2000) -> float:
    """The closed form with (1/M)^n in the lower branch, kept for comparison.

    It does not match the series: at M = 1 it gives 1 instead of 0.
    """
    M = _check_M(M)
    n = np.arange(1, n_max + 1, dtype=float)
    first, second = _branches(M, n, 1 / M)
    return float(max(first.max(), second.max(), M - 1, 1 - 1 / M))


def M_of_K(K: float) -> float:
    """Quasisymmetry constant of the boundary values of a K-quasiconformal map."""
    return math.exp(10.0 * (_check_K(K) - 1.0))


def lambda_bound(K: float) -> float:
    return math.exp(5.0 * (_check_K(K) - 1.0))


def _check_K(K: float) -> float:
    K = float(K)
    if not math.isfinite(K) or K < 1.0:
        raise InvalidK(f"K must be a finite real >= 1, got {K!r}")
    return K


# ---------------------------------------------------------------- dyadic sampler

@dataclass
class DyadicQsMap:
    depth: int
    values: np.ndarray       # H(i / 2^depth), i = 0..2^depth
    ratio_bound: float

    def __post_init__(self):
        v = self.values
        if len(v) != 2 ** self.depth + 1:
            raise InputError("values must cover every dyadic point of the depth")
        if v[0] != 0.0 or v[-1] != 1.0 or not np.all(np.diff(v) > 0):
            raise InputError("dyadic map must be strictly increasing and fix 0 and 1")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, len(self.values))

    @property
    def sup_deviation(self) -> float:
        return float(np.abs(self.values - self.grid).max())

    def midpoint_ratios(self) -> np.ndarray:
        """(H(mid) - H(left)) / (H(right) - H(mid)) over every dyadic interval of every level."""
        out = []
        for lev in range(1, self.depth + 1):
            step = 2 ** (self.depth - lev)
            h = self.values[::step]
            out.append((h[1:-1:2] - h[0:-2:2]) / (h[2::2] - h[1:-1:2]))
        return np.concatenate(out)


def _sample_batch(M: float, depth: int, size: int, mode: str, rng) -> np.ndarray:
    lo, hi = 1 / (M + 1), M / (M + 1)
    h = np.zeros((size, 2), dtype=float)
    h[:, 1] = 1.0
    for _ in range(depth):
        left, right = h[:, :-1], h[:, 1:]
        if mode == "uniform":
            r = rng.uniform(lo, hi, size=left.shape)
        elif mode == "extremal":
            r = np.where(rng.random(left.shape) < 0.5, lo, hi)
        else:
            raise InputError(f"unknown sampling mode {mode!r}")
        mid = left + r * (right - left)
        nxt = np.empty((size, 2 * h.shape[1] - 1), dtype=float)
        nxt[:, ::2] = h
        nxt[:, 1::2] = mid
        h = nxt
    return h


def sample_dyadic_qs_batch(M: float, depth: int, size: int, seed: int = 0,
                           mode: str = "uniform") -> np.ndarray:
    """size x (2^depth + 1) array of sampled dyadic maps (rows)."""
    M = _check_M(M)
    if depth < 1:
        raise InputError("depth must be >= 1")
    return _sample_batch(M, depth, size, mode, np.random.default_rng(seed))


def sample_dyadic_qs(M: float, depth: int, seed: int = 0, mode: str = "uniform") -> DyadicQsMap:
    """Recursive midpoint construction with every midpoint ratio in [1/M, M].

    mode 'uniform' draws the split fraction uniformly in [1/(M+1), M/(M+1)];
    'extremal' picks one of the two endpoints, which pushes the deviation toward the bound.
    """
    vals = sample_dyadic_qs_batch(M, depth, 1, seed, mode)[0]
    return DyadicQsMap(depth, vals, float(M))


def verify_sd_bound(h: DyadicQsMap) -> bool:
    return h.sup_deviation <= zeta(h.ratio_bound)


@dataclass(frozen=True)
class SdReport:
    M: float
    depth: int
    n_samples: int
    zeta: float
    max_deviation: float
    violations: int

    @property
    def ratio(self) -> float:
        return self.max_deviation / self.zeta if self.zeta > 0 else 0.0

    def to_dict(self) -> dict:
        return dict(self.__dict__, ratio=self.ratio)


def sd_harness(M: float, depth: int = 12, n_samples: int = 10_000, seed: int = 0,
               mode: str = "uniform", batch: int = 1000) -> SdReport:
    """Sample many dyadic maps and count those whose sup deviation exceeds zeta(M)."""
    M = _check_M(M)
    z = zeta(M)
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, 2 ** depth + 1)
    worst, bad, done = 0.0, 0, 0
    while done < n_samples:
        size = min(batch, n_samples - done)
        dev = np.abs(_sample_batch(M, depth, size, mode, rng) - grid).max(axis=1)
        worst = max(worst, float(dev.max()))
        bad += int((dev > z).sum())
        done += size
    return SdReport(M, depth, n_samples, z, worst, bad)
