"""Limit laws (Rayleigh, chi with 2k degrees of freedom), empirical
distributions and goodness-of-fit distances."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import stats as sps

from .errors import InvalidParameterError


def rayleigh_cdf(x: float) -> float:
    """1 - exp(-x^2/2); negative arguments give 0 with a warning."""
    if x < 0:
        warnings.warn(f"rayleigh_cdf called with negative x={x}; returning 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return -math.expm1(-x * x / 2)


def _check_k(k) -> int:
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidParameterError(f"k must be a positive integer, got {k!r}")
    return int(k)


def chi2k_cdf(k: int, x: float) -> float:
    """CDF of the density 2^(1-k) s^(2k-1) e^(-s^2/2) / (k-1)!.

    With u = x^2/2 this is the regularized lower incomplete gamma P(k, u),
    i.e. 1 - e^(-u) sum_{j<k} u^j / j!.
    """
    k = _check_k(k)
    if x < 0:
        warnings.warn(f"chi2k_cdf called with negative x={x}; returning 0", RuntimeWarning, stacklevel=2)
        return 0.0
    if k == 1:
        return rayleigh_cdf(x)
    u = x * x / 2
    term = 1.0
    total = 1.0
    for j in range(1, k):
        term *= u / j
        total += term
    return max(0.0, 1.0 - math.exp(-u) * total)


def chi2k_pdf(k: int, s: float) -> float:
    k = _check_k(k)
    if s < 0:
        return 0.0
    return 2.0 ** (1 - k) * s ** (2 * k - 1) * math.exp(-s * s / 2) / math.factorial(k - 1)


@dataclass(frozen=True)
class ReferenceLaw:
    """``chi`` with parameter k (k=1 is the Rayleigh law), optionally scaled:
    X has this law when X / scale has the unscaled one."""

    k: int = 1
    scale: float = 1.0

    def __post_init__(self):
        _check_k(self.k)
        if not self.scale > 0:
            raise InvalidParameterError("scale must be positive")

    @classmethod
    def rayleigh(cls, scale: float = 1.0) -> "ReferenceLaw":
        return cls(1, scale)

    @property
    def name(self) -> str:
        return "rayleigh" if self.k == 1 else f"chi_{self.k}"

    def cdf(self, x) -> np.ndarray | float:
        if np.ndim(x) == 0:
            return chi2k_cdf(self.k, max(float(x), 0.0) / self.scale)
        u = np.maximum(np.asarray(x, dtype=float), 0.0) / self.scale
        u = u * u / 2
        term = np.ones_like(u)
        total = np.ones_like(u)
        for j in range(1, self.k):
            term = term * u / j
            total += term
        if self.k == 1:
            return -np.expm1(-u)
        return np.maximum(0.0, 1.0 - np.exp(-u) * total)

    def pdf(self, x: float) -> float:
        return chi2k_pdf(self.k, x / self.scale) / self.scale

    def moment(self, order: int) -> float:
        """Moment by numerical quadrature of the density."""
        val, _ = integrate.quad(lambda s: s ** order * self.pdf(s), 0, math.inf, epsabs=1e-13, epsrel=1e-12)
        return val

    def mass(self) -> float:
        val, _ = integrate.quad(self.pdf, 0, math.inf, epsabs=1e-13, epsrel=1e-12)
        return val


class EmpiricalDistribution:
    """Sorted sample with its empirical CDF."""

    def __init__(self, samples):
        a = np.sort(np.asarray(samples, dtype=float).ravel())
        if a.size == 0:
            raise InvalidParameterError("an empirical distribution needs at least one sample")
        self.samples = a

    def __len__(self) -> int:
        return self.samples.size

    @property
    def N(self) -> int:
        return self.samples.size

    def cdf(self, x) -> np.ndarray:
        return np.searchsorted(self.samples, x, side="right") / self.N

    def moment(self, order: int) -> float:
        return float(np.mean(self.samples ** order))


def _as_empirical(samples) -> EmpiricalDistribution:
    return samples if isinstance(samples, EmpiricalDistribution) else EmpiricalDistribution(samples)


def ks_distance(samples, law: ReferenceLaw) -> float:
    """sup |F_N - F| evaluated from both sides at the sample points."""
    emp = _as_empirical(samples)
    x = emp.samples
    F = law.cdf(x)
    # ties: the upper empirical value at a repeated point is the last one
    upper = np.searchsorted(x, x, side="right") / emp.N
    lower = np.searchsorted(x, x, side="left") / emp.N
    return float(max(np.max(upper - F), np.max(F - lower), 0.0))


def ks_two_sample(a, b) -> float:
    return float(sps.ks_2samp(np.asarray(a), np.asarray(b)).statistic)


def moment_check(samples, law: ReferenceLaw, order: int) -> float:
    """|empirical moment - law moment| / law moment for order 1 or 2."""
    if order not in (1, 2):
        raise InvalidParameterError("moment order must be 1 or 2")
    emp = _as_empirical(samples)
    ref = law.moment(order)
    return abs(emp.moment(order) - ref) / ref


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(x, 0)) - float(q.get(x, 0))) for x in keys)


def chi_square(observed, expected) -> tuple[float, int, float]:
    """(statistic, df, p-value) for counts against expected counts."""
    o = np.asarray(observed, dtype=float)
    e = np.asarray(expected, dtype=float)
    stat = float(((o - e) ** 2 / e).sum())
    df = len(o) - 1
    return stat, df, float(sps.chi2.sf(stat, df)) if df > 0 else 1.0


def cdf_table(samples, law: ReferenceLaw) -> np.ndarray:
    """Rows (sample, empirical CDF, reference CDF) for plotting."""
    emp = _as_empirical(samples)
    x = emp.samples
    return np.column_stack([x, emp.cdf(x), law.cdf(x)])
