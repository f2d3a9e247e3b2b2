"""Exact samplers: uniform Cayley trees, uniform ordered forests and
conditioned critical Galton-Watson trees."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InvalidSizeError, UnattainableSizeError, UnsupportedLawError
from .rng import as_generator
from .trees import OrderedForest, RootedTree

_KIND_CODE = {"poisson1": 0, "geometric": 1, "binary": 2}


@dataclass(frozen=True)
class OffspringLaw:
    """Critical offspring law.

    ``pmf`` is an exact map {i: xi_i} for the finitely supported kinds and
    None for poisson1.  Construction fails unless the mean is exactly 1 and
    the variance is positive.
    """

    kind: str
    param: Fraction | None = None
    pmf: tuple[tuple[int, Fraction], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("poisson1", "geometric", "binary", "table"):
            raise UnsupportedLawError(f"unknown offspring law {self.kind!r}")
        if self.kind in ("geometric", "binary"):
            p = self.param
            if p is None or not (0 < p < 1):
                raise UnsupportedLawError(f"{self.kind} needs a parameter in (0, 1)")
        if self.kind == "table":
            if not self.pmf:
                raise UnsupportedLawError("table law needs a pmf")
            if any(i < 0 or q < 0 for i, q in self.pmf):
                raise UnsupportedLawError("table entries must be nonnegative")
            if sum(q for _, q in self.pmf) != 1:
                raise UnsupportedLawError("table probabilities must sum to 1")
        if self.mean != 1:
            raise UnsupportedLawError(f"offspring mean is {self.mean}, not 1")
        if not (self.variance > 0):
            raise UnsupportedLawError("offspring variance must be positive")

    @classmethod
    def poisson1(cls) -> "OffspringLaw":
        return cls("poisson1")

    @classmethod
    def geometric(cls, p=Fraction(1, 2)) -> "OffspringLaw":
        """P(i) = (1-p)^i p on {0, 1, 2, ...}; critical only at p = 1/2."""
        return cls("geometric", Fraction(p))

    @classmethod
    def binary(cls, p=Fraction(1, 2)) -> "OffspringLaw":
        """P(2) = p, P(0) = 1 - p; critical only at p = 1/2."""
        return cls("binary", Fraction(p))

    @classmethod
    def table(cls, pmf: dict) -> "OffspringLaw":
        items = tuple(sorted((int(i), Fraction(q)) for i, q in pmf.items() if Fraction(q) != 0))
        return cls("table", None, items)

    @classmethod
    def parse(cls, text: str, base_dir: str | Path | None = None) -> "OffspringLaw":
        """Parse ``poisson1``, ``geom:p``, ``binary:p`` or ``table:FILE``.

        A table file holds one ``i probability`` pair per line; probabilities
        may be written as fractions such as ``1/4``.
        """
        name, _, arg = text.partition(":")
        name = name.strip().lower()
        if name == "poisson1":
            return cls.poisson1()
        if name in ("geom", "geometric"):
            return cls.geometric(Fraction(arg) if arg else Fraction(1, 2))
        if name == "binary":
            return cls.binary(Fraction(arg) if arg else Fraction(1, 2))
        if name == "table":
            path = Path(arg)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            pmf = {}
            for line in path.read_text().splitlines():
                line = line.split("#", 1)[0].strip()
                if line:
                    i, q = line.split()
                    pmf[int(i)] = pmf.get(int(i), Fraction(0)) + Fraction(q)
            return cls.table(pmf)
        raise UnsupportedLawError(f"unknown offspring law {text!r}")

    @property
    def mean(self) -> Fraction:
        if self.kind == "poisson1":
            return Fraction(1)
        if self.kind == "geometric":
            return (1 - self.param) / self.param
        if self.kind == "binary":
            return 2 * self.param
        return sum((i * q for i, q in self.pmf), Fraction(0))

    @property
    def variance(self) -> Fraction:
        """Second factorial moment sum i(i-1) xi_i, equal to the variance at mean 1."""
        if self.kind == "poisson1":
            return Fraction(1)
        if self.kind == "geometric":
            q = 1 - self.param
            return 2 * q * q / (self.param * self.param)
        if self.kind == "binary":
            return 2 * self.param
        return sum((i * (i - 1) * q for i, q in self.pmf), Fraction(0))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def support_gcd(self) -> int:
        """gcd of the positive support points (1 for unbounded-support laws)."""
        if self.kind in ("poisson1", "geometric"):
            return 1
        if self.kind == "binary":
            return 2
        g = 0
        for i, _ in self.pmf:
            g = math.gcd(g, i)
        return g

    def describe(self) -> str:
        if self.kind == "poisson1":
            return "poisson1"
        if self.kind == "geometric":
            return f"geom:{self.param}"
        if self.kind == "binary":
            return f"binary:{self.param}"
        return "table:" + ",".join(f"{i}={q}" for i, q in self.pmf)


def variance_of(law: OffspringLaw) -> Fraction:
    return law.variance


def _check_size(n) -> int:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidSizeError(f"size must be a positive integer, got {n!r}")
    return int(n)


def cayley_parent(n: int, rng) -> tuple[np.ndarray, int]:
    """Parent array and root of a uniform Cayley tree (fast path)."""
    n = _check_size(n)
    return kernels.cayley_parent(n, as_generator(rng))


def sample_cayley(n: int, rng) -> RootedTree:
    parent, _ = cayley_parent(n, rng)
    return RootedTree.from_array(parent, validate=False)


def sample_ordered_forest(n: int, rng) -> OrderedForest:
    """Uniform ordered forest: a uniform tree with an independent uniform
    distinguished vertex, pushed through the path-cutting bijection."""
    from .dynamics import tree_to_forest

    gen = as_generator(rng)
    t = sample_cayley(n, gen)
    v = int(gen.integers(1, n + 1))
    return tree_to_forest(t, v)


def is_attainable(law: OffspringLaw, n: int) -> bool:
    """Quick necessary condition for P(total progeny = n) > 0."""
    if n == 1:
        return any(i == 0 for i, _ in law.pmf) if law.kind == "table" else True
    return (n - 1) % law.support_gcd() == 0


def nearest_attainable(law: OffspringLaw, n: int) -> int:
    """Closest size to n passing the attainability check; ties go up."""
    for d in range(n):
        for m in (n + d, n - d):
            if m >= 1 and is_attainable(law, m):
                return m
    raise UnattainableSizeError(f"no attainable size near {n}")


def _table_counts(law: OffspringLaw, n: int, gen: np.random.Generator, budget: int) -> np.ndarray:
    values = np.array([i for i, _ in law.pmf], dtype=np.int64)
    probs = np.array([float(q) for _, q in law.pmf])
    probs /= probs.sum()
    for _ in range(budget):
        tally = gen.multinomial(n, probs)
        if int(tally @ values) == n - 1:
            counts = np.repeat(values, tally)
            gen.shuffle(counts)
            return counts
    raise UnattainableSizeError(
        f"no offspring vector summing to {n - 1} found in {budget} draws"
    )


def gw_parent(law: OffspringLaw, n: int, rng, budget: int | None = None) -> tuple[np.ndarray, int]:
    """Parent array and root of a conditioned GW tree with uniform labels."""
    n = _check_size(n)
    if not is_attainable(law, n):
        raise UnattainableSizeError(f"size {n} is unattainable under {law.describe()}")
    gen = as_generator(rng)
    if law.kind in _KIND_CODE:
        # criticality forces p = 1/2 for the geometric and binary kinds
        return kernels.gw_parent(_KIND_CODE[law.kind], n, gen)
    if budget is None:
        budget = 1000 + 100 * int(math.isqrt(n) + 1)
    counts = _table_counts(law, n, gen, budget)
    rot = kernels.cycle_rotate(counts)
    labels = kernels.random_labels(n, gen)
    return kernels.lukasiewicz_to_parent(rot, labels), int(labels[0])


def sample_conditioned_gw(law: OffspringLaw, n: int, rng, budget: int | None = None) -> RootedTree:
    parent, _ = gw_parent(law, n, rng, budget)
    return RootedTree.from_array(parent, validate=False)
