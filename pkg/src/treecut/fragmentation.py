"""Discrete Aldous-Pitman cutting on a tree of size n.

Cuts arrive at total rate sigma*sqrt(n) on uniform vertices.  A cut is
effective when it lands in the current root component; it then removes the
subtree above the cut vertex.  Masses are vertex counts divided by n.

Ineffective arrivals are generated by thinning: between effective cuts the
number of arrivals is geometric with success probability (root mass), and
each ineffective vertex is uniform over the already pruned vertices.  The
resulting event stream has the same law as i.i.d. uniform marks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import stats as sps

from . import kernels
from .dynamics import _pruned_forest_and_chain
from .errors import IncompleteTraceError, InvalidParameterError, InvalidSizeError
from .rng import as_generator
from .trees import OrderedForest, RootedTree


@dataclass(frozen=True)
class FragmentationTrace:
    """All arrivals up to root isolation (or the horizon).

    ``mu_after[i]`` is n times the root mass right after event i and
    ``L[i]`` the number of effective events among the first i+1.
    """

    n: int
    sigma: float
    tau: np.ndarray
    vertex: np.ndarray
    effective: np.ndarray
    mu_after: np.ndarray
    L: np.ndarray
    complete: bool
    horizon: float = math.inf

    @property
    def rate(self) -> float:
        return self.sigma * math.sqrt(self.n)

    @property
    def kappa(self) -> int:
        return int(self.L[-1]) if len(self.L) else 0

    @property
    def cuts(self) -> tuple[int, ...]:
        """Effective cut vertices in cut order."""
        return tuple(int(x) for x in self.vertex[self.effective])

    @property
    def u(self) -> int:
        return self.cuts[0]

    @property
    def v(self) -> int:
        return self.cuts[-1]

    def mu(self, t: float) -> float:
        """Root mass at time t (right-continuous)."""
        i = int(np.searchsorted(self.tau, t, side="right"))
        return 1.0 if i == 0 else self.mu_after[i - 1] / self.n

    def L_at(self, t: float) -> int:
        i = int(np.searchsorted(self.tau, t, side="right"))
        return 0 if i == 0 else int(self.L[i - 1])

    def Lambda(self, t: float = math.inf) -> float:
        """(1/(sigma sqrt n)) * sum of root masses after each arrival up to t."""
        i = int(np.searchsorted(self.tau, t, side="right"))
        return float(self.mu_after[:i].sum()) / (self.n * self.rate)

    def events(self):
        """Rows ``{i, tau, vertex, effective, mu_after, L}`` (mu as a mass)."""
        for i in range(len(self.tau)):
            yield {
                "i": i + 1,
                "tau": float(self.tau[i]),
                "vertex": int(self.vertex[i]),
                "effective": bool(self.effective[i]),
                "mu_after": float(self.mu_after[i]) / self.n,
                "L": int(self.L[i]),
            }


@njit(cache=True, nogil=True)
def _prune(x, size, start, child, alive, pos, dead, ndead, stack):
    """Move the alive subtree above x from ``alive`` to ``dead``; returns (alive size, ndead)."""
    top = 0
    stack[0] = x
    while top >= 0:
        u = stack[top]
        top -= 1
        size -= 1
        last = alive[size]
        alive[pos[u]] = last
        pos[last] = pos[u]
        pos[u] = -1
        dead[ndead] = u
        ndead += 1
        for j in range(start[u], start[u + 1]):
            c = child[j]
            if pos[c] >= 0:
                top += 1
                stack[top] = c
    return size, ndead


@njit(cache=True, nogil=True)
def _setup(n):
    alive = np.arange(1, n + 1).astype(np.int64)
    pos = np.arange(-1, n).astype(np.int64)
    return alive, pos, np.empty(n, dtype=np.int64), np.empty(n, dtype=np.int64)


@njit(cache=True, nogil=True)
def _grow(a, need):
    if need <= len(a):
        return a
    b = np.empty(max(need, 2 * len(a)), dtype=a.dtype)
    b[: len(a)] = a
    return b


@njit(cache=True, nogil=True)
def trace_kernel(parent, root, n, rate, horizon, rng):
    """Every arrival until root isolation or until time exceeds ``horizon``."""
    start, child = kernels.children_csr(parent, n)
    alive, pos, dead, stack = _setup(n)
    ndead = 0
    cap = 4 * n + 16
    tau = np.empty(cap, dtype=np.float64)
    vert = np.empty(cap, dtype=np.int64)
    eff = np.empty(cap, dtype=np.bool_)
    mu = np.empty(cap, dtype=np.int64)
    m = 0
    t = 0.0
    size = n
    complete = False
    while True:
        g = rng.geometric(size / n)
        stop = False
        for h in range(g):
            t += rng.exponential(1.0 / rate)
            if t > horizon:
                stop = True
                break
            if m + 1 > len(tau):
                tau = _grow(tau, m + 1)
                vert = _grow(vert, m + 1)
                eff = _grow(eff, m + 1)
                mu = _grow(mu, m + 1)
            tau[m] = t
            if h < g - 1:
                vert[m] = dead[rng.integers(0, ndead)]
                eff[m] = False
            else:
                x = alive[rng.integers(0, size)]
                vert[m] = x
                eff[m] = True
                size, ndead = _prune(x, size, start, child, alive, pos, dead, ndead, stack)
            mu[m] = size
            m += 1
        if stop:
            break
        if size == 0:
            complete = True
            break
    return tau[:m], vert[:m], eff[:m], mu[:m], complete


def _rate(n: int, sigma: float) -> float:
    if not (sigma > 0) or not math.isfinite(sigma):
        raise InvalidParameterError(f"sigma must be positive and finite, got {sigma!r}")
    return sigma * math.sqrt(n)


def fragment(t: RootedTree, sigma: float, rng, horizon: float = math.inf) -> FragmentationTrace:
    """Run the cut process on ``t`` until the root is cut (or ``horizon``)."""
    sigma = float(sigma)
    rate = _rate(t.n, sigma)
    if not (horizon > 0):
        raise InvalidParameterError("horizon must be positive")
    tau, vert, eff, mu, complete = trace_kernel(
        np.asarray(t.parent), t.root, t.n, rate, float(horizon), as_generator(rng)
    )
    return FragmentationTrace(t.n, sigma, tau, vert, eff, mu, np.cumsum(eff), bool(complete), float(horizon))


def mass_integral(trace: FragmentationTrace) -> tuple[float, float]:
    """(Lambda(inf), integral of mu dt) for a trace run to root isolation."""
    if not trace.complete:
        raise IncompleteTraceError("mass_integral needs a trace run with horizon=inf")
    gaps = np.diff(trace.tau, prepend=0.0)
    before = np.concatenate(([trace.n], trace.mu_after[:-1]))
    integral = float((before * gaps).sum()) / trace.n
    return trace.Lambda(), integral


def sup_local_time_gap(trace: FragmentationTrace) -> float:
    """sup_t |L(t)/(sigma sqrt n) - Lambda(t)| over the whole trace."""
    c = trace.rate
    diff = trace.L / c - np.cumsum(trace.mu_after) / (trace.n * c)
    return float(max(0.0, np.abs(diff).max())) if len(diff) else 0.0


def pruned_forest(trace: FragmentationTrace, t: RootedTree) -> OrderedForest:
    if not trace.complete:
        raise IncompleteTraceError("the pruned forest needs a complete trace")
    return _pruned_forest_and_chain(t, trace.cuts)[0]


def build_that_tree(trace: FragmentationTrace, t: RootedTree) -> tuple[RootedTree, int, int]:
    """Chain the roots of the pruned subtrees in cut order.

    The subtree cut at step i+1 hangs below the root of the one cut at step
    i, so the result is rooted at u (first cut) and v (the root of t) is
    the last vertex of the chain.
    """
    if not trace.complete:
        raise IncompleteTraceError("build_that_tree needs a complete trace")
    _, that = _pruned_forest_and_chain(t, trace.cuts)
    return that, trace.u, trace.v


def attachment_parents(trace: FragmentationTrace, t: RootedTree) -> tuple[int, ...]:
    """y_i = parent in t of the i-th effective cut vertex, for all but the last."""
    return tuple(int(t.parent[x]) for x in trace.cuts[:-1])


# Batches ---------------------------------------------------------------------


@njit(cache=True, nogil=True)
def summary_kernel(parent, root, n, rate, rng):
    """(kappa, Lambda(inf), integral of mu, sup |L/c - Lambda|) without storing events.

    Per stage only the geometric arrival count matters: the ineffective
    arrivals each add the current mass to Lambda and their waiting time is
    a Gamma(g, rate) variable.
    """
    start, child = kernels.children_csr(parent, n)
    alive, pos, dead, stack = _setup(n)
    ndead = 0
    size = n
    kappa = 0
    lam = 0.0
    integral = 0.0
    gap = 0.0
    scale = 1.0 / (n * rate)
    while size > 0:
        g = rng.geometric(size / n)
        wait = rng.gamma(g, 1.0 / rate)
        integral += wait * size / n
        lam += (g - 1) * size * scale
        d = abs(kappa / rate - lam)
        if d > gap:
            gap = d
        x = alive[rng.integers(0, size)]
        size, ndead = _prune(x, size, start, child, alive, pos, dead, ndead, stack)
        kappa += 1
        lam += size * scale
        d = abs(kappa / rate - lam)
        if d > gap:
            gap = d
    return kappa, lam, integral, gap


@njit(cache=True, nogil=True)
def cayley_summary_batch(n, sigma, count, rng):
    out = np.empty((count, 4), dtype=np.float64)
    rate = sigma * np.sqrt(n)
    for r in range(count):
        parent, root = kernels.cayley_parent(n, rng)
        kappa, lam, integral, gap = summary_kernel(parent, root, n, rate, rng)
        out[r, 0] = kappa
        out[r, 1] = lam
        out[r, 2] = integral
        out[r, 3] = gap
    return out


@njit(cache=True, nogil=True)
def gw_summary_batch(kind, n, sigma, count, rng):
    out = np.empty((count, 4), dtype=np.float64)
    rate = sigma * np.sqrt(n)
    for r in range(count):
        parent, root = kernels.gw_parent(kind, n, rng)
        kappa, lam, integral, gap = summary_kernel(parent, root, n, rate, rng)
        out[r, 0] = kappa
        out[r, 1] = lam
        out[r, 2] = integral
        out[r, 3] = gap
    return out


def summary_batch(n: int, count: int, rng, sigma: float = 1.0, law=None) -> np.ndarray:
    """Rows (kappa, Lambda(inf), integral of mu dt, sup local-time gap).

    Trees are uniform Cayley trees unless ``law`` (a closed-form
    :class:`~treecut.samplers.OffspringLaw`) is given.
    """
    if n < 1:
        raise InvalidSizeError("n must be positive")
    _rate(n, sigma)
    gen = as_generator(rng)
    if law is None:
        return cayley_summary_batch(n, float(sigma), count, gen)
    from .samplers import _KIND_CODE, is_attainable
    from .errors import UnattainableSizeError

    if law.kind not in _KIND_CODE:
        raise InvalidParameterError("batch GW runs support poisson1, geometric and binary laws")
    if not is_attainable(law, n):
        raise UnattainableSizeError(f"size {n} is unattainable under {law.describe()}")
    return gw_summary_batch(_KIND_CODE[law.kind], n, float(sigma), count, gen)


@njit(cache=True, nogil=True)
def first_span_cut_batch(n, k, count, rng):
    """Integer outcome keys for the first effective cut inside the span of
    the root and k uniform vertices; -1 when that cut is the root.

    key = sum_v q[v] (n+1)^(v-1) + y (n+1)^n, where q is the parent array
    restricted to the surviving root component (0 elsewhere).
    """
    out = np.empty(count, dtype=np.int64)
    span = np.zeros(n + 1, dtype=np.bool_)
    base = n + 1
    for r in range(count):
        parent, root = kernels.cayley_parent(n, rng)
        start, child = kernels.children_csr(parent, n)
        span[:] = False
        span[root] = True
        for i in range(k):
            u = rng.integers(1, n + 1)
            while not span[u]:
                span[u] = True
                u = parent[u]
        alive, pos, dead, stack = _setup(n)
        ndead = 0
        size = n
        while True:
            x = alive[rng.integers(0, size)]
            size, ndead = _prune(x, size, start, child, alive, pos, dead, ndead, stack)
            if span[x]:
                break
        if x == root:
            out[r] = -1
            continue
        key = 0
        w = 1
        for v in range(1, n + 1):
            if pos[v] >= 0:
                key += parent[v] * w
            w *= base
        out[r] = key + parent[x] * w
    return out


def _decode_span_key(key: int, n: int) -> tuple[frozenset, tuple[int, ...], int]:
    digits = []
    for _ in range(n):
        key, d = divmod(key, n + 1)
        digits.append(d)
    q = tuple(digits)
    S = frozenset(v for v in range(1, n + 1) if q[v - 1] != 0)
    return S, q, key


@dataclass(frozen=True)
class ChiSquareResult:
    name: str
    statistic: float
    df: int
    pvalue: float
    replicates: int
    groups: int
    alpha: float = 1e-3

    @property
    def passed(self) -> bool:
        return self.pvalue > self.alpha

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name} chi2={self.statistic:.2f} df={self.df} "
                f"p={self.pvalue:.4g} alpha={self.alpha:g} replicates={self.replicates}")


def grouped_chi_square(name: str, counts: dict, refs: dict, replicates: int,
                       alpha: float = 1e-3) -> ChiSquareResult:
    """Chi-square of observed counts within groups against exact conditional laws.

    ``counts[g][outcome]`` are observations and ``refs[g]`` an
    :class:`~treecut.oracle.ExactDistribution`; each group contributes
    (support size - 1) degrees of freedom.
    """
    stat = 0.0
    df = 0
    for g, obs in counts.items():
        ref = refs[g]
        total = sum(obs.values())
        extra = set(obs) - set(ref.support())
        if extra:
            # outcome outside the reference support: impossible under the claim
            return ChiSquareResult(name, math.inf, df, 0.0, replicates, len(counts), alpha)
        for outcome, p in ref.items():
            e = total * float(p)
            stat += (obs.get(outcome, 0) - e) ** 2 / e
        df += len(ref) - 1
    p = float(sps.chi2.sf(stat, df)) if df > 0 else 1.0
    return ChiSquareResult(name, stat, df, p, replicates, len(counts), alpha)


def first_span_cut_check(n: int, k: int, rng, replicates: int, alpha: float = 1e-3) -> ChiSquareResult:
    """Monte Carlo frequencies of (component tree, y) at the first cut in the
    span of the root and k uniform vertices, against mass |S|^(-|S|)."""
    from .oracle import MAX_DYNAMICS_N, first_span_cut_reference

    if not 1 <= n <= MAX_DYNAMICS_N:
        raise InvalidSizeError(f"first_span_cut_check supports 1 <= n <= {MAX_DYNAMICS_N}")
    keys = first_span_cut_batch(n, k, replicates, as_generator(rng))
    keys = keys[keys >= 0]
    values, freq = np.unique(keys, return_counts=True)
    counts: dict = {}
    for key, c in zip(values.tolist(), freq.tolist()):
        S, q, y = _decode_span_key(key, n)
        counts.setdefault(S, {})[(q, y)] = c
    refs = {S: first_span_cut_reference(S, n) for S in counts}
    return grouped_chi_square(f"cutonk n={n} k={k}", counts, refs, replicates, alpha)
