"""Exact laws by exhaustive enumeration, in rational arithmetic only.

No floating point is used anywhere in this module.  Budgets keep every
enumeration small: trees and records up to n = 7, dynamics and cutting
laws up to n = 5.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from . import kernels
from .dynamics import _pruned_forest_and_chain, tree_to_forest
from .errors import BudgetExceededError
from .trees import OrderedForest, RootedTree, spanned_subtree, subtree_membership

MAX_ENUM_N = 7
MAX_DYNAMICS_N = 5
MAX_CUT_EDGES = 9


class ExactDistribution:
    """Finite law given as an outcome -> Fraction map."""

    __slots__ = ("probs",)

    def __init__(self, probs: dict | None = None):
        self.probs: dict[Hashable, Fraction] = {}
        for x, p in (probs or {}).items():
            self.add(x, p)

    def add(self, outcome, p) -> None:
        p = Fraction(p)
        if p < 0:
            raise ValueError("probabilities must be nonnegative")
        if p:
            self.probs[outcome] = self.probs.get(outcome, Fraction(0)) + p

    @classmethod
    def uniform(cls, outcomes: Iterable) -> "ExactDistribution":
        outcomes = list(outcomes)
        p = Fraction(1, len(outcomes))
        d = cls()
        for x in outcomes:
            d.add(x, p)
        return d

    @classmethod
    def point(cls, outcome) -> "ExactDistribution":
        return cls({outcome: Fraction(1)})

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def is_normalized(self) -> bool:
        return self.total() == 1

    def normalized(self) -> "ExactDistribution":
        z = self.total()
        return ExactDistribution({x: p / z for x, p in self.probs.items()})

    def map(self, f: Callable) -> "ExactDistribution":
        d = ExactDistribution()
        for x, p in self.probs.items():
            d.add(f(x), p)
        return d

    def tv(self, other: "ExactDistribution") -> Fraction:
        keys = set(self.probs) | set(other.probs)
        return sum((abs(self[x] - other[x]) for x in keys), Fraction(0)) / 2

    def mean(self, f: Callable = lambda x: x) -> Fraction:
        return sum((Fraction(f(x)) * p for x, p in self.probs.items()), Fraction(0))

    def __getitem__(self, outcome) -> Fraction:
        return self.probs.get(outcome, Fraction(0))

    def __len__(self) -> int:
        return len(self.probs)

    def items(self):
        return self.probs.items()

    def support(self) -> list:
        return list(self.probs)

    def __repr__(self) -> str:
        body = ", ".join(f"{x!r}: {p}" for x, p in sorted(self.probs.items(), key=lambda kv: repr(kv[0]))[:8])
        more = "" if len(self.probs) <= 8 else f", ... ({len(self.probs)} outcomes)"
        return f"ExactDistribution({{{body}{more}}})"


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    tv: Fraction
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} tv={self.tv} {self.detail}".rstrip()


def _guard(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise BudgetExceededError(f"{what} is limited to n <= {limit}, got n = {n}")


def tree_key(t: RootedTree) -> tuple[int, ...]:
    return t.parents()


def forest_key(f: OrderedForest) -> tuple[tuple[int, ...], tuple[int, ...]]:
    return tuple(int(x) for x in f.parent[1:]), f.roots


@lru_cache(maxsize=None)
def _trees(n: int) -> tuple[RootedTree, ...]:
    out = []
    for seq in itertools.product(range(1, n + 1), repeat=max(n - 2, 0)):
        base = kernels.prufer_decode(np.array(seq, dtype=np.int64), n)
        for r in range(1, n + 1):
            p = base.copy()
            if r != n:
                kernels.reroot_inplace(p, r)
            out.append(RootedTree.from_array(p, validate=False))
    return tuple(out)


def enumerate_trees(n: int) -> list[RootedTree]:
    """All n^(n-1) rooted labelled trees on [n]."""
    _guard(n, MAX_ENUM_N, "tree enumeration")
    if n < 1:
        raise BudgetExceededError("n must be positive")
    return list(_trees(n))


def enumerate_forests(n: int) -> list[OrderedForest]:
    """All n^n ordered forests on [n], via the (tree, vertex) bijection."""
    return [tree_to_forest(t, v) for t in enumerate_trees(n) for v in range(1, n + 1)]


# Modified dynamics -------------------------------------------------------


def exact_modified_dynamics_law(t: RootedTree) -> ExactDistribution:
    """Law of the effective vertex sequence (x_{sigma_1}, ..., x_{sigma_kappa}).

    The next effective vertex is uniform on the surviving root component.
    Every other output of the dynamics is a function of this sequence.
    """
    _guard(t.n, MAX_DYNAMICS_N, "the dynamics oracle")
    subtree = [frozenset()] + [subtree_membership(t, v) for v in range(1, t.n + 1)]
    out = ExactDistribution()

    def rec(alive: frozenset, xs: tuple, prob: Fraction):
        q = prob / len(alive)
        for x in sorted(alive):
            if x == t.root:
                out.add(xs + (x,), q)
            else:
                rec(alive - subtree[x], xs + (x,), q)

    rec(frozenset(range(1, t.n + 1)), (), Fraction(1))
    return out


@lru_cache(maxsize=None)
def _dynamics_joint(n: int) -> tuple:
    """Pairs (tree, effective sequence, probability) under a uniform tree."""
    w = Fraction(1, n ** (n - 1))
    rows = []
    for t in _trees(n):
        for xs, p in exact_modified_dynamics_law(t).items():
            rows.append((t, xs, w * p))
    return tuple(rows)


def exact_key_law(n: int) -> ExactDistribution:
    """Joint law of (T-hat, r(T)) for T uniform."""
    _guard(n, MAX_DYNAMICS_N, "the dynamics oracle")
    d = ExactDistribution()
    for t, xs, p in _dynamics_joint(n):
        _, that = _pruned_forest_and_chain(t, xs)
        d.add((tree_key(that), t.root), p)
    return d


def exact_forest_law(n: int) -> ExactDistribution:
    """Law of F(T, X) for T uniform."""
    _guard(n, MAX_DYNAMICS_N, "the dynamics oracle")
    d = ExactDistribution()
    for t, xs, p in _dynamics_joint(n):
        f, _ = _pruned_forest_and_chain(t, xs)
        d.add(forest_key(f), p)
    return d


def exact_reverse_transform_law(n: int) -> ExactDistribution:
    """Law of the reverse transform applied to a uniform ordered forest."""
    _guard(n, MAX_DYNAMICS_N, "the reverse transform oracle")
    d = ExactDistribution()
    w = Fraction(1, n ** n)
    for f in enumerate_forests(n):
        members = f.members()
        choices = []
        for i in range(f.k - 1):
            later = sorted(set().union(*members[i + 1:]))
            choices.append(later)
        for pick in itertools.product(*choices):
            p = np.array(f.parent)
            q = w
            for i, a in enumerate(pick):
                p[f.roots[i]] = a
                q /= len(choices[i])
            d.add(tuple(int(x) for x in p[1:]), q)
    return d


@lru_cache(maxsize=None)
def _attachment_joint(n: int) -> dict:
    joint: dict = {}
    for t, xs, p in _dynamics_joint(n):
        f, _ = _pruned_forest_and_chain(t, xs)
        vec = tuple(int(t.parent[r]) for r in xs[:-1])
        joint.setdefault(forest_key(f), ExactDistribution()).add(vec, p)
    return joint


def exact_attachment_law(f: OrderedForest) -> ExactDistribution:
    """Conditional law of (a(r(t_i), T))_{i<k} given F(T, X) = f, T uniform."""
    _guard(f.n, MAX_DYNAMICS_N, "the dynamics oracle")
    law = _attachment_joint(f.n).get(forest_key(f))
    if law is None:
        return ExactDistribution()
    return law.normalized()


def product_attachment_law(f: OrderedForest) -> ExactDistribution:
    """Independent uniform parents over the vertices of the later trees."""
    members = f.members()
    sets = [sorted(set().union(*members[i + 1:])) for i in range(f.k - 1)]
    return ExactDistribution.uniform(itertools.product(*sets))


# Records -------------------------------------------------------------------


def exact_records_law(t: RootedTree) -> ExactDistribution:
    """Law of the record count over all n! labellings."""
    _guard(t.n, MAX_ENUM_N, "the records oracle")
    n = t.n
    order = t.bfs_order()
    par = t.parent
    counts: dict[int, int] = {}
    for perm in itertools.permutations(range(n)):
        label = (None,) + perm
        best = [0] * (n + 1)
        k = 0
        for u in order:
            if u == t.root or label[u] < best[par[u]]:
                best[u] = label[u]
                k += 1
            else:
                best[u] = best[par[u]]
        counts[k] = counts.get(k, 0) + 1
    total = math.factorial(n)
    return ExactDistribution({k: Fraction(c, total) for k, c in counts.items()})


# Cutting ---------------------------------------------------------------------


class _SmallPlanted:
    """t<S> as an explicit edge list for exhaustive recursion."""

    def __init__(self, t: RootedTree, S: Sequence[int]):
        n = t.n
        self.n = n
        self.k = len(S)
        self.S = tuple(S)
        self.edges = [(v, int(t.parent[v])) for v in range(1, n + 1) if t.parent[v] != v]
        self.n_tree = len(self.edges)
        self.edges += [(v, n + i) for i, v in enumerate(S, start=1)]
        if len(self.edges) > MAX_CUT_EDGES:
            raise BudgetExceededError(f"cut oracle is limited to {MAX_CUT_EDGES} edges")
        self.size = n + self.k

    def components(self, removed: frozenset) -> list[int]:
        lab = list(range(self.size + 1))

        def find(x):
            while lab[x] != x:
                lab[x] = lab[lab[x]]
                x = lab[x]
            return x

        for j, (a, b) in enumerate(self.edges):
            if j not in removed:
                lab[find(a)] = find(b)
        return [find(x) for x in range(self.size + 1)]

    def planted_id(self, i: int) -> int:
        return self.n_tree + i - 1

    def eligible(self, removed: frozenset, mode: str) -> tuple[list[int], int | None]:
        comp = self.components(removed)
        if mode == "planted":
            wcomps = {comp[self.n + i] for i in range(1, self.k + 1)}
            elig = [j for j, (a, b) in enumerate(self.edges)
                    if j not in removed and comp[a] in wcomps]
            return elig, None
        stage = next((i for i in range(1, self.k + 1) if self.planted_id(i) not in removed), None)
        if stage is None:
            return [], None
        if mode == "stagewise":
            # every edge of C(w_i), other targets' planted edges included
            c = comp[self.n + stage]
            return [j for j, (a, b) in enumerate(self.edges)
                    if j not in removed and comp[a] == c], stage
        c = comp[self.S[stage - 1]]
        elig = [j for j in range(self.n_tree) if j not in removed and comp[self.edges[j][0]] == c]
        elig.append(self.planted_id(stage))
        return elig, stage

    def edge(self, j: int) -> tuple[int, int]:
        a, b = self.edges[j]
        return (a, b) if a < b else (b, a)


def exact_cut_law(t: RootedTree, S: Sequence[int], mode: str = "planted") -> ExactDistribution:
    """Exact law of the isolation times (M_1, ..., M_k); M is their maximum.

    M_i is the step at which the planted edge of target i is removed.
    """
    if mode not in ("planted", "ordered", "stagewise"):
        raise ValueError(f"unknown mode {mode!r}")
    g = _SmallPlanted(t, S)
    planted = {g.planted_id(i): i for i in range(1, g.k + 1)}

    @lru_cache(maxsize=None)
    def rec(removed: frozenset) -> tuple:
        elig, _ = g.eligible(removed, mode)
        if not elig:
            return ((tuple([0] * g.k), Fraction(1)),)
        acc: dict = {}
        q = Fraction(1, len(elig))
        for j in elig:
            hit = planted.get(j)
            for tup, p in rec(removed | {j}):
                new = tuple(1 if (hit == i + 1) else (x + 1 if x else 0) for i, x in enumerate(tup))
                acc[new] = acc.get(new, Fraction(0)) + p * q
        return tuple(acc.items())

    return ExactDistribution(dict(rec(frozenset())))


def exact_cut_count_law(t: RootedTree, S: Sequence[int], mode: str = "planted") -> ExactDistribution:
    """Exact law of the total number of removed edges M."""
    if mode not in ("planted", "ordered", "stagewise"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "planted":
        # planted cutting only sees S as a multiset
        S = tuple(sorted(S))
    return ExactDistribution(dict(_count_law(t, tuple(S), mode)))


@lru_cache(maxsize=4096)
def _count_law(t: RootedTree, S: tuple, mode: str) -> tuple:
    g = _SmallPlanted(t, S)

    # Integer numerators over a common denominator; Fractions only at the end.
    @lru_cache(maxsize=None)
    def rec(removed: frozenset) -> tuple[dict, int]:
        elig, _ = g.eligible(removed, mode)
        if not elig:
            return {0: 1}, 1
        kids = [rec(removed | {j}) for j in elig]
        den = math.lcm(*(d for _, d in kids))
        acc: dict = {}
        for nums, d in kids:
            scale = den // d
            for m, c in nums.items():
                acc[m + 1] = acc.get(m + 1, 0) + c * scale
        return acc, den * len(elig)

    nums, den = rec(frozenset())
    return tuple((m, Fraction(c, den)) for m, c in nums.items())


def exact_cut_sequence_law(t: RootedTree, S: Sequence[int], mode: str = "planted") -> ExactDistribution:
    """Exact law of the full sequence of removed edges."""
    g = _SmallPlanted(t, S)
    if len(g.edges) > 8:
        raise BudgetExceededError("sequence enumeration is limited to 8 edges")
    out = ExactDistribution()

    def rec(removed: frozenset, seq: tuple, prob: Fraction):
        elig, _ = g.eligible(removed, mode)
        if not elig:
            out.add(seq, prob)
            return
        q = prob / len(elig)
        for j in elig:
            rec(removed | {j}, seq + (g.edge(j),), q)

    rec(frozenset(), (), Fraction(1))
    return out


def exact_spanned_edges_law(n: int, k: int) -> ExactDistribution:
    """Edges of the subtree spanned by the root and k uniform vertices of a uniform tree."""
    _guard(n, MAX_DYNAMICS_N, "the spanned-edges oracle")
    d = ExactDistribution()
    trees = _trees(n)
    w = Fraction(1, len(trees) * n ** k)
    for t in trees:
        for vs in itertools.product(range(1, n + 1), repeat=k):
            d.add(spanned_subtree(t, (t.root,) + vs).n_edges, w)
    return d


def exact_uniform_cut_law(n: int, k: int, mode: str = "planted") -> ExactDistribution:
    """Law of M(T_n, S_k) for a uniform tree and k uniform targets."""
    _guard(n, MAX_DYNAMICS_N, "the cut oracle")
    d = ExactDistribution()
    trees = _trees(n)
    w = Fraction(1, len(trees) * n ** k)
    for t in trees:
        for S in itertools.product(range(1, n + 1), repeat=k):
            for m, p in exact_cut_count_law(t, S, mode).items():
                d.add(m, w * p)
    return d


def exact_first_span_cut_law(n: int, k: int) -> dict:
    """For each surviving root-component vertex set S, the conditional law
    of (component tree, parent y of the cut vertex) at the first effective
    cut falling in the subtree spanned by the root and k uniform vertices.

    The case where that cut is the root itself (S empty) is excluded.
    """
    _guard(n, MAX_DYNAMICS_N, "the first-span-cut oracle")
    by_set: dict = {}
    for t, xs, p in _dynamics_joint(n):
        subtrees = {x: subtree_membership(t, x) for x in xs}
        for vs in itertools.product(range(1, n + 1), repeat=k):
            span = spanned_subtree(t, (t.root,) + vs).vertices
            alive = set(range(1, n + 1))
            for x in xs:
                alive -= subtrees[x]
                if x in span:
                    break
            if x == t.root:
                continue
            S = frozenset(alive)
            comp_parent = tuple(int(t.parent[v]) if v in S else 0 for v in range(1, n + 1))
            y = int(t.parent[x])
            by_set.setdefault(S, ExactDistribution()).add((comp_parent, y), p / n ** k)
    return {S: law.normalized() for S, law in by_set.items()}


def first_span_cut_reference(S: frozenset, n: int) -> ExactDistribution:
    """Uniform law over (rooted tree on S, vertex of S): mass |S|^(-|S|) each.

    Outcomes use the same encoding as :func:`exact_first_span_cut_law`:
    a length-n parent tuple with 0 outside S, paired with y.
    """
    labels = sorted(S)
    m = len(labels)
    outcomes = []
    for small in _trees(m):
        parent = [0] * n
        for i, v in enumerate(labels, start=1):
            parent[v - 1] = labels[int(small.parent[i]) - 1]
        for y in labels:
            outcomes.append((tuple(parent), y))
    return ExactDistribution.uniform(outcomes)


# Checks ----------------------------------------------------------------------


def check_key(n: int) -> CheckResult:
    law = exact_key_law(n)
    ref = ExactDistribution.uniform(
        (tree_key(t), w) for t in _trees(n) for w in range(1, n + 1)
    )
    tv = law.tv(ref)
    return CheckResult(f"key n={n}", tv == 0 and law.is_normalized(), tv,
                       f"support={len(law)} expected={n ** n}")


def check_forest(n: int) -> CheckResult:
    law = exact_forest_law(n)
    ref = ExactDistribution.uniform(forest_key(f) for f in enumerate_forests(n))
    tv_f = law.tv(ref)
    rev = exact_reverse_transform_law(n)
    tv_r = rev.tv(ExactDistribution.uniform(tree_key(t) for t in _trees(n)))
    tv = max(tv_f, tv_r)
    return CheckResult(f"forest n={n}", tv == 0, tv, f"forest_tv={tv_f} reverse_tv={tv_r}")


def check_reverse(n: int) -> CheckResult:
    worst = Fraction(0)
    forests = enumerate_forests(n)
    for f in forests:
        tv = exact_attachment_law(f).tv(product_attachment_law(f))
        worst = max(worst, tv)
    return CheckResult(f"reverse n={n}", worst == 0, worst, f"forests={len(forests)}")


def check_knodes(n: int, k: int) -> CheckResult:
    """M - k for ordered cutting against the spanned-edges law."""
    cut = exact_uniform_cut_law(n, k, "ordered").map(lambda m: m - k)
    tv = cut.tv(exact_spanned_edges_law(n, k))
    return CheckResult(f"knodes n={n} k={k}", tv == 0, tv)


def check_kcoup(n: int, k: int) -> CheckResult:
    """M - k for planted and for ordered cutting against the spanned-edges law."""
    span = exact_spanned_edges_law(n, k)
    tv_p = exact_uniform_cut_law(n, k, "planted").map(lambda m: m - k).tv(span)
    tv_o = exact_uniform_cut_law(n, k, "ordered").map(lambda m: m - k).tv(span)
    tv = max(tv_p, tv_o)
    return CheckResult(f"kcoup n={n} k={k}", tv == 0, tv, f"planted_tv={tv_p} ordered_tv={tv_o}")


def check_records(n: int) -> CheckResult:
    worst = Fraction(0)
    for t in _trees(n):
        dyn = exact_modified_dynamics_law(t).map(len)
        worst = max(worst, exact_records_law(t).tv(dyn))
    return CheckResult(f"records n={n}", worst == 0, worst, f"trees={n ** (n - 1)}")


def reorder_pushforward(t: RootedTree, S: Sequence[int], rule: str = "size") -> ExactDistribution:
    from .cutting import reorder

    return exact_cut_sequence_law(t, S, "planted").map(lambda e: reorder(t, S, e, rule)[1])


def check_reorder(n: int, k: int, rule: str = "size") -> CheckResult:
    """Ordered-cut sequence law against the reordered planted-cut law.

    ``rule="literal"`` compares instead the stagewise procedure that cuts
    every edge of C(w_i) with the pushforward under the literal blocks.
    """
    target_mode = "ordered" if rule == "size" else "stagewise"
    worst = Fraction(0)
    pairs = 0
    bad = 0
    for t in _trees(n):
        for S in itertools.product(range(1, n + 1), repeat=k):
            target = exact_cut_sequence_law(t, S, target_mode)
            tv = target.tv(reorder_pushforward(t, S, rule))
            worst = max(worst, tv)
            bad += tv != 0
            pairs += 1
    name = "reorder" if rule == "size" else "reorder-literal"
    return CheckResult(f"{name} n={n} k={k}", worst == 0, worst, f"pairs={pairs} mismatched={bad}")


def check_first_span_cut(n: int, k: int) -> CheckResult:
    worst = Fraction(0)
    laws = exact_first_span_cut_law(n, k)
    for S, law in laws.items():
        worst = max(worst, law.tv(first_span_cut_reference(S, n)))
    return CheckResult(f"cutonk n={n} k={k}", worst == 0, worst, f"sets={len(laws)}")


CHECKS = {
    "key": lambda n, k: check_key(n),
    "forest": lambda n, k: check_forest(n),
    "reverse": lambda n, k: check_reverse(n),
    "kcoup": check_kcoup,
    "knodes": check_knodes,
    "reorder-literal": lambda n, k: check_reorder(n, k, "literal"),
    "records": lambda n, k: check_records(n),
    "reorder": check_reorder,
    "cutonk": check_first_span_cut,
}
