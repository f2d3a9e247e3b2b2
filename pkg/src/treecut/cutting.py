"""Edge-removal procedures on planted trees.

Edges of t<S> are sorted label pairs.  The planted leaf w_i carries label
n + i, so the planted edge of target i is ``(v_i, n + i)``.

Two reading conventions, fixed here for the multi-target procedures:

* planted cutting removes a uniform edge among *all* edges of the
  components that still contain a planted vertex;
* in ordered cutting (and in the reorder blocks U_i) an edge counts for
  target i when its removal shrinks the real-vertex count of the
  component of w_i.  Planted vertices carry no mass, so these are the tree
  edges inside that component plus the own planted edge {v_i, w_i}; the
  planted edges of other targets do not qualify.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from numba import njit

from . import kernels
from .errors import EmptySelectionError, InvalidSequenceError
from .rng import as_generator
from .trees import RootedTree

Edge = tuple[int, int]


@dataclass(frozen=True)
class CutTrace:
    """Removed edges in order, the total M, per-target isolation times and
    the real-vertex count of the targeted components after each removal."""

    removed: tuple[Edge, ...]
    M: int
    Ms: tuple[int, ...]
    sizes: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.Ms)


def _edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


def _check_targets(t: RootedTree, S: Sequence[int]) -> tuple[int, ...]:
    S = tuple(int(v) for v in S)
    if not S:
        raise EmptySelectionError("the target sequence S must be nonempty")
    for v in S:
        t.check_vertex(v)
    return S


class _PlantedGraph:
    """Mutable t<S> with component bookkeeping for planted cutting."""

    def __init__(self, t: RootedTree, S: tuple[int, ...]):
        n, k = t.n, len(S)
        self.n, self.k = n, k
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n + k + 1)]
        edges: list[Edge | None] = [None] * (n + k + 1)
        for v in range(1, n + 1):
            p = int(t.parent[v])
            if p != v:
                adj[v].append((p, v))
                adj[p].append((v, v))
                edges[v] = _edge(v, p)
        for i, v in enumerate(S, start=1):
            w = n + i
            adj[v].append((w, w))
            adj[w].append((v, w))
            edges[w] = (v, w)
        self.adj = adj
        self.edges = edges
        self.edge_id = {e: j for j, e in enumerate(edges) if e is not None}
        self.removed = [False] * (n + k + 1)
        self.comp = [0] * (n + k + 1)
        self.real = {0: n}
        self.wcount = {0: k}
        self.next_comp = 1

    def component_of_edge(self, j: int) -> int:
        return self.comp[self.edges[j][0]]

    def split(self, j: int) -> tuple[int, set[int]]:
        """Remove edge j; relabel the smaller side.  Returns (new id, its vertices)."""
        self.removed[j] = True
        a, b = self.edges[j]
        old = self.comp[a]
        sides = []
        for s in (a, b):
            sides.append((deque([s]), {s}))
        # Interleaved BFS: stop as soon as one side is exhausted.
        while True:
            done = None
            for q, seen in sides:
                if not q:
                    done = seen
                    break
                u = q.popleft()
                for nb, eid in self.adj[u]:
                    if not self.removed[eid] and nb not in seen:
                        seen.add(nb)
                        q.append(nb)
            if done is not None:
                break
        new = self.next_comp
        self.next_comp += 1
        real = sum(1 for u in done if u <= self.n)
        wc = len(done) - real
        for u in done:
            self.comp[u] = new
        self.real[new] = real
        self.wcount[new] = wc
        self.real[old] -= real
        self.wcount[old] -= wc
        return new, done

    def edges_of(self, vertices) -> list[int]:
        out = []
        for u in vertices:
            for nb, eid in self.adj[u]:
                if not self.removed[eid] and u < nb:
                    out.append(eid)
        return out


class _EdgePool:
    """Edge ids with O(1) uniform draw and swap-removal."""

    def __init__(self, ids):
        self.items = list(ids)
        self.pos = {e: i for i, e in enumerate(self.items)}

    def __len__(self):
        return len(self.items)

    def draw(self, gen) -> int:
        return self.items[int(gen.integers(0, len(self.items)))]

    def discard(self, e):
        i = self.pos.pop(e, None)
        if i is None:
            return
        last = self.items.pop()
        if last != e:
            self.items[i] = last
            self.pos[last] = i


def planted_cut(t: RootedTree, S: Sequence[int], rng) -> CutTrace:
    """Planted cutting of S in t: remove uniform edges of the planted
    components until every planted vertex is isolated."""
    S = _check_targets(t, S)
    gen = as_generator(rng)
    g = _PlantedGraph(t, S)
    n, k = g.n, g.k
    pool = _EdgePool(j for j, e in enumerate(g.edges) if e is not None)
    removed = []
    sizes = []
    Ms = [0] * k
    active_real = n
    while len(pool):
        j = pool.draw(gen)
        pool.discard(j)
        old = g.component_of_edge(j)
        new, side = g.split(j)
        removed.append(g.edges[j])
        if j > n:
            Ms[j - n - 1] = len(removed)
        for c, verts in ((new, side), (old, None)):
            if g.wcount[c] == 0 and g.real[c] > 0:
                if verts is None:
                    verts = [u for u in (g.edges[j][0], g.edges[j][1]) if g.comp[u] == c]
                    verts = _collect(g, verts[0])
                for e in g.edges_of(verts):
                    pool.discard(e)
                active_real -= g.real[c]
                g.real[c] = 0  # no longer tracked as planted mass
        sizes.append(active_real)
    return CutTrace(tuple(removed), len(removed), tuple(Ms), tuple(sizes))


def _collect(g: _PlantedGraph, s: int) -> list[int]:
    out = [s]
    seen = {s}
    for u in out:
        for nb, eid in g.adj[u]:
            if not g.removed[eid] and nb not in seen:
                seen.add(nb)
                out.append(nb)
    return out


def ordered_cut(t: RootedTree, S: Sequence[int], rng) -> CutTrace:
    """Isolate w_1, then w_2, ...: at each stage cut uniformly among the
    edges whose removal shrinks the component of the current target."""
    S = _check_targets(t, S)
    gen = as_generator(rng)
    n = t.n
    nbrs: list[list[int]] = [[] for _ in range(n + 1)]
    for v in range(1, n + 1):
        p = int(t.parent[v])
        if p != v:
            nbrs[v].append(p)
            nbrs[p].append(v)
    comp = [0] * (n + 1)
    next_comp = 1
    removed: list[Edge] = []
    Ms = []
    sizes = []
    for i, v in enumerate(S, start=1):
        c = comp[v]
        # Orient the current component of v_i away from v_i: the edge above
        # u stands for u, and v_i itself stands for the planted edge.
        sp = {v: v}
        order = [v]
        for u in order:
            for x in nbrs[u]:
                if comp[x] == c and x not in sp:
                    sp[x] = u
                    order.append(x)
        kids: dict[int, list[int]] = {u: [] for u in order}
        for u in order[1:]:
            kids[sp[u]].append(u)
        pool = _EdgePool(order)
        attached = len(order)
        while True:
            u = pool.draw(gen)
            if u == v:
                removed.append((v, n + i))
                sizes.append(0)
                break
            removed.append(_edge(u, sp[u]))
            new = next_comp
            next_comp += 1
            stack = [u]
            while stack:
                x = stack.pop()
                if x not in pool.pos:
                    continue
                pool.discard(x)
                comp[x] = new
                attached -= 1
                stack.extend(kids[x])
            sizes.append(attached)
        # the vertices still joined to v_i form a fresh component
        new = next_comp
        next_comp += 1
        for x in pool.items:
            comp[x] = new
        Ms.append(len(removed))
    return CutTrace(tuple(removed), len(removed), tuple(Ms), tuple(sizes))


@dataclass(frozen=True)
class ReorderPlan:
    """Index sets and blocks of the canonical reordering (1-based indices)."""

    U: tuple[frozenset[int], ...]
    U_star: tuple[frozenset[int], ...]
    Z: tuple[tuple[int, ...], ...]
    Z_star: tuple[tuple[int, ...], ...]
    s: tuple[int, ...]
    m: tuple[int, ...]
    a: tuple[int, ...]
    b: tuple[int, ...]


def _replay(t: RootedTree, S: tuple[int, ...], e: Sequence[Edge], rule: str = "size"):
    """Validate ``e`` as a possible cutting sequence and record, for each
    step, the targets i whose block U_i contains that step.

    ``rule="size"``: the edge shrinks the real-vertex count of C(w_i).
    ``rule="literal"``: both endpoints lie in C(w_i), which also admits the
    planted edges of other targets sharing that component.
    """
    g = _PlantedGraph(t, S)
    n, k = g.n, g.k
    seen = set()
    shrinks = []
    for idx, raw in enumerate(e, start=1):
        try:
            edge = _edge(int(raw[0]), int(raw[1]))
        except (TypeError, ValueError, IndexError):
            raise InvalidSequenceError(idx, f"{raw!r} is not an edge") from None
        j = g.edge_id.get(edge)
        if j is None:
            raise InvalidSequenceError(idx, f"{edge} is not an edge of the planted tree")
        if j in seen:
            raise InvalidSequenceError(idx, f"{edge} is removed twice")
        c = g.component_of_edge(j)
        if g.wcount[c] == 0:
            raise InvalidSequenceError(idx, f"{edge} lies outside every planted component")
        hit = set()
        for i in range(1, k + 1):
            if g.removed[n + i]:
                continue
            if rule == "literal":
                if g.comp[n + i] == c:
                    hit.add(i)
            elif j == n + i or (j <= n and g.comp[S[i - 1]] == c):
                hit.add(i)
        shrinks.append(hit)
        seen.add(j)
        g.split(j)
    missing = [i for i in range(1, k + 1) if not g.removed[n + i]]
    if missing:
        raise InvalidSequenceError(len(e) + 1, f"planted edge of target {missing[0]} is never removed")
    return shrinks


def reorder(t: RootedTree, S: Sequence[int], e: Sequence[Edge],
            rule: str = "size") -> tuple[ReorderPlan, tuple[Edge, ...]]:
    """Canonical reordering e -> e*: edges shrinking the component of w_1
    first (in arrival order), then the remaining ones shrinking that of w_2,
    and so on.

    Under ``rule="literal"`` a block may be empty (another target's planted
    edge was removed while it shared a component with an earlier target);
    its s(i) is then m(i) + 1.
    """
    if rule not in ("size", "literal"):
        raise ValueError(f"unknown rule {rule!r}")
    S = _check_targets(t, S)
    e = [tuple(x) for x in e]
    shrinks = _replay(t, S, e, rule)
    k = len(S)
    U = [frozenset(j for j, h in enumerate(shrinks, start=1) if i in h) for i in range(1, k + 1)]
    U_star, Z, Z_star, s, m, a, b = [], [], [], [], [], [], []
    used: set[int] = set()
    pos = 0
    for i in range(k):
        star = U[i] - used
        used |= U[i]
        z = tuple(sorted(U[i]))
        first = next((ell for ell, zz in enumerate(z, start=1) if zz in star), len(z) + 1)
        zs = z[first - 1:]
        if set(zs) != star:
            raise AssertionError("U*_i is not a tail of Z_i")
        U_star.append(frozenset(star))
        Z.append(z)
        Z_star.append(zs)
        s.append(first)
        m.append(len(z))
        a.append(pos + 1)
        pos += len(zs)
        b.append(pos)
    out = tuple(_edge(*e[j - 1]) for zs in Z_star for j in zs)
    if pos != len(e):
        raise AssertionError("reorder blocks do not cover the sequence")
    plan = ReorderPlan(tuple(U), tuple(U_star), tuple(Z), tuple(Z_star),
                       tuple(s), tuple(m), tuple(a), tuple(b))
    return plan, out


def is_possible_cutting_sequence(t: RootedTree, S: Sequence[int], e: Sequence[Edge]) -> bool:
    try:
        _replay(t, _check_targets(t, S), e)
    except InvalidSequenceError:
        return False
    return True


def records_count(t: RootedTree, rng) -> int:
    """Number of records of a uniform labelling: vertices whose label is the
    smallest on their path to the root."""
    return int(kernels.records_in_tree(np.asarray(t.parent), t.root, t.n, as_generator(rng)))


def expected_cut_probability(t: RootedTree, u: int) -> Fraction:
    return Fraction(1, t.depth(u) + 1)


@njit(cache=True, nogil=True)
def _undirected_csr(parent, n):
    deg = np.zeros(n + 2, dtype=np.int64)
    for v in range(1, n + 1):
        p = parent[v]
        if p != v:
            deg[v + 1] += 1
            deg[p + 1] += 1
    for v in range(1, n + 1):
        deg[v + 1] += deg[v]
    fill = deg.copy()
    nb = np.empty(max(deg[n + 1], 1), dtype=np.int64)
    for v in range(1, n + 1):
        p = parent[v]
        if p != v:
            nb[fill[v]] = p
            fill[v] += 1
            nb[fill[p]] = v
            fill[p] += 1
    return deg, nb


@njit(cache=True, nogil=True)
def ordered_cut_records(parent, n, S, rng):
    """Cumulative stage totals (M_1, ..., M_k) of ordered cutting.

    Within a stage the procedure is single-target cutting of the component
    of v_i rooted at v_i, so the number of cuts is the number of records of
    a uniform labelling and the pieces hang below the records.
    """
    start, nb = _undirected_csr(parent, n)
    k = len(S)
    comp = np.zeros(n + 1, dtype=np.int64)
    stamp = np.zeros(n + 1, dtype=np.int64)
    sp = np.zeros(n + 1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    pathmin = np.empty(n + 1, dtype=np.float64)
    piece = np.zeros(n + 1, dtype=np.int64)
    Ms = np.empty(k, dtype=np.int64)
    total = 0
    for i in range(k):
        v = S[i]
        c = comp[v]
        order[0] = v
        sp[v] = v
        stamp[v] = i + 1
        head = 0
        tail = 1
        while head < tail:
            u = order[head]
            head += 1
            for j in range(start[u], start[u + 1]):
                x = nb[j]
                if comp[x] == c and stamp[x] != i + 1:
                    stamp[x] = i + 1
                    sp[x] = u
                    order[tail] = x
                    tail += 1
        cuts = 0
        for h in range(tail):
            u = order[h]
            lab = rng.random()
            if u == v or lab < pathmin[sp[u]]:
                cuts += 1
                pathmin[u] = lab
                piece[u] = u
            else:
                pathmin[u] = pathmin[sp[u]]
                piece[u] = piece[sp[u]]
        base = (i + 1) * (n + 1)
        for h in range(tail):
            u = order[h]
            comp[u] = base + piece[u]
        total += cuts
        Ms[i] = total
    return Ms


@njit(cache=True, nogil=True)
def cayley_cut_batch(n, k, count, rng):
    """M(T_n, S_k) for ``count`` independent uniform trees and target draws."""
    out = np.empty(count, dtype=np.int64)
    S = np.empty(k, dtype=np.int64)
    for r in range(count):
        parent, _ = kernels.cayley_parent(n, rng)
        for i in range(k):
            S[i] = rng.integers(1, n + 1)
        Ms = ordered_cut_records(parent, n, S, rng)
        out[r] = Ms[k - 1]
    return out


@njit(cache=True, nogil=True)
def gw_records_batch(kind, n, count, rng):
    """Record counts of ``count`` conditioned GW trees (closed-form laws)."""
    out = np.empty(count, dtype=np.int64)
    for r in range(count):
        parent, root = kernels.gw_parent(kind, n, rng)
        out[r] = kernels.records_in_tree(parent, root, n, rng)
    return out


@njit(cache=True, nogil=True)
def cayley_records_batch(n, count, rng):
    out = np.empty(count, dtype=np.int64)
    for r in range(count):
        parent, root = kernels.cayley_parent(n, rng)
        out[r] = kernels.records_in_tree(parent, root, n, rng)
    return out


@njit(cache=True, nogil=True)
def spanned_edges_batch(n, k, count, rng):
    """Edges of the subtree spanned by the root and k uniform vertices of a
    uniform Cayley tree, for ``count`` independent draws."""
    out = np.empty(count, dtype=np.int64)
    mark = np.zeros(n + 1, dtype=np.int64)
    for r in range(count):
        parent, root = kernels.cayley_parent(n, rng)
        mark[root] = r + 1
        edges = 0
        for i in range(k):
            u = rng.integers(1, n + 1)
            while mark[u] != r + 1:
                mark[u] = r + 1
                edges += 1
                u = parent[u]
        out[r] = edges
    return out


def ordered_cut_counts(t: RootedTree, S: Sequence[int], rng) -> tuple[int, ...]:
    """(M_1, ..., M_k) of ordered cutting via the records fast path."""
    S = _check_targets(t, S)
    Ms = ordered_cut_records(np.asarray(t.parent), t.n, np.asarray(S, dtype=np.int64), as_generator(rng))
    return tuple(int(x) for x in Ms)
