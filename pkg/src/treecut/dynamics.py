"""Aldous-Broder dynamics on rooted trees and the modified dynamics that
prunes subtrees in order, producing an ordered forest and a chained tree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import as_generator
from .trees import OrderedForest, RootedTree


@dataclass(frozen=True)
class DynamicsState:
    """T^m together with the last selected vertex x_m (the root of T^m for m >= 1)."""

    tree: RootedTree
    last: int | None = None


def ab_step(state: DynamicsState, x_next: int) -> DynamicsState:
    """One step of the dynamics.

    If x_next is the current root nothing moves.  Otherwise the edge above
    x_next is removed and the old root component hangs below x_next, which
    becomes the new root.
    """
    t = state.tree
    t.check_vertex(x_next)
    if x_next == t.root:
        return DynamicsState(t, x_next)
    p = np.array(t.parent)
    p[t.root] = x_next
    p[x_next] = x_next
    return DynamicsState(RootedTree.from_array(p, validate=False), x_next)


@dataclass(frozen=True)
class ModifiedTrace:
    sigma: tuple[int, ...]
    vertices: tuple[int, ...]
    forest: OrderedForest
    that: RootedTree

    @property
    def kappa(self) -> int:
        return len(self.vertices)

    @property
    def roots(self) -> tuple[int, ...]:
        return self.vertices


def _pruned_forest_and_chain(t: RootedTree, xs) -> tuple[OrderedForest, RootedTree]:
    """Forest obtained by cutting above each x in ``xs`` and the chained tree."""
    p = np.array(t.parent)
    for x in xs:
        p[x] = x
    forest = OrderedForest(p, xs, validate=False)
    q = p.copy()
    for a, b in zip(xs, xs[1:]):
        q[b] = a
    return forest, RootedTree.from_array(q, validate=False)


def modified_dynamics(t: RootedTree, rng) -> ModifiedTrace:
    """Run the modified dynamics on ``t`` driven by i.i.d. uniform vertices.

    Draws landing in already pruned subtrees are skipped in law: the next
    effective vertex is uniform on the surviving root component, and the
    number of draws it took is geometric with success probability
    (surviving size)/n.
    """
    gen = as_generator(rng)
    n = t.n
    children = t.children()
    alive = list(range(1, n + 1))
    pos = list(range(-1, n))  # pos[v] = index of v in alive
    sigma = []
    xs = []
    m = 0
    while True:
        size = len(alive)
        m += 1 if not sigma else int(gen.geometric(size / n))
        x = alive[int(gen.integers(0, size))]
        sigma.append(m)
        xs.append(x)
        if x == t.root:
            break
        stack = [x]
        while stack:
            u = stack.pop()
            i = pos[u]
            last = alive.pop()
            if last != u:
                alive[i] = last
                pos[last] = i
            pos[u] = -1
            stack.extend(c for c in children[u] if pos[c] >= 0)
    forest, that = _pruned_forest_and_chain(t, xs)
    return ModifiedTrace(tuple(sigma), tuple(xs), forest, that)


def reverse_transform(f: OrderedForest, rng) -> RootedTree:
    """Attach the root of each T_i (i < k) below a uniform vertex of
    T_{i+1}, ..., T_k; the result is rooted at the root of T_k."""
    gen = as_generator(rng)
    members = f.members()
    p = np.array(f.parent)
    # suffix[: sizes of T_{i+1..k}] lists exactly the vertices of T_{i+1..k}
    suffix = np.concatenate([np.array(sorted(m), dtype=np.int64) for m in reversed(members)])
    avail = 0
    order = []
    for i in range(f.k - 1, -1, -1):
        order.append((i, avail))
        avail += len(members[i])
    for i, count in order:
        if i == f.k - 1:
            continue
        p[f.roots[i]] = suffix[int(gen.integers(0, count))]
    return RootedTree.from_array(p, validate=False)


def tree_to_forest(t: RootedTree, v: int) -> OrderedForest:
    """Cut every edge on the path from v up to r(t).

    Components are listed along the path starting with the one containing v,
    so the component of r(t) comes last; each is rooted at its path vertex.
    """
    path = t.path_to_root(v)
    p = np.array(t.parent)
    for u in path:
        p[u] = u
    return OrderedForest(p, path, validate=False)


def forest_to_tree(f: OrderedForest) -> tuple[RootedTree, int]:
    """Inverse of :func:`tree_to_forest`: returns (tree, distinguished vertex)."""
    p = np.array(f.parent)
    for a, b in zip(f.roots, f.roots[1:]):
        p[a] = b
    return RootedTree.from_array(p, validate=False), f.roots[0]


def reverse_parent_law_check(f: OrderedForest):
    """Exact conditional law of the attachment vector (a(r(t_i), T))_{i<k}
    given F(T, X) = f, for T uniform; see :mod:`treecut.oracle`."""
    from .oracle import exact_attachment_law

    return exact_attachment_law(f)
