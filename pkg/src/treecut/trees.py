"""Rooted labelled trees and ordered forests on {1, ..., n}.

A tree is stored as a parent array indexed by vertex label, with the root
marked by ``parent[root] == root``.  Slot 0 of the array is unused so that
labels index the array directly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySelectionError, InvalidTreeError, InvalidVertexError


def _as_parent_array(parents: Sequence[int]) -> np.ndarray:
    arr = np.zeros(len(parents) + 1, dtype=np.int64)
    arr[1:] = np.asarray(parents, dtype=np.int64)
    return arr


def _reaches_fixed_point(parent: np.ndarray) -> np.ndarray:
    """Iterate the parent map until every vertex sits at a fixed point."""
    anc = parent.copy()
    for _ in range(max(1, int(np.ceil(np.log2(max(len(parent), 2)))) + 1)):
        anc = anc[anc]
    return anc


def is_valid_parent_array(parents: Sequence[int]) -> bool:
    """True iff ``parents`` (parents of 1..n) encodes a rooted tree on [n]."""
    n = len(parents)
    if n == 0:
        return False
    arr = _as_parent_array(parents)
    if arr[1:].min() < 1 or arr[1:].max() > n:
        return False
    idx = np.arange(n + 1)
    roots = np.flatnonzero(arr[1:] == idx[1:]) + 1
    if len(roots) != 1:
        return False
    anc = _reaches_fixed_point(arr)
    return bool(np.all(anc[1:] == roots[0]))


class RootedTree:
    """Immutable rooted labelled tree on [n]."""

    __slots__ = ("_parent", "_root", "_children", "_depth", "_hash")

    def __init__(self, parents: Sequence[int]):
        self._init_from_array(_as_parent_array(parents), validate=True)

    @classmethod
    def from_array(cls, parent: np.ndarray, validate: bool = True) -> "RootedTree":
        """Build from a length n+1 array whose slot 0 is ignored."""
        self = object.__new__(cls)
        arr = np.array(parent, dtype=np.int64, copy=True)
        arr[0] = 0
        self._init_from_array(arr, validate)
        return self

    def _init_from_array(self, arr: np.ndarray, validate: bool) -> None:
        n = len(arr) - 1
        if validate:
            if n < 1:
                raise InvalidTreeError("a tree needs at least one vertex")
            if arr[1:].min() < 1 or arr[1:].max() > n:
                raise InvalidTreeError("parent labels must lie in 1..n")
            roots = np.flatnonzero(arr[1:] == np.arange(1, n + 1)) + 1
            if len(roots) != 1:
                raise InvalidTreeError(f"expected exactly one root, found {len(roots)}")
            if not np.all(_reaches_fixed_point(arr)[1:] == roots[0]):
                raise InvalidTreeError("parent array contains a cycle")
            root = int(roots[0])
        else:
            root = int(np.flatnonzero(arr[1:] == np.arange(1, n + 1))[0]) + 1
        arr.flags.writeable = False
        self._parent = arr
        self._root = root
        self._children = None
        self._depth = None
        self._hash = None

    @property
    def n(self) -> int:
        return len(self._parent) - 1

    @property
    def root(self) -> int:
        return self._root

    @property
    def parent(self) -> np.ndarray:
        """Read-only parent array of length n+1 (slot 0 unused)."""
        return self._parent

    def parents(self) -> tuple[int, ...]:
        return tuple(int(p) for p in self._parent[1:])

    def a(self, v: int) -> int:
        self.check_vertex(v)
        return int(self._parent[v])

    def check_vertex(self, v: int) -> None:
        if not (isinstance(v, (int, np.integer)) and 1 <= v <= self.n):
            raise InvalidVertexError(f"vertex {v!r} is not in 1..{self.n}")

    def children(self) -> list[list[int]]:
        """Children lists, each sorted by label; index 0 unused."""
        if self._children is None:
            ch: list[list[int]] = [[] for _ in range(self.n + 1)]
            for v in range(1, self.n + 1):
                p = int(self._parent[v])
                if p != v:
                    ch[p].append(v)
            self._children = ch
        return self._children

    def depths(self) -> np.ndarray:
        """Array of h_t(v), the number of edges from the root to v."""
        if self._depth is None:
            d = np.zeros(self.n + 1, dtype=np.int64)
            ch = self.children()
            queue = deque([self._root])
            while queue:
                u = queue.popleft()
                for c in ch[u]:
                    d[c] = d[u] + 1
                    queue.append(c)
            d.flags.writeable = False
            self._depth = d
        return self._depth

    def depth(self, v: int) -> int:
        self.check_vertex(v)
        return int(self.depths()[v])

    def edges(self) -> frozenset[tuple[int, int]]:
        """Unordered edge set as sorted pairs."""
        return frozenset(
            (min(v, int(p)), max(v, int(p)))
            for v, p in enumerate(self._parent[1:], start=1)
            if p != v
        )

    def path_to_root(self, v: int) -> list[int]:
        self.check_vertex(v)
        path = [v]
        while path[-1] != self._root:
            path.append(int(self._parent[path[-1]]))
        return path

    def bfs_order(self) -> list[int]:
        order = [self._root]
        ch = self.children()
        for u in order:
            order.extend(ch[u])
        return order

    def key(self) -> bytes:
        return self._parent.tobytes()

    def __eq__(self, other) -> bool:
        return isinstance(other, RootedTree) and np.array_equal(self._parent, other._parent)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._parent.tobytes())
        return self._hash

    def __repr__(self) -> str:
        return f"RootedTree({list(self.parents())})"


def reroot(t: RootedTree, v: int) -> RootedTree:
    """Return ``t`` rerooted at ``v``: parent pointers along the v-root path flip."""
    path = t.path_to_root(v)
    p = np.array(t.parent)
    for i in range(len(path) - 1, 0, -1):
        p[path[i]] = path[i - 1]
    p[v] = v
    return RootedTree.from_array(p, validate=False)


def subtree_membership(t: RootedTree, v: int) -> frozenset[int]:
    """Vertex set of t(v), the subtree of descendants of v (v included)."""
    t.check_vertex(v)
    ch = t.children()
    out = [v]
    for u in out:
        out.extend(ch[u])
    return frozenset(out)


@dataclass(frozen=True)
class SpannedSubtree:
    vertices: frozenset[int]
    root: int
    parent: dict = field(compare=False)

    @property
    def n_edges(self) -> int:
        return len(self.vertices) - 1


def spanned_subtree(t: RootedTree, selection: Iterable[int]) -> SpannedSubtree:
    """Union of the shortest paths between elements of ``selection``.

    The result is rooted at its vertex closest to r(t), with parents
    inherited from ``t``.
    """
    targets = set(selection)
    if not targets:
        raise EmptySelectionError("cannot span an empty vertex set")
    for v in targets:
        t.check_vertex(v)
    parent = t.parent
    marked: set[int] = set()
    marked_children: dict[int, list[int]] = {}
    for s in targets:
        v = s
        while v not in marked:
            marked.add(v)
            if v == t.root:
                break
            p = int(parent[v])
            marked_children.setdefault(p, []).append(v)
            v = p
    # Walk down from the root while the marked set does not branch.
    top = t.root
    above: set[int] = set()
    while top not in targets and len(marked_children.get(top, ())) == 1:
        above.add(top)
        top = marked_children[top][0]
    vertices = frozenset(marked - above)
    par = {v: int(parent[v]) for v in vertices if v != top}
    par[top] = top
    return SpannedSubtree(vertices, top, par)


@dataclass(frozen=True)
class PlantedTree:
    """t<S>: one extra leaf w_i = n + i hanging from each v_i.

    Planted vertices never count towards vertex counts.
    """

    base: RootedTree
    attach: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def k(self) -> int:
        return len(self.attach)

    @property
    def planted(self) -> tuple[int, ...]:
        return tuple(range(self.n + 1, self.n + self.k + 1))

    def is_planted(self, label: int) -> bool:
        return label > self.n

    @property
    def node_count(self) -> int:
        return self.n

    @property
    def n_edges(self) -> int:
        return self.n - 1 + self.k

    def planted_edge(self, i: int) -> tuple[int, int]:
        """Edge {v_i, w_i} for 1-based target index ``i``."""
        return (self.attach[i - 1], self.n + i)

    def edges(self) -> list[tuple[int, int]]:
        """Tree edges as (child, parent) followed by planted edges (v_i, w_i)."""
        par = self.base.parent
        out = [(v, int(par[v])) for v in range(1, self.n + 1) if par[v] != v]
        out.extend(self.planted_edge(i) for i in range(1, self.k + 1))
        return out


def plant(t: RootedTree, attach: Sequence[int]) -> PlantedTree:
    attach = tuple(int(v) for v in attach)
    for v in attach:
        t.check_vertex(v)
    return PlantedTree(t, attach)


class OrderedForest:
    """Sequence of rooted trees whose label sets partition [n].

    Stored as one parent array in which every tree root points to itself,
    together with the ordered tuple of roots.
    """

    __slots__ = ("_parent", "_roots", "_tree_of", "_members", "_hash")

    def __init__(self, parent: np.ndarray, roots: Sequence[int], validate: bool = True):
        arr = np.array(parent, dtype=np.int64, copy=True)
        arr[0] = 0
        roots = tuple(int(r) for r in roots)
        n = len(arr) - 1
        if validate:
            if n < 1:
                raise InvalidTreeError("a forest needs at least one vertex")
            if arr[1:].min() < 1 or arr[1:].max() > n:
                raise InvalidTreeError("parent labels must lie in 1..n")
            self_loops = set((np.flatnonzero(arr[1:] == np.arange(1, n + 1)) + 1).tolist())
            if len(set(roots)) != len(roots) or set(roots) != self_loops:
                raise InvalidTreeError("roots must be exactly the self-parented vertices")
            anc = _reaches_fixed_point(arr)
            if not np.all(arr[anc[1:]] == anc[1:]):
                raise InvalidTreeError("parent array contains a cycle")
        arr.flags.writeable = False
        self._parent = arr
        self._roots = roots
        self._tree_of = None
        self._members = None
        self._hash = None

    @classmethod
    def from_trees(cls, n: int, trees: Sequence[RootedTree | tuple[int, dict]]) -> "OrderedForest":
        """Build from ``(root, {vertex: parent})`` pairs, in order."""
        arr = np.zeros(n + 1, dtype=np.int64)
        roots = []
        for root, par in trees:
            roots.append(root)
            for v, p in par.items():
                arr[v] = p
        if np.any(arr[1:] == 0):
            raise InvalidTreeError("forest trees must cover 1..n")
        return cls(arr, roots)

    @property
    def n(self) -> int:
        return len(self._parent) - 1

    @property
    def k(self) -> int:
        return len(self._roots)

    @property
    def roots(self) -> tuple[int, ...]:
        return self._roots

    @property
    def parent(self) -> np.ndarray:
        return self._parent

    def tree_index(self) -> np.ndarray:
        """Array mapping each vertex to the 0-based index of its tree."""
        if self._tree_of is None:
            anc = _reaches_fixed_point(self._parent)
            pos = np.zeros(self.n + 1, dtype=np.int64)
            for i, r in enumerate(self._roots):
                pos[r] = i
            tree_of = pos[anc]
            tree_of[0] = -1
            tree_of.flags.writeable = False
            self._tree_of = tree_of
        return self._tree_of

    def members(self) -> list[frozenset[int]]:
        """Vertex sets of the trees, in forest order."""
        if self._members is None:
            groups: list[list[int]] = [[] for _ in self._roots]
            for v, i in enumerate(self.tree_index()[1:], start=1):
                groups[i].append(v)
            self._members = [frozenset(g) for g in groups]
        return self._members

    def sizes(self) -> list[int]:
        return [len(m) for m in self.members()]

    def tree_parent(self, i: int) -> dict[int, int]:
        """Parent map of the i-th tree (0-based)."""
        return {v: int(self._parent[v]) for v in sorted(self.members()[i])}

    def key(self) -> tuple[bytes, tuple[int, ...]]:
        return (self._parent.tobytes(), self._roots)

    def __eq__(self, other) -> bool:
        return isinstance(other, OrderedForest) and self.key() == other.key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self) -> str:
        parts = [f"{r}:{sorted(m)}" for r, m in zip(self._roots, self.members())]
        return f"OrderedForest(n={self.n}, [{', '.join(parts)}])"


# Serialisation ------------------------------------------------------------
# Tree line: ``n root p(1) ... p(n)``.  Forest: ``k`` followed by k tree lines,
# where labels outside a given tree carry parent 0.


def dumps_tree(t: RootedTree) -> str:
    return " ".join(map(str, [t.n, t.root, *t.parent[1:].tolist()]))


def loads_tree(line: str) -> RootedTree:
    fields = [int(x) for x in line.split()]
    n, root, parents = fields[0], fields[1], fields[2:]
    if len(parents) != n:
        raise InvalidTreeError(f"expected {n} parents, got {len(parents)}")
    t = RootedTree(parents)
    if t.root != root:
        raise InvalidTreeError(f"declared root {root} but parent array has root {t.root}")
    return t


def dumps_forest(f: OrderedForest) -> str:
    lines = [str(f.k)]
    for i, root in enumerate(f.roots):
        row = np.zeros(f.n + 1, dtype=np.int64)
        for v, p in f.tree_parent(i).items():
            row[v] = p
        lines.append(" ".join(map(str, [f.n, root, *row[1:].tolist()])))
    return "\n".join(lines)


def loads_forest(text: str) -> OrderedForest:
    lines = [ln for ln in text.strip().splitlines() if ln.strip() and not ln.startswith("#")]
    k = int(lines[0])
    if len(lines) != k + 1:
        raise InvalidTreeError(f"expected {k} tree lines, got {len(lines) - 1}")
    n = None
    trees = []
    for ln in lines[1:]:
        fields = [int(x) for x in ln.split()]
        if n is None:
            n = fields[0]
        elif fields[0] != n:
            raise InvalidTreeError("forest trees disagree on the ground set size")
        root = fields[1]
        par = {v: p for v, p in enumerate(fields[2:], start=1) if p != 0}
        if par.get(root) != root:
            raise InvalidTreeError(f"declared root {root} is not self-parented")
        trees.append((root, par))
    return OrderedForest.from_trees(n, trees)
