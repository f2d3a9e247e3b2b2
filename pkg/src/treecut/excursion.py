"""Lattice-path codings of trees and the concatenation of pruned subtrees.

Children are visited in increasing label order.  Contour paths take a +1
step down each edge and a -1 step back up; Lukasiewicz paths take one step
of (offspring - 1) per vertex in preorder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import kernels
from .errors import IncompleteTraceError, InvalidSequenceError, InvalidSizeError
from .fragmentation import FragmentationTrace, grouped_chi_square, pruned_forest, _prune, _setup
from .rng import as_generator
from .trees import OrderedForest, RootedTree

KINDS = ("contour", "lukasiewicz")


@dataclass(frozen=True)
class LatticePath:
    """Integer steps plus, for concatenated paths, excursion boundaries.

    ``boundaries`` lists the step offsets where excursions start and end
    (0 first, len(steps) last).  A singleton subtree gives an empty
    excursion, so boundaries may repeat.
    """

    steps: np.ndarray
    kind: str
    boundaries: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown path kind {self.kind!r}")

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def heights(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.steps))).astype(np.int64)

    def excursions(self) -> list[np.ndarray]:
        b = self.boundaries or (0, len(self.steps))
        return [self.steps[b[i]:b[i + 1]] for i in range(len(b) - 1)]

    def excursion_lengths(self) -> list[int]:
        b = self.boundaries or (0, len(self.steps))
        return [b[i + 1] - b[i] for i in range(len(b) - 1)]


@njit(cache=True, nogil=True)
def _contour_from(root, start, child, steps, m, first, offset):
    """Append the contour of the subtree at ``root``; first[v] = visit index."""
    stack = np.empty(len(first), dtype=np.int64)
    it = np.empty(len(first), dtype=np.int64)
    top = 0
    stack[0] = root
    it[0] = start[root]
    first[root] = offset + m
    while top >= 0:
        u = stack[top]
        j = it[top]
        if j < start[u + 1]:
            it[top] = j + 1
            c = child[j]
            steps[m] = 1
            m += 1
            first[c] = offset + m
            top += 1
            stack[top] = c
            it[top] = start[c]
        else:
            top -= 1
            if top >= 0:
                steps[m] = -1
                m += 1
    return m


@njit(cache=True, nogil=True)
def forest_contour(fparent, roots, n):
    """Concatenated contours of the forest trees in the given order.

    Returns (steps, boundaries, first visit index of every vertex).
    """
    start, child = kernels.children_csr(fparent, n)
    steps = np.empty(max(2 * n, 1), dtype=np.int64)
    bounds = np.empty(len(roots) + 1, dtype=np.int64)
    first = np.full(n + 1, -1, dtype=np.int64)
    m = 0
    bounds[0] = 0
    for i in range(len(roots)):
        m = _contour_from(roots[i], start, child, steps, m, first, 0)
        bounds[i + 1] = m
    return steps[:m], bounds, first


def encode(t: RootedTree, kind: str = "contour") -> LatticePath:
    if kind == "contour":
        steps, bounds, _ = forest_contour(
            np.asarray(t.parent), np.array([t.root], dtype=np.int64), t.n
        )
        return LatticePath(steps, kind, (0, len(steps)))
    if kind == "lukasiewicz":
        children = t.children()
        steps = np.array([len(children[v]) - 1 for v in _preorder(t)], dtype=np.int64)
        return LatticePath(steps, kind, (0, len(steps)))
    raise ValueError(f"unknown path kind {kind!r}")


def _preorder(t: RootedTree) -> list[int]:
    children = t.children()
    out = []
    stack = [t.root]
    while stack:
        u = stack.pop()
        out.append(u)
        stack.extend(reversed(children[u]))
    return out


def preorder_relabel(t: RootedTree) -> RootedTree:
    """The same ordered shape with vertices renamed 1..n in preorder."""
    order = _preorder(t)
    new = {v: i for i, v in enumerate(order, start=1)}
    p = np.zeros(t.n + 1, dtype=np.int64)
    for v in order:
        p[new[v]] = new[int(t.parent[v])]
    return RootedTree.from_array(p, validate=False)


def decode(path: LatticePath) -> RootedTree:
    """Tree with preorder labels 1..n whose label-ordered coding is ``path``."""
    steps = [int(s) for s in path.steps]
    if path.kind == "contour":
        parent = [0, 1]
        stack = [1]
        for s in steps:
            if s == 1:
                parent.append(stack[-1])
                stack.append(len(parent) - 1)
            elif s == -1 and len(stack) > 1:
                stack.pop()
            else:
                raise InvalidSequenceError(len(parent), "not a contour excursion")
        if len(stack) != 1:
            raise InvalidSequenceError(len(steps), "contour does not return to 0")
        return RootedTree.from_array(np.array(parent, dtype=np.int64), validate=False)
    if path.kind == "lukasiewicz":
        n = len(steps)
        if n == 0 or sum(steps) != -1 or any(s < -1 for s in steps):
            raise InvalidSequenceError(1, "not a Lukasiewicz path")
        h = np.cumsum(steps)
        if (h[:-1] < 0).any():
            raise InvalidSequenceError(int(np.argmax(h[:-1] < 0)) + 1, "path hits -1 early")
        counts = np.array(steps, dtype=np.int64) + 1
        p = kernels.lukasiewicz_to_parent(counts, np.arange(1, n + 1, dtype=np.int64))
        return RootedTree.from_array(p, validate=False)
    raise ValueError(f"unknown path kind {path.kind!r}")


def _forest_arrays(f: OrderedForest):
    return np.asarray(f.parent), np.array(f.roots, dtype=np.int64)


def bridge_transform(t: RootedTree, trace: FragmentationTrace) -> LatticePath:
    """Contours of the pruned subtrees concatenated in cut order, earliest
    on the left; the root's piece comes last."""
    if not trace.complete:
        raise IncompleteTraceError("bridge_transform needs a complete trace")
    f = pruned_forest(trace, t)
    fp, roots = _forest_arrays(f)
    steps, bounds, _ = forest_contour(fp, roots, t.n)
    return LatticePath(steps, "contour", tuple(int(b) for b in bounds))


@dataclass(frozen=True)
class Mark:
    """y_i for effective cut i (1-based), the piece holding it and its
    first-visit offset in the concatenated path."""

    i: int
    y: int
    piece: int
    position: int


def attachment_marks(trace: FragmentationTrace, t: RootedTree) -> list[Mark]:
    if not trace.complete:
        raise IncompleteTraceError("attachment_marks needs a complete trace")
    f = pruned_forest(trace, t)
    fp, roots = _forest_arrays(f)
    _, _, first = forest_contour(fp, roots, t.n)
    tree_of = f.tree_index()
    out = []
    for i, x in enumerate(trace.cuts[:-1], start=1):
        y = int(t.parent[x])
        out.append(Mark(i, y, int(tree_of[y]) + 1, int(first[y])))
    return out


def check_path(path: LatticePath, trace: FragmentationTrace, t: RootedTree) -> list[str]:
    """Violations of the concatenation invariants (empty when all hold)."""
    bad = []
    h = path.heights
    if (h < 0).any():
        bad.append("negative height")
    if h[0] != 0 or h[-1] != 0:
        bad.append("path does not start and end at 0")
    b = path.boundaries
    if len(b) - 1 != trace.kappa:
        bad.append(f"{len(b) - 1} excursions for kappa={trace.kappa}")
    # a contour also returns to 0 between the root's children, so only
    # boundaries-are-zeros is required, not the converse
    if (h[list(b)] != 0).any():
        bad.append("path is not at 0 on an excursion boundary")
    sizes = pruned_forest(trace, t).sizes()
    if sorted(path.excursion_lengths()) != sorted(2 * (m - 1) for m in sizes):
        bad.append("excursion lengths differ from the pruned subtree sizes")
    return bad


@njit(cache=True, nogil=True)
def marks_batch(n, count, rng):
    """(forest key, attachment key) per run on uniform Cayley trees.

    forest key = sum_v fp[v] (n+1)^(v-1) + (roots as base-(n+1) digits) (n+1)^n;
    attachment key = y_1 + y_2 (n+1) + ... over all but the last cut.
    """
    fkeys = np.empty(count, dtype=np.int64)
    ykeys = np.empty(count, dtype=np.int64)
    base = n + 1
    xs = np.empty(n, dtype=np.int64)
    for r in range(count):
        parent, root = kernels.cayley_parent(n, rng)
        start, child = kernels.children_csr(parent, n)
        alive, pos, dead, stack = _setup(n)
        ndead = 0
        size = n
        kappa = 0
        while size > 0:
            x = alive[rng.integers(0, size)]
            size, ndead = _prune(x, size, start, child, alive, pos, dead, ndead, stack)
            xs[kappa] = x
            kappa += 1
        fp = parent.copy()
        for i in range(kappa):
            fp[xs[i]] = xs[i]
        key = 0
        w = 1
        for v in range(1, n + 1):
            key += fp[v] * w
            w *= base
        rk = 0
        wr = 1
        for i in range(kappa):
            rk += xs[i] * wr
            wr *= base
        fkeys[r] = key + rk * w
        yk = 0
        wy = 1
        for i in range(kappa - 1):
            yk += parent[xs[i]] * wy
            wy *= base
        ykeys[r] = yk
    return fkeys, ykeys


def _digits(key: int, base: int, count: int | None = None) -> list[int]:
    out = []
    while (count is None and key) or (count is not None and len(out) < count):
        key, d = divmod(key, base)
        out.append(d)
    return out


def attachment_marks_check(n: int, rng, replicates: int, alpha: float = 1e-3):
    """Chi-square of the attachment vector given the pruned forest against
    independent uniform parents over the later pieces."""
    from .oracle import MAX_DYNAMICS_N, product_attachment_law

    if not 2 <= n <= MAX_DYNAMICS_N:
        raise InvalidSizeError(f"attachment_marks_check supports 2 <= n <= {MAX_DYNAMICS_N}")
    fkeys, ykeys = marks_batch(n, replicates, as_generator(rng))
    pairs, freq = np.unique(np.stack([fkeys, ykeys], axis=1), axis=0, return_counts=True)
    base = n + 1
    counts: dict = {}
    forests: dict = {}
    for (fk, yk), c in zip(pairs.tolist(), freq.tolist()):
        if fk not in forests:
            fp = [0] + _digits(fk % base ** n, base, n)
            roots = tuple(_digits(fk // base ** n, base))
            forests[fk] = OrderedForest(np.array(fp, dtype=np.int64), roots)
        k = len(forests[fk].roots)
        counts.setdefault(fk, {})[tuple(_digits(yk, base, k - 1))] = c
    refs = {fk: product_attachment_law(forests[fk]) for fk in counts}
    return grouped_chi_square(f"marks n={n}", counts, refs, replicates, alpha)
