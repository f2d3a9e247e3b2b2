"""Compiled tree kernels shared by the samplers and simulators.

Trees are parent arrays of length n+1 with slot 0 unused and
``parent[root] == root``.  Every kernel that draws randomness takes a
numpy Generator so that compiled and interpreted code share one stream.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def prufer_decode(seq, n):
    """Tree on [n] from a Prufer sequence (length n-2), rooted at n."""
    parent = np.zeros(n + 1, dtype=np.int64)
    parent[n] = n
    if n == 1:
        parent[1] = 1
        return parent
    degree = np.ones(n + 1, dtype=np.int64)
    for x in seq:
        degree[x] += 1
    ptr = 1
    while degree[ptr] != 1:
        ptr += 1
    leaf = ptr
    for x in seq:
        parent[leaf] = x
        degree[x] -= 1
        if degree[x] == 1 and x < ptr:
            leaf = x
        else:
            ptr += 1
            while degree[ptr] != 1:
                ptr += 1
            leaf = ptr
    parent[leaf] = n
    return parent


@njit(cache=True, nogil=True)
def reroot_inplace(parent, v):
    """Flip parent pointers along the v-root path so that v becomes the root."""
    prev = v
    cur = parent[v]
    parent[v] = v
    while cur != prev:
        nxt = parent[cur]
        parent[cur] = prev
        if nxt == cur:
            break
        prev = cur
        cur = nxt


@njit(cache=True, nogil=True)
def cayley_parent(n, rng):
    """Uniform rooted labelled tree: Prufer decode plus an independent uniform root."""
    seq = np.empty(max(n - 2, 0), dtype=np.int64)
    for i in range(n - 2):
        seq[i] = rng.integers(1, n + 1)
    parent = prufer_decode(seq, n)
    root = rng.integers(1, n + 1)
    if root != n:
        reroot_inplace(parent, root)
    return parent, root


@njit(cache=True, nogil=True)
def children_csr(parent, n):
    """Children in CSR form: children of v are child[start[v]:start[v+1]], label-ascending."""
    start = np.zeros(n + 2, dtype=np.int64)
    for v in range(1, n + 1):
        if parent[v] != v:
            start[parent[v] + 1] += 1
    for v in range(1, n + 1):
        start[v + 1] += start[v]
    fill = start.copy()
    child = np.empty(max(start[n + 1], 1), dtype=np.int64)
    for v in range(1, n + 1):
        p = parent[v]
        if p != v:
            child[fill[p]] = v
            fill[p] += 1
    return start, child


@njit(cache=True, nogil=True)
def bfs_order(parent, root, n):
    start, child = children_csr(parent, n)
    order = np.empty(n, dtype=np.int64)
    order[0] = root
    head = 0
    tail = 1
    while head < tail:
        u = order[head]
        head += 1
        for j in range(start[u], start[u + 1]):
            order[tail] = child[j]
            tail += 1
    return order


@njit(cache=True, nogil=True)
def records_in_tree(parent, root, n, rng):
    """Number of vertices whose uniform label is the minimum on their root path."""
    order = bfs_order(parent, root, n)
    pathmin = np.empty(n + 1, dtype=np.float64)
    count = 0
    for u in order:
        x = rng.random()
        if u == root:
            pathmin[u] = x
            count += 1
        else:
            m = pathmin[parent[u]]
            if x < m:
                count += 1
                pathmin[u] = x
            else:
                pathmin[u] = m
    return count


@njit(cache=True, nogil=True)
def lukasiewicz_to_parent(counts, labels):
    """Plane tree from preorder offspring counts; preorder slot i gets labels[i]."""
    n = len(counts)
    parent = np.zeros(n + 1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    remaining = np.empty(n, dtype=np.int64)
    top = -1
    for i in range(n):
        v = labels[i]
        if top < 0:
            parent[v] = v
        else:
            parent[v] = stack[top]
            remaining[top] -= 1
            if remaining[top] == 0:
                top -= 1
        if counts[i] > 0:
            top += 1
            stack[top] = v
            remaining[top] = counts[i]
    return parent


@njit(cache=True, nogil=True)
def cycle_rotate(counts):
    """Rotate so that the Lukasiewicz walk first hits -1 at its final step."""
    n = len(counts)
    s = 0
    best = 1
    arg = 0
    for i in range(n):
        s += counts[i] - 1
        if s < best:
            best = s
            arg = i
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = counts[(arg + 1 + i) % n]
    return out


@njit(cache=True, nogil=True)
def shuffle_inplace(a, rng):
    for i in range(len(a) - 1, 0, -1):
        j = rng.integers(0, i + 1)
        a[i], a[j] = a[j], a[i]


@njit(cache=True, nogil=True)
def poisson1_counts(n, rng):
    # i.i.d. Poisson(1) conditioned on sum n-1 is multinomial: n-1 balls in n boxes.
    counts = np.zeros(n, dtype=np.int64)
    for _ in range(n - 1):
        counts[rng.integers(0, n)] += 1
    return counts


@njit(cache=True, nogil=True)
def geometric_counts(n, rng):
    # Conditioned geometric(1/2) counts form a uniform weak composition of n-1
    # into n parts: choose n-1 bar positions among 2n-2 slots.
    total = 2 * n - 2
    slots = np.zeros(total, dtype=np.int64)
    for i in range(n - 1):
        slots[i] = 1
    shuffle_inplace(slots, rng)
    counts = np.zeros(n, dtype=np.int64)
    part = 0
    for s in slots:
        if s == 1:
            part += 1
        else:
            counts[part] += 1
    return counts


@njit(cache=True, nogil=True)
def binary_counts(n, rng):
    counts = np.zeros(n, dtype=np.int64)
    for i in range((n - 1) // 2):
        counts[i] = 2
    shuffle_inplace(counts, rng)
    return counts


@njit(cache=True, nogil=True)
def random_labels(n, rng):
    labels = np.arange(1, n + 1).astype(np.int64)
    shuffle_inplace(labels, rng)
    return labels


@njit(cache=True, nogil=True)
def gw_parent(kind, n, rng):
    """Conditioned GW tree for the closed-form laws (0 poisson1, 1 geometric, 2 binary)."""
    if kind == 0:
        counts = poisson1_counts(n, rng)
    elif kind == 1:
        counts = geometric_counts(n, rng)
    else:
        counts = binary_counts(n, rng)
    rot = cycle_rotate(counts)
    labels = random_labels(n, rng)
    return lukasiewicz_to_parent(rot, labels), labels[0]
