import collections

import numpy as np
import pytest

from conftest import chi2_uniform_p
from treecut.dynamics import (
    DynamicsState,
    ab_step,
    forest_to_tree,
    modified_dynamics,
    reverse_transform,
    tree_to_forest,
)
from treecut.oracle import enumerate_trees, exact_modified_dynamics_law, tree_key
from treecut.trees import OrderedForest, RootedTree, subtree_membership


def test_ab_step_examples():
    t = RootedTree([1, 1])
    s = ab_step(DynamicsState(t, 1), 1)
    assert s.tree == t
    s = ab_step(DynamicsState(t, 1), 2)
    assert s.tree == RootedTree([2, 2]) and s.last == 2


def test_ab_step_preserves_validity(gen):
    from treecut.samplers import sample_cayley

    state = DynamicsState(sample_cayley(8, gen))
    for _ in range(200):
        x = int(gen.integers(1, 9))
        state = ab_step(state, x)
        assert state.tree.root == x


def test_modified_dynamics_single_vertex(gen):
    t = RootedTree([1])
    tr = modified_dynamics(t, gen)
    assert tr.kappa == 1 and tr.sigma == (1,) and tr.that == t and tr.forest.k == 1


def test_modified_dynamics_invariants(gen):
    from treecut.samplers import sample_cayley

    for _ in range(200):
        t = sample_cayley(12, gen)
        tr = modified_dynamics(t, gen)
        assert tr.sigma[0] == 1 and all(a < b for a, b in zip(tr.sigma, tr.sigma[1:]))
        assert tr.vertices[-1] == t.root
        assert tr.forest.roots == tr.vertices
        assert tr.that.root == tr.vertices[0]
        chain = {tuple(sorted(p)) for p in zip(tr.vertices, tr.vertices[1:])}
        forest_edges = {tuple(sorted((v, int(tr.forest.parent[v])))) for v in range(1, 13)
                        if tr.forest.parent[v] != v}
        assert tr.that.edges() == frozenset(forest_edges | chain)
        # each effective vertex is alive when chosen
        alive = set(range(1, 13))
        for x in tr.vertices:
            assert x in alive
            alive -= subtree_membership(t, x)
        assert not alive


def test_effective_sequence_law_chi_square(gen):
    t = RootedTree([2, 2, 2, 3])
    law = exact_modified_dynamics_law(t)
    N = 40000
    counts = collections.Counter(modified_dynamics(t, gen).vertices for _ in range(N))
    assert set(counts) <= set(law.support())
    from scipy import stats

    outs = law.support()
    obs = [counts[o] for o in outs]
    exp = [N * float(law[o]) for o in outs]
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_tree_to_forest_examples():
    t = RootedTree([1, 1])
    f = tree_to_forest(t, 1)
    assert f.k == 1 and forest_to_tree(f) == (t, 1)
    f = tree_to_forest(t, 2)
    assert f.roots == (2, 1) and f.members() == [frozenset({2}), frozenset({1})]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_forest_bijection_exhaustive(n):
    seen = set()
    for t in enumerate_trees(n):
        for v in range(1, n + 1):
            f = tree_to_forest(t, v)
            assert forest_to_tree(f) == (t, v)
            seen.add(f.key())
    assert len(seen) == n ** n


def test_reverse_transform_examples(gen):
    t = RootedTree([1, 1, 2])
    single = OrderedForest(np.array(t.parent), (1,))
    assert reverse_transform(single, gen) == t
    two = OrderedForest(np.array([0, 1, 2]), (1, 2))
    for _ in range(10):
        assert reverse_transform(two, gen) == RootedTree([2, 2])


def test_reverse_transform_uniform_n3(gen):
    from treecut.samplers import sample_ordered_forest

    keys = {tree_key(t): i for i, t in enumerate(enumerate_trees(3))}
    counts = np.zeros(9)
    for _ in range(27000):
        counts[keys[tree_key(reverse_transform(sample_ordered_forest(3, gen), gen))]] += 1
    assert chi2_uniform_p(counts) > 1e-3
