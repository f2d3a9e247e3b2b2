from fractions import Fraction

import pytest

from treecut.errors import BudgetExceededError
from treecut.oracle import (
    CHECKS,
    ExactDistribution,
    enumerate_forests,
    enumerate_trees,
    exact_cut_count_law,
    exact_cut_law,
    exact_key_law,
    exact_modified_dynamics_law,
    exact_records_law,
    exact_spanned_edges_law,
    exact_uniform_cut_law,
)
from treecut.trees import RootedTree


@pytest.mark.parametrize("n,count", [(1, 1), (2, 2), (3, 9), (4, 64)])
def test_enumerate_trees_counts(n, count):
    trees = enumerate_trees(n)
    assert len(trees) == count == len(set(trees))


def test_enumerate_forests_counts():
    assert [len(enumerate_forests(n)) for n in (1, 2, 3)] == [1, 4, 27]


def test_guards():
    with pytest.raises(BudgetExceededError):
        enumerate_trees(8)
    with pytest.raises(BudgetExceededError):
        exact_modified_dynamics_law(RootedTree([1] * 6))


def test_exact_distribution_basics():
    d = ExactDistribution.uniform("abc")
    assert d.is_normalized() and d["a"] == Fraction(1, 3)
    e = ExactDistribution.point("a")
    assert d.tv(e) == Fraction(2, 3)
    assert d.map(lambda x: x == "a")[False] == Fraction(2, 3)


def test_dynamics_small():
    assert exact_modified_dynamics_law(RootedTree([1])).items() == ExactDistribution.point((1,)).items()
    law = exact_key_law(2)
    assert len(law) == 4 and all(p == Fraction(1, 4) for _, p in law.items())


def test_cut_law_examples():
    assert exact_cut_count_law(RootedTree([1]), (1,))[1] == 1
    path = RootedTree([1, 1])
    law = exact_cut_count_law(path, (2,))
    assert law[1] == law[2] == Fraction(1, 2)
    joint = exact_cut_law(path, (2,))
    assert joint.is_normalized()


def test_spanned_edges_small():
    assert exact_spanned_edges_law(1, 1)[0] == 1
    law = exact_spanned_edges_law(2, 1)
    assert law[0] == law[1] == Fraction(1, 2)


def test_planted_law_departs_from_spanned_edges_for_two_targets():
    # literal planted cutting: P(M = 2) = 1/3 at n = 2, k = 2, against 1/4 for
    # the spanned-edges law shifted by k; see the decisions ledger
    planted = exact_uniform_cut_law(2, 2, "planted")
    ordered = exact_uniform_cut_law(2, 2, "ordered")
    span = exact_spanned_edges_law(2, 2).map(lambda m: m + 2)
    assert planted[2] == Fraction(1, 3)
    assert ordered[2] == span[2] == Fraction(1, 4)


def test_records_small():
    assert exact_records_law(RootedTree([1]))[1] == 1
    path = RootedTree([1, 1, 2])
    law = exact_records_law(path)
    assert law.is_normalized() and law.mean() == Fraction(11, 6)


@pytest.mark.parametrize("name,n,k", [
    ("key", 3, 1), ("forest", 3, 1), ("reverse", 3, 1), ("records", 4, 1),
    ("knodes", 3, 2), ("reorder", 3, 1), ("reorder-literal", 3, 2), ("cutonk", 3, 2),
])
def test_checks_pass(name, n, k):
    res = CHECKS[name](n, k)
    assert res.passed, res.line()
    assert res.line().startswith("PASS")
