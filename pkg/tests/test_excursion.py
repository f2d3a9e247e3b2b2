import numpy as np
import pytest

from treecut.errors import IncompleteTraceError, InvalidSequenceError
from treecut.excursion import (
    KINDS,
    LatticePath,
    attachment_marks,
    attachment_marks_check,
    bridge_transform,
    check_path,
    decode,
    encode,
    preorder_relabel,
)
from treecut.fragmentation import fragment, pruned_forest
from treecut.oracle import enumerate_trees
from treecut.samplers import sample_cayley
from treecut.trees import RootedTree


def test_encode_examples():
    assert len(encode(RootedTree([1]), "contour")) == 0
    p = encode(RootedTree([1, 1, 2]), "contour")
    assert p.steps.tolist() == [1, 1, -1, -1] and p.heights.tolist() == [0, 1, 2, 1, 0]
    assert encode(RootedTree([1, 1, 1]), "lukasiewicz").steps.tolist() == [1, -1, -1]


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("kind", KINDS)
def test_roundtrip_exhaustive(n, kind):
    for t in enumerate_trees(n):
        p = encode(t, kind)
        d = decode(p)
        assert d == preorder_relabel(t)
        assert np.array_equal(encode(d, kind).steps, p.steps)
        if kind == "contour":
            assert len(p) == 2 * (n - 1) and p.heights.min() >= 0
        else:
            assert len(p) == n and p.heights[-1] == -1 and p.heights[:-1].min() >= 0


def test_decode_rejects_bad_paths():
    with pytest.raises(InvalidSequenceError):
        decode(LatticePath(np.array([1, -1, -1]), "contour"))
    with pytest.raises(InvalidSequenceError):
        decode(LatticePath(np.array([-1, 1, -1]), "lukasiewicz"))


def test_bridge_single_vertex(gen):
    t = RootedTree([1])
    tr = fragment(t, 1.0, gen)
    p = bridge_transform(t, tr)
    assert len(p) == 0 and p.boundaries == (0, 0)
    assert attachment_marks(tr, t) == []


def test_bridge_invariants(gen):
    for _ in range(200):
        n = int(gen.integers(1, 80))
        t = sample_cayley(n, gen)
        tr = fragment(t, 1.0, gen)
        p = bridge_transform(t, tr)
        assert check_path(p, tr, t) == []
        assert len(p) == 2 * (n - tr.kappa)
        assert len(p.excursions()) == tr.kappa


def test_bridge_requires_complete_trace(gen):
    t = sample_cayley(300, gen)
    tr = fragment(t, 1.0, gen, horizon=1e-3)
    assert not tr.complete
    with pytest.raises(IncompleteTraceError):
        bridge_transform(t, tr)


def test_marks_lie_in_later_pieces(gen):
    for _ in range(100):
        t = sample_cayley(30, gen)
        tr = fragment(t, 1.0, gen)
        f = pruned_forest(tr, t)
        marks = attachment_marks(tr, t)
        assert len(marks) == tr.kappa - 1
        bounds = bridge_transform(t, tr).boundaries
        for m in marks:
            assert m.piece > m.i and m.y in f.members()[m.piece - 1]
            assert bounds[m.piece - 1] <= m.position <= bounds[m.piece]


def test_marks_n2(gen):
    for _ in range(50):
        t = sample_cayley(2, gen)
        tr = fragment(t, 1.0, gen)
        for m in attachment_marks(tr, t):
            assert m.y == t.root


def test_marks_conditional_uniformity(gen):
    res = attachment_marks_check(3, gen, 60000)
    assert res.passed, res.line()
