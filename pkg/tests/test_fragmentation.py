import collections
import math

import numpy as np
import pytest

from treecut.errors import IncompleteTraceError, InvalidParameterError
from treecut.fragmentation import (
    build_that_tree,
    first_span_cut_check,
    fragment,
    mass_integral,
    summary_batch,
    sup_local_time_gap,
)
from treecut.oracle import exact_records_law
from treecut.samplers import OffspringLaw, sample_cayley
from treecut.trees import RootedTree, subtree_membership


def test_single_vertex(gen):
    t = RootedTree([1])
    tr = fragment(t, 2.0, gen)
    assert tr.kappa == 1 and len(tr.tau) == 1 and tr.mu_after[0] == 0
    lam, integral = mass_integral(tr)
    assert integral == pytest.approx(tr.tau[0]) and lam == 0
    that, u, v = build_that_tree(tr, t)
    assert that == t and u == v == 1


def test_single_vertex_time_is_exponential(gen):
    taus = [fragment(RootedTree([1]), 2.0, gen).tau[0] for _ in range(20000)]
    assert abs(np.mean(taus) - 0.5) < 0.02


def test_two_vertex_path(gen):
    t = RootedTree([1, 1])
    first_nonroot = 0
    N = 20000
    for _ in range(N):
        tr = fragment(t, 1.0, gen)
        assert tr.kappa in (1, 2)
        first_nonroot += tr.cuts[0] == 2
    assert abs(first_nonroot / N - 0.5) < 0.02
    # kappa = 2 exactly when the first effective cut misses the root
    law = exact_records_law(t)
    assert float(law[2]) == 0.5


def test_bad_sigma(gen):
    with pytest.raises(InvalidParameterError):
        fragment(RootedTree([1]), 0.0, gen)


def test_trace_invariants(gen):
    for _ in range(100):
        n = int(gen.integers(1, 60))
        t = sample_cayley(n, gen)
        tr = fragment(t, 1.3, gen)
        mu = tr.mu_after
        assert np.all(np.diff(mu) <= 0) and mu[-1] == 0
        assert np.all(np.diff(tr.tau) > 0)
        # mu changes exactly at effective events
        before = np.concatenate(([n], mu[:-1]))
        assert np.array_equal(before != mu, tr.effective)
        assert tr.L[-1] == tr.kappa and tr.v == t.root
        # recompute the root component by search after every event
        alive = set(range(1, n + 1))
        for x, eff, m in zip(tr.vertex, tr.effective, mu):
            assert eff == (int(x) in alive)
            if eff:
                alive -= subtree_membership(t, int(x))
            assert len(alive) == m
        that, u, v = build_that_tree(tr, t)
        assert that.root == u and that.depth(v) == tr.kappa - 1
        lam = np.array([tr.Lambda(s) for s in tr.tau])
        arrivals = np.arange(1, len(tr.tau) + 1)
        assert np.all(np.diff(lam) >= 0) and np.all(lam <= arrivals / tr.rate + 1e-12)
        assert math.isfinite(tr.Lambda())


def test_lambda_bounded_by_time_in_mean(gen):
    # Lambda(t) <= t holds for the mean, not pathwise: Lambda counts arrivals
    t_fix = 0.3
    n = 50
    vals = []
    for _ in range(4000):
        tr = fragment(sample_cayley(n, gen), 1.0, gen)
        vals.append(tr.Lambda(t_fix))
    assert np.mean(vals) <= t_fix + 3 * np.std(vals) / np.sqrt(len(vals))


def test_horizon(gen):
    t = sample_cayley(200, gen)
    tr = fragment(t, 1.0, gen, horizon=0.05)
    assert np.all(tr.tau <= 0.05)
    if not tr.complete:
        with pytest.raises(IncompleteTraceError):
            mass_integral(tr)


def test_that_tree_uniform_n2(gen):
    N = 40000
    t_counts = collections.Counter()
    for _ in range(N):
        t = sample_cayley(2, gen)
        tr = fragment(t, 1.0, gen)
        that, u, v = build_that_tree(tr, t)
        t_counts[(that.parents(), v)] += 1
    assert len(t_counts) == 4
    for c in t_counts.values():
        assert abs(c / N - 0.25) < 0.015


def test_summary_matches_trace_statistics():
    # the batch summary and the full trace agree in law; compare means
    n, N = 60, 4000
    rows = summary_batch(n, N, np.random.default_rng(5))
    g = np.random.default_rng(6)
    traces = [fragment(sample_cayley(n, g), 1.0, g) for _ in range(N)]
    kap = np.array([tr.kappa for tr in traces])
    lam = np.array([mass_integral(tr)[0] for tr in traces])
    integ = np.array([mass_integral(tr)[1] for tr in traces])
    gap = np.array([sup_local_time_gap(tr) for tr in traces])
    for col, ref in zip(range(4), (kap, lam, integ, gap)):
        se = math.sqrt(rows[:, col].var() / N + ref.var() / N)
        assert abs(rows[:, col].mean() - ref.mean()) < 4 * se


def test_kappa_matches_records_law(gen):
    t = RootedTree([2, 2, 2, 3, 3])
    law = exact_records_law(t)
    N = 30000
    c = collections.Counter(fragment(t, 1.0, gen).kappa for _ in range(N))
    for k, p in law.items():
        assert abs(c[k] / N - float(p)) < 0.015


def test_gw_summary_batch(gen):
    rows = summary_batch(101, 50, gen, sigma=1.0, law=OffspringLaw.binary())
    assert rows.shape == (50, 4) and np.all(rows[:, 0] >= 1)


def test_first_span_cut_small(gen):
    res = first_span_cut_check(2, 1, gen, 20000)
    assert res.passed
    res = first_span_cut_check(3, 1, gen, 50000)
    assert res.passed, res.line()
