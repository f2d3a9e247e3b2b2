import math

import numpy as np
import pytest
from scipy import integrate, stats as sps

from treecut.errors import InvalidParameterError
from treecut.stats import (
    EmpiricalDistribution,
    ReferenceLaw,
    chi2k_cdf,
    chi2k_pdf,
    chi_square,
    ks_distance,
    moment_check,
    rayleigh_cdf,
    tv_distance,
)


def test_rayleigh_values():
    assert rayleigh_cdf(0) == 0
    assert rayleigh_cdf(math.sqrt(2 * math.log(2))) == pytest.approx(0.5, abs=1e-15)
    for x in (0.3, 1.0, 2.5):
        assert 1 - rayleigh_cdf(x) == pytest.approx(math.exp(-x * x / 2), rel=1e-12)
    with pytest.warns(RuntimeWarning):
        assert rayleigh_cdf(-1.0) == 0


def test_chi2k_reduces_to_rayleigh():
    for x in np.linspace(0, 6, 61):
        assert abs(chi2k_cdf(1, x) - rayleigh_cdf(x)) < 1e-12


def test_chi2k_against_quadrature():
    for k in (1, 2, 3, 5):
        for x in (0.0, 0.7, 1.9, 3.3):
            q, _ = integrate.quad(lambda s: chi2k_pdf(k, s), 0, x, epsabs=1e-14, epsrel=1e-13)
            assert abs(q - chi2k_cdf(k, x)) < 1e-10


def test_chi2k_is_chi_with_2k_dof():
    for k in (1, 2, 3):
        for x in (0.5, 1.5, 3.0):
            assert chi2k_cdf(k, x) == pytest.approx(sps.chi.cdf(x, 2 * k), abs=1e-12)


def test_chi2k_invalid_k():
    with pytest.raises(InvalidParameterError):
        chi2k_cdf(0, 1.0)


def test_reference_law_normalised_and_monotone():
    grid = np.linspace(0, 10, 2001)
    for k in (1, 2, 3):
        law = ReferenceLaw(k)
        assert abs(law.mass() - 1) < 1e-10
        F = law.cdf(grid)
        assert np.all(np.diff(F) >= 0) and F[0] == 0 and F[-1] <= 1
        assert np.allclose(F, [chi2k_cdf(k, x) for x in grid], atol=1e-14)


def test_moments():
    law = ReferenceLaw.rayleigh()
    assert law.moment(1) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-10)
    assert law.moment(2) == pytest.approx(2, rel=1e-10)
    with pytest.raises(InvalidParameterError):
        moment_check([1.0], law, 3)


def test_ks_examples():
    law = ReferenceLaw.rayleigh()
    assert ks_distance([math.sqrt(2 * math.log(2))], law) == pytest.approx(0.5)
    assert ks_distance([40.0] * 5, law) == pytest.approx(1.0)
    g = np.random.default_rng(1)
    x = g.rayleigh(size=10 ** 5)
    d = ks_distance(x, law)
    assert d < 0.01
    assert d == pytest.approx(sps.kstest(x, "rayleigh").statistic, abs=1e-12)


def test_ks_invariant_under_reparameterisation():
    g = np.random.default_rng(2)
    x = g.rayleigh(size=500)
    law = ReferenceLaw.rayleigh()
    scaled = ReferenceLaw(1, 3.0)
    assert ks_distance(3.0 * x, scaled) == pytest.approx(ks_distance(x, law), abs=1e-12)


def test_empirical_distribution():
    e = EmpiricalDistribution([3, 1, 2])
    assert e.samples.tolist() == [1, 2, 3] and e.N == 3
    assert e.cdf(2) == pytest.approx(2 / 3)
    with pytest.raises(InvalidParameterError):
        EmpiricalDistribution([])


def test_tv_and_chi_square():
    assert tv_distance({1: 0.5, 2: 0.5}, {1: 1.0}) == pytest.approx(0.5)
    stat, df, p = chi_square([10, 10], [10, 10])
    assert stat == 0 and df == 1 and p == 1
