import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate

from erasurelab.errors import ValidationError
from erasurelab.probmodel import (
    NoiseDistribution, entropy, gaussian_cdf, gaussian_pdf, renyi_cgf, varentropy,
)

mpmath.mp.dps = 50


def mp_entropy(probs):
    ps = [mpmath.mpf(p) for p in probs]
    return -sum(p * mpmath.log(p) for p in ps)


def mp_varentropy(probs):
    ps = [mpmath.mpf(p) for p in probs]
    h = mp_entropy(probs)
    return sum(p * (-mpmath.log(p) - h) ** 2 for p in ps)


def random_dist(draw_vals):
    v = np.asarray(draw_vals, dtype=float)
    v = v / v.sum()
    v[-1] = 1.0 - math.fsum(v[:-1])
    return NoiseDistribution(tuple(v))


dists = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6).map(random_dist)


class TestNoiseDistribution:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValidationError):
            NoiseDistribution((0.5, 0.5 + 1e-9))

    def test_rejects_zero(self):
        with pytest.raises(ValidationError):
            NoiseDistribution((1.0, 0.0))

    def test_rejects_d1(self):
        with pytest.raises(ValidationError):
            NoiseDistribution((1.0,))

    def test_no_renormalisation(self):
        P = NoiseDistribution((0.25, 0.75))
        assert P.probs == (0.25, 0.75)

    def test_parse(self):
        assert NoiseDistribution.parse("0.6, 0.4").probs == (0.6, 0.4)


@pytest.mark.parametrize("d", [2, 3, 4, 7])
def test_uniform_entropy_and_varentropy(d):
    U = NoiseDistribution.uniform(d)
    assert_allclose(entropy(U), math.log(d), rtol=1e-15)
    assert varentropy(U) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("probs", [(0.89, 0.11), (0.75, 0.25), (0.6, 0.4), (0.7, 0.1, 0.1, 0.1)])
def test_against_high_precision(probs):
    P = NoiseDistribution(probs)
    assert_allclose(entropy(P), float(mp_entropy(probs)), rtol=1e-14)
    assert_allclose(varentropy(P), float(mp_varentropy(probs)), rtol=1e-12)


def test_varentropy_075_formula():
    P = NoiseDistribution((0.75, 0.25))
    H = entropy(P)
    expected = 0.75 * (math.log(4 / 3) - H) ** 2 + 0.25 * (math.log(4) - H) ** 2
    assert_allclose(varentropy(P), expected, rtol=1e-13)


def test_psi_derivatives_at_zero():
    P = NoiseDistribution((0.6, 0.4))
    h = 1e-5
    d1 = (renyi_cgf(P, h) - renyi_cgf(P, -h)) / (2 * h)
    assert abs(d1 + entropy(P)) < 1e-8
    h2 = 1e-4
    d2 = (renyi_cgf(P, h2) - 2 * renyi_cgf(P, 0.0) + renyi_cgf(P, -h2)) / h2**2
    assert abs(d2 + varentropy(P)) < 1e-6
    assert renyi_cgf(P, 0.0) == 0.0


@settings(max_examples=200, deadline=None)
@given(P=dists, s1=st.floats(-3, 3), s2=st.floats(-3, 3))
def test_psi_concave(P, s1, s2):
    # -psi is a CGF, hence convex
    mid = renyi_cgf(P, 0.5 * (s1 + s2))
    assert -mid <= -0.5 * (renyi_cgf(P, s1) + renyi_cgf(P, s2)) + 1e-12


@settings(max_examples=200, deadline=None)
@given(P=dists)
def test_entropy_bounds(P):
    assert entropy(P) <= math.log(P.d) + 1e-12
    assert varentropy(P) >= 0.0


def test_varentropy_zero_iff_uniform_on_grid():
    for p in np.linspace(0.05, 0.95, 19):
        P = NoiseDistribution((p, 1.0 - p))
        if abs(p - 0.5) < 1e-12:
            assert varentropy(P) < 1e-15
            assert_allclose(entropy(P), math.log(2))
        else:
            assert varentropy(P) > 0
            assert entropy(P) < math.log(2)


def test_gaussian_cdf_values():
    assert gaussian_cdf(0.0) == 0.5
    assert abs(gaussian_cdf(10.0) - 1.0) < 1e-12
    ref, _ = integrate.quad(gaussian_pdf, -np.inf, 1.96, epsabs=1e-14)
    assert_allclose(gaussian_cdf(1.96), ref, atol=1e-13)
    assert_allclose(gaussian_cdf(1.96), 0.975, atol=1e-4)


@settings(max_examples=300)
@given(st.floats(-30, 30))
def test_gaussian_symmetry(x):
    assert abs(gaussian_cdf(x) + gaussian_cdf(-x) - 1.0) <= 1e-12


def test_gaussian_cdf_strictly_increasing():
    grid = np.linspace(-8, 8, 801)
    vals = np.array([gaussian_cdf(x) for x in grid])
    assert (np.diff(vals) > 0).all()


def test_gaussian_cdf_against_mpmath():
    for x in (-7.5, -3.0, -0.3, 0.7, 2.5):
        assert_allclose(gaussian_cdf(x), float(mpmath.ncdf(x)), rtol=1e-14)
