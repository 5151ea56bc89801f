import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from erasurelab.channel import AdditiveChannel, GeneralDmc, cond_info_variance
from erasurelab.errors import AmbiguousCaidError, ValidationError
from erasurelab.ldp import (
    GeProblem, channel_dispersions, fenchel_legendre, ge_rate, pareto_curve, predict,
    predict_direct, predict_md, predict_mixed, quadratic_problem,
)
from erasurelab.probmodel import gaussian_cdf, varentropy


def grid_legendre(f, x, lo, hi, pts=2_000_001):
    ys = np.linspace(lo, hi, pts)
    return float(np.max(ys * x - f(ys)))


def test_quadratic_example():
    sol = ge_rate(quadratic_problem(2.0, 1.0, 1.0))
    assert abs(sol.y0 + 1.0) < 1e-10
    assert abs(sol.rate - 0.5) < 1e-10
    assert sol.status == "ok"


def test_rate_zero_at_mean():
    sol = ge_rate(quadratic_problem(0.7, 2.0, 0.7))
    assert sol.y0 == 0.0 and sol.rate == 0.0


def test_non_quadratic_vs_grid():
    f = lambda y: np.exp(y) - 1.0 - y
    prob = GeProblem(nu2=lambda y: math.exp(y) - 1.0 - y, x=0.5)
    sol = ge_rate(prob)
    ref = grid_legendre(f, 0.5, -3, 3)
    assert abs(sol.rate - ref) < 1e-8
    assert_allclose(sol.y0, math.log(1.5), atol=1e-8)


def test_outside_hypotheses_label():
    prob = GeProblem(nu2=lambda y: math.exp(y) - 1.0 - y, x=0.5, theta0=-1.0, beta_exp=0.5, gamma_exp=0.5)
    assert ge_rate(prob).status == "outside theorem hypotheses"


def test_unverified_convexity():
    prob = GeProblem(nu2=lambda y: y - y**3 / 30.0, nu2_prime=lambda y: 1 - y**2 / 10.0, x=0.5)
    assert ge_rate(prob).status == "unverified"


def test_slope_out_of_range():
    prob = GeProblem(nu2=lambda y: math.exp(y) - 1.0 - y, x=-2.0)
    with pytest.raises(ValidationError):
        ge_rate(prob)


def test_domain_bounded():
    prob = GeProblem(nu2=lambda y: -math.log1p(-y) - y, x=3.0, domain=(-0.9, 1.0))
    sol = ge_rate(prob)
    assert_allclose(sol.y0, 1 - 1 / 4, atol=1e-8)


def test_problem_validation():
    with pytest.raises(ValidationError):
        quadratic_problem(1.0, 1.0, 0.0, theta0=0.5)
    with pytest.raises(ValidationError):
        GeProblem(nu2=lambda y: y + 1.0, x=0.0)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-3, 3), c=st.floats(0.05, 5), x=st.floats(-3, 3))
def test_quadratic_closed_form(a, c, x):
    sol = ge_rate(quadratic_problem(a, c, x))
    assert abs(sol.rate - (x - a) ** 2 / (2 * c)) <= 1e-10 * max(1.0, (x - a) ** 2 / (2 * c))


def test_rate_convex_in_x():
    xs = np.linspace(-1, 2, 31)
    r = np.array([ge_rate(GeProblem(nu2=lambda y: math.exp(y) - 1 - y, x=x)).rate for x in xs])
    assert np.min(r) == pytest.approx(0.0, abs=1e-12)
    assert (r[:-2] - 2 * r[1:-1] + r[2:] >= -1e-9).all()


def test_predicted_neglog():
    prob = quadratic_problem(1.0, 1.0, 0.5, theta0=-0.5, nu1=0.2, beta_exp=1.0, gamma_exp=0.5)
    sol = ge_rate(prob)
    n = 100
    assert_allclose(prob.predicted_neglog(n, sol.rate), (-0.25 - 0.2) * n + sol.rate * n * n**-0.5)


def test_fenchel_legendre_examples():
    assert_allclose(fenchel_legendre(lambda s: s * s / 2, 1.0), 0.5, atol=1e-12)
    assert fenchel_legendre(lambda s: s * s / 2, -1.0) == 0.0
    assert fenchel_legendre(lambda s: s, 2.0) == math.inf
    assert_allclose(fenchel_legendre(lambda s: s * s / 2, -1.0, sign_domain="nonpos"), 0.5, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(c=st.floats(0.1, 3), m=st.floats(-2, 2), x=st.floats(-3, 3), seed=st.integers(0, 100))
def test_fenchel_certificate(c, m, x, seed):
    xi = lambda s: m * s + c * s * s / 2 + 0.1 * s**4
    val = fenchel_legendre(xi, x, certify=100, seed=seed)
    for s in np.random.default_rng(seed + 1).uniform(0, 10, 100):
        assert val >= s * x - xi(s) - 1e-12
    ref = grid_legendre(xi, x, 0.0, 10.0, 200_001)
    assert val >= ref - 1e-9


def test_predict_md_example():
    p = predict_md(2.0, 1.0, 0.3, 1.0)
    assert p.e1_exponent == 0.5 and p.e2_leading == 1.0 and p.e2_second_order == 0.5
    assert p.scales["e1"] == "n^(1-2t)"
    assert predict_md(1.0, 1.0 - 1e-9, 0.3, 1.0).e1_exponent < 1e-15
    with pytest.raises(ValidationError):
        predict_md(1.0, 2.0, 0.3, 1.0)


def test_predict_md_vs_ge():
    p = predict_md(0.9, 0.4, 0.2, 0.3)
    sol = ge_rate(quadratic_problem(0.9, 0.3, 0.4))
    assert_allclose(sol.rate, p.e1_exponent, rtol=1e-10)


def test_predict_mixed_examples():
    assert predict_mixed(0.4, 0.4, 1.0).e1_limit == 0.5
    assert_allclose(predict_mixed(1.0, 0.5, 0.25).e1_limit, gaussian_cdf(-1.0))
    p = predict_mixed(0.3, 1e-9, 0.04)
    assert p.e2_leading < 1e-8


def test_continuity_across_half():
    a, b, V, n = 0.5, 0.2, 0.3, 400
    md = predict(a, b, 0.5 - 1e-9, V)
    mx = predict(a, b, 0.5, V)
    assert_allclose(md.e2_leading * n ** (1 - md.t), mx.e2_leading * math.sqrt(n), rtol=1e-6)


def test_predict_direct_additive():
    ch = AdditiveChannel.from_probs((0.6, 0.4))
    V = varentropy(ch.noise)
    assert predict_direct(ch, 0.3, 0.1, 0.5).e1_limit == predict_mixed(0.3, 0.1, V).e1_limit
    assert predict_direct(ch, 0.3, 0.1, 0.3).e1_exponent == predict_md(0.3, 0.1, 0.3, V).e1_exponent
    assert predict_direct(ch, -0.2, 0.1, 0.5).variance_used == "V_max"
    assert predict_direct(ch, 0.2, 0.1, 0.5).variance_used == "V_min"


def test_predict_direct_bsc_matrix():
    W = GeneralDmc(np.array([[0.89, 0.11], [0.11, 0.89]]))
    v = cond_info_variance(W, [0.5, 0.5])
    assert_allclose(predict_direct(W, 0.3, 0.1, 0.3).V, v, rtol=1e-12)


def test_ambiguous_caid():
    W = GeneralDmc(np.array([[0.7, 0.2, 0.1], [0.1, 0.1, 0.8]]))
    with pytest.raises(AmbiguousCaidError):
        channel_dispersions(W)
    lo, hi = channel_dispersions(W, assume_unique_caid=True)
    assert lo == hi > 0


def test_pareto_curve_monotone():
    rows = pareto_curve(1.0, 0.3, 0.5, np.linspace(0.01, 0.99, 50))
    e1 = [r[1] for r in rows]
    e2 = [r[2] for r in rows]
    assert all(x > y for x, y in zip(e1, e1[1:]))
    assert all(x < y for x, y in zip(e2, e2[1:]))
    assert_allclose(rows[0][1], 0.99**2, rtol=1e-12)
    assert rows[-1][1] < 1e-3
