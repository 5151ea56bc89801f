"""Shifted Gartner-Ellis rate solver, Fenchel-Legendre transforms and the
closed-form moderate-deviations / mixed-regime predictions.

The shifted setting: a CGF expands as
    mu_n(theta0 + gamma_n y) = alpha_n + beta_n nu1 + beta_n gamma_n nu2_n(y),
nu2_n -> nu2 strictly convex with nu2(0) = 0, and then
    -log p_n{X_n / beta_n <= x}
        ~ -alpha_n + (theta0 x - nu1) beta_n + (y0 x - nu2(y0)) beta_n gamma_n
with nu2'(y0) = x.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .channel import AdditiveChannel, GeneralDmc, blahut_arimoto, cond_info_variance
from .errors import AmbiguousCaidError, ValidationError
from .probmodel import gaussian_cdf, varentropy

DERIV_STEP = 1e-6
SLOPE_TOL = 1e-10
NUMERIC_SLOPE_TOL = 1e-6


@dataclass(frozen=True)
class GeProblem:
    """Data of one shifted Gartner-Ellis evaluation.

    ``domain`` is the open interval G on which nu2 is C^2. Scales are power
    laws beta_n = n^beta_exp and gamma_n = n^-gamma_exp; alpha_n is any
    callable of n.
    """

    nu2: Callable[[float], float]
    x: float
    theta0: float = 0.0
    nu1: float = 0.0
    nu2_prime: Optional[Callable[[float], float]] = None
    domain: tuple = (-math.inf, math.inf)
    alpha: Callable[[float], float] = field(default=lambda n: 0.0)
    beta_exp: float = 1.0
    gamma_exp: float = 0.5
    quadratic: bool = False

    def __post_init__(self):
        if self.theta0 > 0:
            raise ValidationError("theta0 must be <= 0")
        if abs(self.nu2(0.0)) > 1e-12:
            raise ValidationError("nu2(0) must vanish")

    def slope(self, y):
        if self.nu2_prime is not None:
            return self.nu2_prime(y)
        return _richardson(self.nu2, y)

    def predicted_neglog(self, n, rate):
        """-alpha_n + (theta0 x - nu1) beta_n + rate beta_n gamma_n."""
        beta = n ** self.beta_exp
        gamma = n ** -self.gamma_exp
        return -self.alpha(n) + (self.theta0 * self.x - self.nu1) * beta + rate * beta * gamma


@dataclass(frozen=True)
class GeSolution:
    y0: float
    rate: float
    leading_term: float
    status: str = "ok"


def quadratic_problem(slope0, curvature, x, **kw):
    """nu2(y) = slope0 y + curvature y^2 / 2 with its analytic derivative."""
    return GeProblem(
        nu2=lambda y: slope0 * y + 0.5 * curvature * y * y,
        nu2_prime=lambda y: slope0 + curvature * y,
        x=x, quadratic=True, **kw,
    )


def _central(f, y, h):
    return (f(y + h) - f(y - h)) / (2.0 * h)


def _richardson(f, y, h=DERIV_STEP):
    h = h * max(1.0, abs(y))
    return (4.0 * _central(f, y, h / 2.0) - _central(f, y, h)) / 3.0


def _convexity_verified(f, lo, hi, samples=64):
    lo = max(lo, -50.0)
    hi = min(hi, 50.0)
    pts = np.linspace(lo, hi, samples + 2)[1:-1]
    for u, v in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (u + v)
        if f(mid) > 0.5 * (f(u) + f(v)) + 1e-12 * (1.0 + abs(f(u)) + abs(f(v))):
            return False
    return True


def _looks_quadratic(f, lo, hi):
    lo = max(lo, -10.0)
    hi = min(hi, 10.0)
    pts = np.linspace(lo, hi, 9)[1:-1]
    h = (hi - lo) / 16.0
    third = [f(p + 1.5 * h) - 3 * f(p + 0.5 * h) + 3 * f(p - 0.5 * h) - f(p - 1.5 * h) for p in pts]
    scale = 1.0 + max(abs(f(p)) for p in pts)
    return max(abs(v) for v in third) <= 1e-8 * scale


def ge_rate(problem):
    """Solve nu2'(y0) = x by bisection and return the rate y0 x - nu2(y0).

    The bracket grows geometrically from 0 until nu2' - x changes sign or
    the boundary of G is reached.
    """
    g = lambda y: problem.slope(y) - problem.x
    lo_lim, hi_lim = problem.domain
    margin = 1e-12 if problem.nu2_prime is not None else 2.0 * DERIV_STEP
    g0 = g(0.0)
    if g0 == 0.0:
        y0 = 0.0
    else:
        direction = 1.0 if g0 < 0 else -1.0
        limit = hi_lim if direction > 0 else lo_lim
        inner, step = 0.0, 1.0
        while True:
            outer = inner + direction * step
            if (direction > 0 and outer >= limit) or (direction < 0 and outer <= limit):
                outer = limit - direction * margin * max(1.0, abs(limit)) if math.isfinite(limit) else outer
                if not math.isfinite(outer) or (g(outer) < 0) == (g0 < 0):
                    raise ValidationError("x outside achievable slope range on the domain G")
                break
            if (g(outer) < 0) != (g0 < 0):
                break
            inner, step = outer, step * 2.0
            if step > 1e300:
                raise ValidationError("x outside achievable slope range on the domain G")
        a, b = sorted((inner, outer))
        ga = g(a)
        for _ in range(2000):
            mid = 0.5 * (a + b)
            if mid in (a, b):
                break
            gm = g(mid)
            if gm == 0.0:
                a = b = mid
                break
            if (gm < 0) == (ga < 0):
                a, ga = mid, gm
            else:
                b = mid
        y0 = 0.5 * (a + b)
        tol = SLOPE_TOL if problem.nu2_prime is not None else NUMERIC_SLOPE_TOL
        if abs(g(y0)) > tol * max(1.0, abs(problem.x)):
            raise ValidationError("x outside achievable slope range on the domain G")
    rate = y0 * problem.x - problem.nu2(y0)
    status = "ok"
    if not _convexity_verified(problem.nu2, lo_lim, hi_lim):
        status = "unverified"
    elif problem.theta0 < 0 and problem.beta_exp == problem.gamma_exp:
        quad = problem.quadratic or _looks_quadratic(problem.nu2, lo_lim, hi_lim)
        if not quad:
            status = "outside theorem hypotheses"
    return GeSolution(y0, rate, problem.theta0 * problem.x - problem.nu1, status)


GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def fenchel_legendre(xi, x, sign_domain="nonneg", certify=100, seed=0):
    """sup over s >= 0 (or s <= 0) of s x - xi(s), for convex xi.

    Golden-section search after geometric bracket expansion; returns inf
    when the objective keeps growing. The result is checked against
    ``certify`` randomly sampled chords.
    """
    sign = 1.0 if sign_domain in ("nonneg", "s>=0", "+") else -1.0
    obj = lambda u: sign * u * x - xi(sign * u)

    base = obj(0.0)
    hi, prev = 1.0, base
    while True:
        val = obj(hi)
        if val <= prev:
            break
        if hi > 1e12:
            return math.inf
        prev, hi = val, hi * 2.0
    lo = 0.0 if hi <= 2.0 else hi / 4.0
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = obj(c), obj(d)
    for _ in range(300):
        if b - a <= 1e-14 * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = obj(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = obj(d)
    best = max(base, fc, fd, obj(0.5 * (a + b)))
    if certify:
        rng = np.random.default_rng(seed)
        for u in rng.uniform(0.0, 2.0 * hi, size=certify):
            chord = obj(float(u))
            if chord > best:
                best = chord
    return best


@dataclass(frozen=True)
class RegimePrediction:
    """Closed-form asymptotics of the ensemble error probabilities.

    Moderate deviations (t < 1/2):
        -log E1 ~ e1_exponent * n^(1-2t)
        -log E2 >= e2_leading * n^(1-t) + e2_second_order * n^(1-2t)  (lower side)
    Mixed (t = 1/2):
        E1 -> e1_limit,  -log E2 >= e2_leading * sqrt(n) + e2_second_order
    """

    regime: str
    t: float
    a: float
    b: float
    V: float
    e1_exponent: Optional[float] = None
    e1_limit: Optional[float] = None
    e2_leading: float = 0.0
    e2_second_order: float = 0.0
    variance_used: str = "V(P)"

    @property
    def scales(self):
        if self.regime == "md":
            return {"e1": "n^(1-2t)", "e2_leading": "n^(1-t)", "e2_second_order": "n^(1-2t)"}
        return {"e1": "limit", "e2_leading": "sqrt(n)", "e2_second_order": "1"}

    def e1_value(self, n):
        """Leading-order E1: a probability in both regimes."""
        if self.regime == "md":
            return math.exp(-self.e1_exponent * n ** (1.0 - 2.0 * self.t))
        return self.e1_limit

    def e2_neglog_lower(self, n):
        """Lower-bound side of -log E[Pr(E2)] (without its o(.) remainder)."""
        return self.e2_leading * n ** (1.0 - self.t) + self.e2_second_order * n ** (1.0 - 2.0 * self.t)


def predict_md(a, b, t, V):
    if not (a > b > 0 and 0 < t < 0.5 and V > 0):
        raise ValidationError("moderate-deviations prediction needs a > b > 0, 0 < t < 1/2, V > 0")
    rate = (a - b) ** 2 / (2.0 * V)
    return RegimePrediction("md", t, a, b, V, e1_exponent=rate, e2_leading=b, e2_second_order=rate)


def predict_mixed(a, b, V):
    if not (b > 0 and V > 0):
        raise ValidationError("mixed-regime prediction needs b > 0, V > 0")
    return RegimePrediction(
        "mixed", 0.5, a, b, V,
        e1_limit=gaussian_cdf((b - a) / math.sqrt(V)),
        e2_leading=b, e2_second_order=(a - b) ** 2 / (2.0 * V),
    )


def predict(a, b, t, V):
    return predict_mixed(a, b, V) if t == 0.5 else predict_md(a, b, t, V)


def channel_dispersions(W, assume_unique_caid=False):
    """(V_min, V_max) of a channel.

    Additive channels have V_min = V_max = V(P). For a general DMC only the
    variance at the Blahut-Arimoto input is available, so the caller has to
    vouch that the capacity-achieving input is unique.
    """
    if isinstance(W, AdditiveChannel):
        v = varentropy(W.noise)
        return v, v
    add = W.as_additive() if isinstance(W, GeneralDmc) else None
    if add is not None:
        v = varentropy(add.noise)
        return v, v
    if not assume_unique_caid:
        raise AmbiguousCaidError(
            "V_min/V_max need the set of capacity-achieving inputs; pass "
            "assume_unique_caid=True if the optimiser is known to be unique"
        )
    res = blahut_arimoto(W)
    v = cond_info_variance(W, res.input_dist)
    return v, v


def predict_direct(W, a, b, t, assume_unique_caid=False):
    """Achievability-side predictions with the V_min / V_max selection rule."""
    vmin, vmax = channel_dispersions(W, assume_unique_caid)
    if t == 0.5:
        if a <= 0:
            return _relabel(predict_mixed(a, b, vmax), "V_max")
        return _relabel(predict_mixed(a, b, vmin), "V_min")
    return _relabel(predict_md(a, b, t, vmin), "V_min")


def _relabel(pred, which):
    return RegimePrediction(**{**pred.__dict__, "variance_used": which})


def pareto_curve(a, t, V, b_grid):
    """(b, E1 value, E2 exponent) along a grid of thresholds.

    For t < 1/2 the E1 value is the exponent (a-b)^2 / (2V) on n^(1-2t);
    at t = 1/2 it is the limiting probability.
    """
    rows = []
    for b in b_grid:
        pred = predict(a, b, t, V)
        e1 = pred.e1_exponent if pred.regime == "md" else pred.e1_limit
        rows.append((float(b), e1, pred.e2_leading))
    return rows
