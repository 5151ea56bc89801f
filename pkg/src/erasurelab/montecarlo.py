"""Monte Carlo estimation of ensemble error probabilities via the statistic

    F_n = log sum_{m' != 1} W^n(Y | X_m') - log W^n(Y | X_1).

Under the P-measure Y is produced from codeword 1; under Q' it is produced
from a uniformly chosen competitor. A Forney decoder with margin
c = n T_n decodes message 1 iff F_n <= -c, hence

    E[Pr(E1)] = P(F_n > -c),
    E[Pr(E2)] = (M - 1) Q'(F_n <= -c) = E_P[exp(F_n) 1{F_n <= -c}].

Two samplers draw F_n. ``direct`` builds a fresh uniform codebook per trial
(cost O(M n)). ``types`` uses that for an additive channel the shifted
competitors y - X_m' are i.i.d. uniform and independent of the noise, so
only their type-class counts matter: a single multinomial draw over the
n-types (cost O(#types), independent of M). Both have the same law.

Trials are cut into fixed blocks of BLOCK; block k draws from
``stream(seed, measure, k)``, so output never depends on the worker count.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .channel import AdditiveChannel, log_likelihood_matrix
from .coding import RegimeParams, code_size, stream
from .decoder import ERASURE
from .errors import ValidationError
from .typesys import count_types, type_table

log = logging.getLogger(__name__)

BLOCK = 8192
MAX_TYPES = 200_000
_CELLS = 1 << 22

P_MEASURE = "P"
Q_MEASURE = "Q'"
_MEASURE_KEY = {P_MEASURE: 0, Q_MEASURE: 1}


@dataclass(frozen=True)
class McConfig:
    channel: AdditiveChannel
    n: int
    M: int
    level: float
    sampler: str = "auto"
    t: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None

    def __post_init__(self):
        if self.M < 2:
            raise ValidationError("Monte Carlo estimation needs M >= 2")
        if self.sampler not in ("auto", "direct", "types"):
            raise ValidationError(f"unknown sampler {self.sampler!r}")
        if self.resolved_sampler == "direct" and self.M > 10**6:
            log.warning("direct sampling with M=%d costs O(M n) per trial", self.M)

    @classmethod
    def from_regime(cls, channel, params, M=None, sampler="auto"):
        if M is None:
            M = code_size(params)
        return cls(channel, params.n, M, params.level, sampler, params.t, params.a, params.b)

    @property
    def resolved_sampler(self):
        if self.sampler != "auto":
            return self.sampler
        K = count_types(self.n, self.channel.d)
        if K > MAX_TYPES or self.M * self.n <= 8 * K:
            return "direct"
        return "types"


@dataclass(frozen=True)
class FnSample:
    value: float
    measure: str


@dataclass(frozen=True)
class ErrorEstimate:
    estimate: float
    trials: int
    std_error: float
    ci_radius: float
    estimator_id: str
    hits: int
    ci_low: float
    ci_high: float
    z: float = 1.96
    zero_hit: bool = False

    @property
    def relative_error(self):
        return self.std_error / self.estimate if self.estimate > 0 else math.inf


@dataclass(frozen=True)
class EmpiricalCgf:
    theta_grid: np.ndarray
    values: np.ndarray
    sample_count: int


def fn_value(cb, ch, y, m=1):
    """F for a given codebook and output, relative to message m (1-based)."""
    L = log_likelihood_matrix(ch, cb.words, np.asarray(y)[None, :])[0]
    return float(logsumexp(np.delete(L, m - 1)) - L[m - 1])


def _direct_block(cfg, size, rng, measure):
    ch, n, M, d = cfg.channel, cfg.n, cfg.M, cfg.channel.d
    logp = ch.log_noise
    out = np.empty(size)
    step = max(1, _CELLS // (M * n))
    for lo in range(0, size, step):
        k = min(step, size - lo)
        words = rng.integers(0, d, size=(k, M, n))
        z = rng.choice(d, size=(k, n), p=ch.noise.array)
        if measure == P_MEASURE:
            sender = np.zeros(k, dtype=np.int64)
        else:
            sender = rng.integers(1, M, size=k)
        y = (words[np.arange(k), sender] + z) % d
        L = logp[(y[:, None, :] - words) % d].sum(axis=-1)
        out[lo:lo + k] = logsumexp(L[:, 1:], axis=1) - L[:, 0]
    return out


def _types_block(cfg, size, rng, measure):
    ch, n, M, d = cfg.channel, cfg.n, cfg.M, cfg.channel.d
    logp = ch.log_noise
    counts, w = type_table(n, d)
    lp = counts @ logp
    out = np.empty(size)
    step = max(1, _CELLS // len(w))
    uniform = np.full(d, 1.0 / d)
    for lo in range(0, size, step):
        k = min(step, size - lo)
        if measure == P_MEASURE:
            own = rng.multinomial(n, ch.noise.array, size=k) @ logp
            ncomp, extra = M - 1, None
        else:
            own = rng.multinomial(n, uniform, size=k) @ logp
            extra = rng.multinomial(n, ch.noise.array, size=k) @ logp
            ncomp = M - 2
        if ncomp > 0:
            N = rng.multinomial(ncomp, w, size=k)
            with np.errstate(divide="ignore"):
                logS = logsumexp(np.log(N) + lp[None, :], axis=1)
        else:
            logS = np.full(k, -np.inf)
        if extra is not None:
            logS = np.logaddexp(logS, extra)
        out[lo:lo + k] = logS - own
    return out


def _block(args):
    cfg, seed, measure, k, size = args
    rng = stream(seed, _MEASURE_KEY[measure], k)
    if cfg.resolved_sampler == "direct":
        return _direct_block(cfg, size, rng, measure)
    return _types_block(cfg, size, rng, measure)


def fn_samples(cfg, trials, seed, measure=P_MEASURE, workers=1):
    """``trials`` i.i.d. draws of F_n under the chosen measure."""
    if measure not in _MEASURE_KEY:
        raise ValidationError(f"unknown measure {measure!r}")
    if trials < 1:
        raise ValidationError("need at least one trial")
    jobs = [
        (cfg, seed, measure, k, min(BLOCK, trials - k * BLOCK))
        for k in range(-(-trials // BLOCK))
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block, jobs))
    else:
        parts = [_block(job) for job in jobs]
    return np.concatenate(parts)


def sample_Fn(cfg, rng, measure=P_MEASURE):
    """One F_n draw from a freshly generated codebook."""
    return FnSample(float(_direct_block(cfg, 1, rng, measure)[0]), measure)


def _wilson(hits, trials, z):
    p = hits / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _proportion(hits, trials, scale, estimator_id, z):
    p = hits / trials
    se = math.sqrt(p * (1.0 - p) / trials)
    if hits < 30:
        lo, hi = _wilson(hits, trials, z)
    else:
        lo, hi = max(0.0, p - z * se), min(1.0, p + z * se)
    return ErrorEstimate(
        estimate=scale * p, trials=trials, std_error=scale * se, ci_radius=z * scale * se,
        estimator_id=estimator_id, hits=hits, ci_low=scale * lo, ci_high=scale * hi,
        z=z, zero_hit=hits == 0,
    )


def e1_from_samples(F, level, z=1.96):
    return _proportion(int(np.count_nonzero(F > -level)), len(F), 1.0, "E1", z)


def e2_exchange_from_samples(F, level, M, z=1.96):
    """Q'-measure samples; a zero-hit run reports only its upper confidence bound."""
    return _proportion(int(np.count_nonzero(F <= -level)), len(F), M - 1.0, "E2_exchange", z)


def e2_reweight_from_samples(F, level, z=1.96):
    """P-measure samples weighted by exp(F) on the undetected event."""
    hit = F <= -level
    wts = np.where(hit, np.exp(np.minimum(F, 0.0)), 0.0)
    mean = math.fsum(wts) / len(F)
    var = math.fsum((wts - mean) ** 2) / max(1, len(F) - 1)
    se = math.sqrt(var / len(F))
    return ErrorEstimate(
        estimate=mean, trials=len(F), std_error=se, ci_radius=z * se,
        estimator_id="E2_reweight", hits=int(np.count_nonzero(hit)),
        ci_low=max(0.0, mean - z * se), ci_high=mean + z * se, z=z, zero_hit=not hit.any(),
    )


def estimate_E1(cfg, trials, seed, workers=1, z=1.96):
    return e1_from_samples(fn_samples(cfg, trials, seed, P_MEASURE, workers), cfg.level, z)


def estimate_E2(cfg, trials, seed, method=None, workers=1, z=1.96):
    """Undetected-error estimate; ``method`` defaults to reweight for n > 100."""
    if method is None:
        method = "reweight" if cfg.n > 100 else "exchange"
    if method == "reweight":
        return e2_reweight_from_samples(fn_samples(cfg, trials, seed, P_MEASURE, workers), cfg.level, z)
    if method == "exchange":
        F = fn_samples(cfg, trials, seed, Q_MEASURE, workers)
        return e2_exchange_from_samples(F, cfg.level, cfg.M, z)
    raise ValidationError(f"unknown E2 method {method!r}")


def empirical_cgf(samples, theta_grid):
    """log of the sample mean of exp(theta X), max-shifted."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValidationError("empirical CGF needs samples")
    grid = np.asarray(theta_grid, dtype=float)
    vals = np.empty_like(grid)
    for i, th in enumerate(grid):
        if th == 0.0:
            vals[i] = 0.0
            continue
        e = th * x
        top = e.max()
        vals[i] = top + math.log(math.fsum(np.exp(e - top)) / x.size)
    return EmpiricalCgf(grid, vals, int(x.size))


def codebook_errors(cb, ch, decoder, trials, seed, z=1.96):
    """Fixed-codebook Monte Carlo estimates of Pr(E1|C) and Pr(E2|C)."""
    rng = stream(seed)
    msgs = rng.integers(0, cb.M, size=trials)
    noise = rng.choice(ch.d, size=(trials, cb.n), p=ch.noise.array)
    ys = (cb.words[msgs].astype(np.int64) + noise) % ch.d
    verdicts = np.concatenate([
        decoder.decode_batch(cb, ch, ys[lo:lo + BLOCK]) for lo in range(0, trials, BLOCK)
    ])
    wrong = verdicts != msgs + 1
    undetected = wrong & (verdicts != ERASURE)
    return (
        _proportion(int(wrong.sum()), trials, 1.0, "E1_codebook", z),
        _proportion(int(undetected.sum()), trials, 1.0, "E2_codebook", z),
    )


def regime_config(channel, n, t, a, b, M=None, sampler="auto"):
    params = RegimeParams(n, t, a, b, channel.capacity)
    return McConfig.from_regime(channel, params, M=M, sampler=sampler)
