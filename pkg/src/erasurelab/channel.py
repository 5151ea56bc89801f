"""Additive and general discrete memoryless channels.

Likelihoods stay in the log domain; blocklengths in the thousands would
underflow raw products.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ValidationError
from .probmodel import NoiseDistribution, entropy

ROW_TOL = 1e-12


@dataclass(frozen=True)
class AdditiveChannel:
    """Y = X + Z (mod d) with Z ~ noise."""

    noise: NoiseDistribution

    @classmethod
    def from_probs(cls, probs):
        return cls(NoiseDistribution(tuple(probs)))

    @property
    def d(self):
        return self.noise.d

    @property
    def capacity(self):
        return math.log(self.d) - entropy(self.noise)

    @property
    def log_noise(self):
        return self.noise.log_probs

    def transition(self, y, x):
        return self.noise.probs[(y - x) % self.d]

    def to_dmc(self):
        d = self.d
        p = self.noise.array
        mat = np.array([[p[(y - x) % d] for y in range(d)] for x in range(d)])
        return GeneralDmc(mat)


def _as_word(w, d):
    arr = np.asarray(w, dtype=np.int64)
    if arr.ndim != 1:
        raise ValidationError("words must be one-dimensional")
    if arr.size and (arr.min() < 0 or arr.max() >= d):
        raise ValidationError(f"word symbols must lie in 0..{d - 1}")
    return arr


def log_likelihood(ch, x, y):
    """log W^n(y|x) = sum_i log P(y_i - x_i mod d)."""
    x = _as_word(x, ch.d)
    y = _as_word(y, ch.d)
    if x.shape != y.shape:
        raise ValidationError(f"length mismatch: |x|={x.size}, |y|={y.size}")
    return math.fsum(ch.log_noise[(y - x) % ch.d])


def log_likelihood_matrix(ch, codewords, outputs):
    """Matrix L[k, m] = log W^n(outputs[k] | codewords[m])."""
    cw = np.asarray(codewords, dtype=np.int64)
    ys = np.asarray(outputs, dtype=np.int64)
    if cw.shape[-1] != ys.shape[-1]:
        raise ValidationError("codeword and output lengths differ")
    noise = (ys[:, None, :] - cw[None, :, :]) % ch.d
    return ch.log_noise[noise].sum(axis=-1)


def sample_noise(ch, size, rng):
    return rng.choice(ch.d, size=size, p=ch.noise.array)


def sample_output(ch, x, rng):
    """Pass x through the channel; rng is a numpy Generator."""
    x = _as_word(x, ch.d)
    return (x + sample_noise(ch, x.shape, rng)) % ch.d


@dataclass(frozen=True)
class GeneralDmc:
    """Row-stochastic transition matrix, rows indexed by inputs."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValidationError("channel matrix must be two-dimensional")
        if (m < 0).any() or not np.isfinite(m).all():
            raise ValidationError("channel matrix entries must be finite and nonnegative")
        sums = m.sum(axis=1)
        if np.abs(sums - 1.0).max() > ROW_TOL:
            raise ValidationError("each channel row must sum to 1 within 1e-12")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_inputs(self):
        return self.matrix.shape[0]

    @property
    def n_outputs(self):
        return self.matrix.shape[1]

    def as_additive(self, tol=1e-12):
        """The equivalent AdditiveChannel if the matrix is circulant with positive entries."""
        m = self.matrix
        if m.shape[0] != m.shape[1]:
            return None
        d = m.shape[0]
        first = m[0]
        for x in range(d):
            if np.abs(np.roll(first, x) - m[x]).max() > tol:
                return None
        if (first <= 0).any():
            return None
        return AdditiveChannel(NoiseDistribution(tuple(first / first.sum())))


def load_matrix(path):
    """Read a whitespace-separated matrix file (rows = inputs)."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([float(v) for v in line.split()])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValidationError(f"{path}: ragged or empty matrix")
    return GeneralDmc(np.array(rows))


def _as_dmc(W):
    return W.to_dmc() if isinstance(W, AdditiveChannel) else W


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    input_dist: np.ndarray
    iterations: int
    gap: float
    history: tuple = ()


def _divergences(W, r):
    """D(W(.|x) || rW) for every input x, plus the output law rW."""
    q = r @ W
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(W > 0, np.log(W) - np.log(q)[None, :], 0.0)
    return (W * ratio).sum(axis=1), q


def blahut_arimoto(W, tol=1e-10, max_iter=10_000):
    """Capacity in nats with a max-min duality-gap certificate.

    I(r, W) bounds C from below and max_x D(W(.|x) || rW) from above; stops
    once the two agree within ``tol``. ``history`` holds I(r_k, W) per iteration.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    mat = _as_dmc(W).matrix
    r = np.full(mat.shape[0], 1.0 / mat.shape[0])
    history = []
    for it in range(1, int(max_iter) + 1):
        D, _ = _divergences(mat, r)
        mi = float(r @ D)
        history.append(mi)
        top = D.max()
        gap = max(0.0, float(top) - mi)
        if gap <= tol:
            return CapacityResult(mi, r, it, gap, tuple(history))
        w = r * np.exp(D - top)
        best_r, r = r, w / w.sum()
    best = CapacityResult(mi, best_r, it, gap, tuple(history))
    raise ConvergenceError(f"Blahut-Arimoto gap {gap:.3g} > {tol} after {max_iter} iterations", best)


def _info_density(mat, px):
    py = px @ mat
    bad = (mat > 0) & (py[None, :] <= 0)
    if bad.any():
        raise ValidationError("W(.|x) is not absolutely continuous w.r.t. the output law")
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.where(mat > 0, np.log(mat) - np.log(py)[None, :], 0.0)
    return dens


def cond_info_variance(W, px):
    """V(P_X, W): per-input variance of the information density, averaged over P_X."""
    mat = _as_dmc(W).matrix
    px = np.asarray(px, dtype=float)
    dens = _info_density(mat, px)
    D = (mat * dens).sum(axis=1)
    per_x = (mat * (dens - D[:, None]) ** 2).sum(axis=1)
    return float(px @ per_x)


def uncond_info_variance(W, px, C):
    """U(P_X, W): information-density variance centred at C."""
    mat = _as_dmc(W).matrix
    px = np.asarray(px, dtype=float)
    dens = _info_density(mat, px)
    per_x = (mat * (dens - C) ** 2).sum(axis=1)
    return float(px @ per_x)
