"""Probability primitives on the cyclic group Z_d.

All logarithms are natural.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

SUM_TOL = 1e-12


@dataclass(frozen=True)
class NoiseDistribution:
    """Strictly positive probability vector over {0, ..., d-1}.

    Inputs whose sum is off by more than 1e-12 are rejected, never renormalized.
    """

    probs: tuple
    _arr: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = tuple(float(v) for v in self.probs)
        if len(p) < 2:
            raise ValidationError("noise distribution needs d >= 2")
        if not all(math.isfinite(v) and v > 0.0 for v in p):
            raise ValidationError("noise probabilities must be strictly positive")
        if abs(math.fsum(p) - 1.0) > SUM_TOL:
            raise ValidationError(f"noise probabilities sum to {math.fsum(p)!r}, not 1")
        arr = np.array(p)
        arr.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "_arr", arr)

    @classmethod
    def uniform(cls, d):
        return cls((1.0 / d,) * d)

    @classmethod
    def parse(cls, text):
        """Build from a comma-separated list such as ``"0.6,0.4"``."""
        return cls(tuple(float(v) for v in text.split(",") if v.strip()))

    @property
    def d(self):
        return len(self.probs)

    @property
    def array(self):
        return self._arr

    @property
    def log_probs(self):
        return np.log(self._arr)

    def entropy(self):
        return entropy(self)

    def varentropy(self):
        return varentropy(self)

    def psi(self, s):
        return renyi_cgf(self, s)


def entropy(P):
    """Shannon entropy H(P) in nats."""
    return -math.fsum(p * math.log(p) for p in P.probs)


def varentropy(P):
    """Variance of the self-information -log P(Z), Z ~ P."""
    h = entropy(P)
    return math.fsum(p * (-math.log(p) - h) ** 2 for p in P.probs)


def renyi_cgf(P, s):
    """psi(s) = -log sum_z P(z)^(1-s).

    psi(0) = 0, psi'(0) = -H(P), psi''(0) = -V(P); psi is concave in s,
    so -psi is the convex cumulant generating function of log(1/P(Z)).
    """
    logs = np.log(P.array) * (1.0 - s)
    top = logs.max()
    return -(top + math.log(math.fsum(np.exp(logs - top))))


def gaussian_pdf(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def gaussian_cdf(x):
    """Standard normal CDF via the complementary error function.

    erfc keeps full relative accuracy in both tails, so
    gaussian_cdf(x) + gaussian_cdf(-x) == 1 to rounding.
    """
    return 0.5 * math.erfc(-x / math.sqrt(2.0))
