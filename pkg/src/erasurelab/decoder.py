"""Erasure decoders for additive channels.

Verdicts use the convention of the coding literature: message indices run
1..M and 0 stands for an erasure. Both tests keep the inclusive ``>=`` at
the threshold.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import log_likelihood_matrix
from .errors import ValidationError

ERASURE = 0


@dataclass(frozen=True)
class DecodeOutcome:
    message: int
    log_scores: Optional[np.ndarray] = None

    @property
    def is_erasure(self):
        return self.message == ERASURE


def _top_vs_rest(L):
    """Index of the row maximum and log-sum-exp of the remaining entries."""
    idx = L.argmax(axis=1)
    rows = np.arange(L.shape[0])
    top = L[rows, idx]
    masked = L.copy()
    masked[rows, idx] = -np.inf
    second = masked.max(axis=1)
    rest = second + np.log(np.exp(masked - second[:, None]).sum(axis=1))
    return idx, top, rest


@dataclass(frozen=True)
class ForneyDecoder:
    """Decode m iff W(y|x_m) >= exp(nT) * sum_{m' != m} W(y|x_m').

    T > 0 makes the regions disjoint; only the likelihood maximiser can pass.
    """

    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValidationError("Forney threshold T must be positive (T <= 0 is list decoding)")

    @property
    def name(self):
        return "forney"

    def decode_batch(self, cb, ch, ys):
        if cb.M < 2:
            raise ValidationError("Forney decoding needs at least two codewords")
        L = log_likelihood_matrix(ch, cb.words, np.atleast_2d(ys))
        idx, top, rest = _top_vs_rest(L)
        ok = top - rest >= cb.n * self.T
        return np.where(ok, idx + 1, ERASURE)

    def decode(self, cb, ch, y):
        y = np.asarray(y)
        L = log_likelihood_matrix(ch, cb.words, y[None, :])[0]
        verdict = int(self.decode_batch(cb, ch, y[None, :])[0])
        return DecodeOutcome(verdict, L)


@dataclass(frozen=True)
class InfoSpectrumDecoder:
    """Threshold test on the information density against a uniform output law.

    Message m is a candidate iff log W(y|x_m) + n log d >= log M_n + b n^(1-t);
    the verdict is m when it is the only candidate and an erasure otherwise.
    """

    code_size: int
    b: float
    t: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValidationError("b must be positive")
        if self.code_size < 1:
            raise ValidationError("code size must be at least 1")

    @property
    def name(self):
        return "infospec"

    def level(self, n):
        return math.log(self.code_size) + self.b * n ** (1.0 - self.t)

    def candidates(self, cb, ch, ys):
        L = log_likelihood_matrix(ch, cb.words, np.atleast_2d(ys))
        return L + cb.n * math.log(ch.d) >= self.level(cb.n)

    def decode_batch(self, cb, ch, ys):
        S = self.candidates(cb, ch, ys)
        unique = S.sum(axis=1) == 1
        return np.where(unique, S.argmax(axis=1) + 1, ERASURE)

    def decode(self, cb, ch, y):
        y = np.asarray(y)
        L = log_likelihood_matrix(ch, cb.words, y[None, :])[0]
        return DecodeOutcome(int(self.decode_batch(cb, ch, y[None, :])[0]), L)


def forney_decode(cb, ch, y, T):
    return ForneyDecoder(T).decode(cb, ch, y)


def infospec_decode(cb, ch, y, code_size, b, t):
    return InfoSpectrumDecoder(code_size, b, t).decode(cb, ch, y)


def decode_stream(decoder, cb, ch, words, chunk=4096):
    """Decode an iterable of output words lazily, yielding verdicts in order."""
    buf = []
    for y in words:
        buf.append(np.asarray(y))
        if len(buf) == chunk:
            yield from decoder.decode_batch(cb, ch, np.stack(buf)).tolist()
            buf = []
    if buf:
        yield from decoder.decode_batch(cb, ch, np.stack(buf)).tolist()
