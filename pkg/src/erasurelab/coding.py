"""Rate/threshold schedules, uniform random codebooks and derandomization.

Random streams: every generator is a numpy PCG64 seeded from
``SeedSequence(entropy=master_seed, spawn_key=keys)``. ``stream(seed, k)``
is the k-th child of ``seed``; results therefore depend only on the master
seed and the entity index, never on how work is split across processes.
"""

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DerandomizationError, InfeasibleScheduleError, ValidationError

MAX_CODE_SIZE = 2**31
SEED_MASK = (1 << 64) - 1


def stream(seed, *keys):
    """Independent 64-bit PCG64 generator for (seed, *keys)."""
    ss = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class RegimeParams:
    """Knobs of one experiment point: log M_n = nC - a n^(1-t), T_n = b / n^t."""

    n: int
    t: float
    a: float
    b: float
    capacity: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError("blocklength n must be a positive integer")
        if not 0.0 < self.t <= 0.5:
            raise ValidationError("t must lie in (0, 1/2]")
        if not self.b > 0.0:
            raise ValidationError("b must be positive (b <= 0 is list decoding)")
        if self.t < 0.5 and not self.a > self.b:
            raise ValidationError("moderate-deviations regime (t < 1/2) needs a > b > 0")

    @property
    def log_code_size(self):
        return self.n * self.capacity - self.a * self.n ** (1.0 - self.t)

    @property
    def level(self):
        """n T_n = b n^(1-t), the log-likelihood-ratio margin of the decoders."""
        return self.b * self.n ** (1.0 - self.t)

    def with_n(self, n):
        return RegimeParams(n, self.t, self.a, self.b, self.capacity)


def code_size(params):
    """Nearest integer to exp(nC - a n^(1-t)); must land in [2, 2^31]."""
    expo = params.log_code_size
    if expo < math.log(2.0):
        raise InfeasibleScheduleError(
            f"rate schedule infeasible at n={params.n}: log M_n = {expo:.4g} < log 2"
        )
    if expo > math.log(MAX_CODE_SIZE):
        raise InfeasibleScheduleError(
            f"rate schedule infeasible at n={params.n}: M_n = exp({expo:.4g}) exceeds 2^31"
        )
    return max(2, int(round(math.exp(expo))))


def threshold(params):
    """T_n = b / n^t."""
    return params.b / params.n ** params.t


MAGIC = b"ERLB"
VERSION = 1
_HEADER = struct.Struct("<4sHIHQQ")


@dataclass(frozen=True, eq=False)
class Codebook:
    words: np.ndarray
    d: int
    seed: int = 0
    schedule: Optional[RegimeParams] = None

    def __post_init__(self):
        w = np.array(self.words, dtype=np.uint8, copy=True)
        if w.ndim != 2:
            raise ValidationError("codebook words must form an M x n array")
        if not 2 <= self.d <= 256:
            raise ValidationError("alphabet size must lie in 2..256")
        if w.size and int(w.max()) >= self.d:
            raise ValidationError("codeword symbol outside the alphabet")
        w.setflags(write=False)
        object.__setattr__(self, "words", w)

    @property
    def M(self):
        return self.words.shape[0]

    @property
    def n(self):
        return self.words.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, Codebook)
            and self.d == other.d
            and self.words.shape == other.words.shape
            and bool((self.words == other.words).all())
        )

    def to_bytes(self):
        header = _HEADER.pack(MAGIC, VERSION, self.n, self.d, self.M, int(self.seed) & SEED_MASK)
        return header + self.words.tobytes(order="C")

    @classmethod
    def from_bytes(cls, blob):
        if len(blob) < _HEADER.size:
            raise ValidationError("truncated codebook header")
        magic, version, n, d, M, seed = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise ValidationError("not an ERLB codebook")
        if version != VERSION:
            raise ValidationError(f"unsupported codebook version {version}")
        body = blob[_HEADER.size:]
        if len(body) != n * M:
            raise ValidationError(f"codebook body has {len(body)} bytes, expected {n * M}")
        words = np.frombuffer(body, dtype=np.uint8).reshape(M, n)
        return cls(words, d, seed)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def sample_codebook(n, d, M, seed, schedule=None):
    """M codewords of length n, i.i.d. uniform symbols on Z_d."""
    if M < 1:
        raise ValidationError("need at least one codeword")
    words = stream(seed).integers(0, d, size=(M, n), dtype=np.uint8)
    return Codebook(words, d, seed, schedule)


@dataclass(frozen=True)
class DerandomizeReport:
    codebook: Codebook
    accepted_seed: int
    rejections: int
    errors: tuple  # (Pr(E1|C), Pr(E2|C)) of the accepted codebook
    budget: tuple


def derandomize(params, channel, targets, candidate_seeds, estimator, M=None):
    """Return the first candidate codebook within twice each ensemble target.

    Markov's inequality with theta = 1/2: a random codebook exceeds 2*E[Pr(E1)]
    or 2*E[Pr(E2)] with probability < 1, so some candidate must pass.
    ``estimator(codebook, channel)`` returns (Pr(E1|C), Pr(E2|C)).
    """
    if M is None:
        M = code_size(params)
    budget = (2.0 * targets[0], 2.0 * targets[1])
    seen = []
    for seed in candidate_seeds:
        cb = sample_codebook(params.n, channel.d, M, seed, schedule=params)
        e1, e2 = estimator(cb, channel)
        if e1 <= budget[0] and e2 <= budget[1]:
            return DerandomizeReport(cb, seed, len(seen), (e1, e2), budget)
        seen.append((seed, e1, e2))
    stats = {
        "candidates": len(seen),
        "budget": budget,
        "min_e1": min((s[1] for s in seen), default=None),
        "min_e2": min((s[2] for s in seen), default=None),
    }
    raise DerandomizationError(f"all {len(seen)} candidate codebooks exceeded the budget {budget}", stats)
