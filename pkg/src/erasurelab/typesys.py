"""Method-of-types machinery: n-types over Z_d, class sizes, enumerators."""

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import ValidationError, check_budget
from .probmodel import entropy as _entropy

TYPE_BUDGET = 10**7
L1_TIE_TOL = 1e-12


@dataclass(frozen=True, order=True)
class TypeVector:
    counts: tuple

    def __post_init__(self):
        c = tuple(int(v) for v in self.counts)
        if any(v < 0 for v in c) or len(c) < 1:
            raise ValidationError("type counts must be nonnegative")
        object.__setattr__(self, "counts", c)

    @classmethod
    def of(cls, word, d):
        return cls(tuple(np.bincount(np.asarray(word, dtype=np.int64), minlength=d)))

    @property
    def n(self):
        return sum(self.counts)

    @property
    def d(self):
        return len(self.counts)

    @property
    def dist(self):
        n = self.n
        return tuple(c / n for c in self.counts)

    def entropy(self):
        n = self.n
        return -math.fsum(c / n * math.log(c / n) for c in self.counts if c)

    def divergence(self, P):
        """D(Q || P) with 0 log 0 = 0."""
        n = self.n
        return math.fsum(c / n * math.log(c / n / p) for c, p in zip(self.counts, P.probs) if c)

    def log_size(self):
        return type_class_log_size(self)

    def log_sequence_prob(self, P):
        """log P^n(x) for any x of this type, i.e. -n[D(Q||P) + H(Q)]."""
        return math.fsum(c * math.log(p) for c, p in zip(self.counts, P.probs))

    def l1(self, P):
        n = self.n
        return math.fsum(abs(c / n - p) for c, p in zip(self.counts, P.probs))


def count_types(n, d):
    return math.comb(n + d - 1, d - 1)


def _compositions(n, d):
    if d == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, d - 1):
            yield (first,) + rest


def enumerate_types(n, d):
    """All n-types on Z_d, lexicographic in the count vector."""
    check_budget(count_types(n, d), TYPE_BUDGET, f"type enumeration (n={n}, d={d})")
    return [TypeVector(c) for c in _compositions(n, d)]


def type_class_log_size(tv):
    """log of the multinomial coefficient n! / prod_z counts[z]!."""
    c = np.asarray(tv.counts, dtype=float)
    return float(gammaln(c.sum() + 1.0) - gammaln(c + 1.0).sum())


def select_Pn(P, n, a, t):
    """l1-nearest n-type to P among those with H(Q) >= H(P) + 2a n^(-t).

    Ties within 1e-12 in l1 distance go to the lexicographically smallest counts.
    """
    floor = _entropy(P) + 2.0 * a * n ** (-t)
    best = None
    for tv in enumerate_types(n, P.d):
        if tv.entropy() < floor:
            continue
        dist = tv.l1(P)
        if best is None or dist < best[0] - L1_TIE_TOL:
            best = (dist, tv)
    if best is None:
        raise ValidationError(f"no {n}-type reaches entropy {floor:.6g} (max is log d = {math.log(P.d):.6g})")
    return best[1]


def type_enumerator(cb, y, exclude_m):
    """Counts N(Q) of shifted codewords y - x_m' (m' != exclude_m) by type.

    ``exclude_m`` is 1-based, matching decoder verdicts.
    """
    y = np.asarray(y, dtype=np.int64)
    keep = [i for i in range(cb.M) if i != exclude_m - 1]
    shifted = (y[None, :] - cb.words[keep].astype(np.int64)) % cb.d
    counts = Counter()
    for row in shifted:
        counts[TypeVector.of(row, cb.d)] += 1
    return dict(counts)


@lru_cache(maxsize=64)
def type_table(n, d):
    """Count matrix (K x d) and uniform class probabilities |T_Q| / d^n, K = #types.

    Cached; the arrays are read-only.
    """
    types = enumerate_types(n, d)
    counts = np.array([tv.counts for tv in types], dtype=np.int64)
    logw = gammaln(n + 1.0) - gammaln(counts + 1.0).sum(axis=1) - n * math.log(d)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    counts.setflags(write=False)
    w.setflags(write=False)
    return counts, w


def types_csv_rows(n, d, P=None):
    """Rows (counts, H, D, log|T|) for CSV export; D is blank without P."""
    for tv in enumerate_types(n, d):
        yield {
            "counts": " ".join(map(str, tv.counts)),
            "entropy": tv.entropy(),
            "divergence": tv.divergence(P) if P is not None else "",
            "log_size": tv.log_size(),
        }
