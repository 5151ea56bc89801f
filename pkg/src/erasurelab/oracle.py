"""Exhaustive ground truth for tiny instances.

Sums are exactly rounded (math.fsum), so results do not depend on
enumeration order.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .channel import log_likelihood_matrix
from .coding import Codebook
from .errors import ValidationError, check_budget
from .probmodel import renyi_cgf

OUTPUT_BUDGET = 2**24
ENSEMBLE_BUDGET = 2**24


@dataclass(frozen=True)
class ExactErrors:
    """Per-message outcome probabilities (index 0 is message 1)."""

    p_correct: np.ndarray
    p_erasure: np.ndarray
    p_undetected: np.ndarray

    @property
    def M(self):
        return len(self.p_correct)

    @property
    def correct(self):
        return math.fsum(self.p_correct) / self.M

    @property
    def erasure(self):
        return math.fsum(self.p_erasure) / self.M

    @property
    def undetected(self):
        return math.fsum(self.p_undetected) / self.M

    @property
    def total(self):
        """Pr(E1): erasure or wrong message."""
        return math.fsum(np.concatenate([self.p_erasure, self.p_undetected])) / self.M

    def conservation_error(self):
        return max(
            abs(math.fsum((c, e, u)) - 1.0)
            for c, e, u in zip(self.p_correct, self.p_erasure, self.p_undetected)
        )


def all_words(n, d):
    """Every word of Z_d^n as rows, in lexicographic order."""
    grids = np.indices((d,) * n).reshape(n, -1).T
    return grids.astype(np.int64)


def _outcome_sums(cb, ch, decoder, ys):
    L = log_likelihood_matrix(ch, cb.words, ys)
    verdicts = decoder.decode_batch(cb, ch, ys)
    probs = np.exp(L)
    correct, erasure, undetected = [], [], []
    for m in range(cb.M):
        col = probs[:, m]
        correct.append(math.fsum(col[verdicts == m + 1]))
        erasure.append(math.fsum(col[verdicts == 0]))
        undetected.append(math.fsum(col[(verdicts != 0) & (verdicts != m + 1)]))
    return np.array(correct), np.array(erasure), np.array(undetected)


def exact_error_probs(cb, ch, decoder, ys=None):
    """Exact outcome probabilities of one codebook by summing over all outputs."""
    check_budget(ch.d ** cb.n, OUTPUT_BUDGET, "output enumeration")
    if ys is None:
        ys = all_words(cb.n, ch.d)
    return ExactErrors(*_outcome_sums(cb, ch, decoder, ys))


def exact_ensemble(n, d, M, ch, decoder, fix_first=True):
    """Uniform-ensemble averages of the per-message outcome probabilities.

    With ``fix_first`` the first codeword is pinned to the zero word: shifting
    a whole codebook and the output by the same vector leaves every outcome
    probability of an additive channel unchanged.
    """
    if d != ch.d:
        raise ValidationError("alphabet size does not match the channel")
    free = M - 1 if fix_first else M
    check_budget(d ** (n * free) * d ** n, ENSEMBLE_BUDGET, "ensemble enumeration")
    ys = all_words(n, d)
    words = all_words(n, d)
    acc = [[[] for _ in range(M)] for _ in range(3)]
    for combo in itertools.product(range(d ** n), repeat=free):
        rows = [words[i] for i in combo]
        if fix_first:
            rows = [np.zeros(n, dtype=np.int64)] + rows
        cb = Codebook(np.array(rows), d)
        for k, arr in enumerate(_outcome_sums(cb, ch, decoder, ys)):
            for m in range(M):
                acc[k][m].append(arr[m])
    count = d ** (n * free)
    return ExactErrors(*(np.array([math.fsum(v) / count for v in part]) for part in acc))


def exact_EN_s(L, M1, M2, s):
    """E[N^s] for N ~ Binomial(L, M2/M1), using 0^0 = 1."""
    if not (0 <= M2 <= M1 and L >= 1 and M1 >= 1):
        raise ValidationError("need 0 <= M2 <= M1 and L >= 1")
    p = M2 / M1
    if p == 0.0:
        return 1.0 if s == 0 else 0.0
    if p == 1.0:
        return float(L) ** s
    ls = np.arange(L + 1)
    logpmf = (
        gammaln(L + 1.0) - gammaln(ls + 1.0) - gammaln(L - ls + 1.0)
        + ls * math.log(p) + (L - ls) * math.log1p(-p)
    )
    terms = np.exp(logpmf) * np.where(ls == 0, 1.0 if s == 0 else 0.0, ls.astype(float) ** s)
    return math.fsum(terms)


def concentration_bound(L, M1, M2, s, eps):
    """floor(L M2/M1 (1-eps))^s * [1 - exp(-L M2 eps^2 / (2 M1))], a lower bound on E[N^s]."""
    if not s > 0:
        raise ValidationError("the concentration bound needs s > 0")
    if not 0 < eps < 1:
        raise ValidationError("eps must lie in (0, 1)")
    base = math.floor(Fraction(L * M2, M1) * (1 - Fraction(eps)))
    if base < 1:
        return 0.0
    return float(base) ** s * -math.expm1(-L * M2 * eps * eps / (2.0 * M1))


def exact_A(n, d, P, s):
    """log A = log E_x[P^n(y - x)^(1-s)] = -n log d - n psi(s), for any y."""
    return -n * math.log(d) - n * renyi_cgf(P, s)


def enumerate_A(n, P, s, y):
    """Brute-force log A at output y by summing over every x in Z_d^n."""
    d = P.d
    check_budget(d ** n, OUTPUT_BUDGET, "A-term enumeration")
    xs = all_words(n, d)
    noise = (np.asarray(y, dtype=np.int64)[None, :] - xs) % d
    logs = (1.0 - s) * np.log(P.array)[noise].sum(axis=1)
    top = logs.max()
    return top + math.log(math.fsum(np.exp(logs - top))) - n * math.log(d)


def csv_row(params, decoder, errors):
    row = dict(params)
    row.update({"decoder": decoder.name, "p_total": errors.total, "p_undetected": errors.undetected})
    return row
