"""Erasure decoding over additive discrete memoryless channels: exact
oracles, Monte Carlo error estimation and moderate-deviations predictions."""

from .channel import AdditiveChannel, GeneralDmc, blahut_arimoto
from .coding import Codebook, RegimeParams, code_size, sample_codebook, threshold
from .decoder import ERASURE, ForneyDecoder, InfoSpectrumDecoder
from .errors import (
    BudgetExceededError, ConvergenceError, DerandomizationError, ErasureLabError,
    InfeasibleScheduleError, ValidationError,
)
from .probmodel import NoiseDistribution, entropy, varentropy
from .typesys import TypeVector

__version__ = "0.1.0"

__all__ = [
    "AdditiveChannel", "GeneralDmc", "blahut_arimoto", "Codebook", "RegimeParams",
    "code_size", "sample_codebook", "threshold", "ERASURE", "ForneyDecoder",
    "InfoSpectrumDecoder", "BudgetExceededError", "ConvergenceError",
    "DerandomizationError", "ErasureLabError", "InfeasibleScheduleError",
    "ValidationError", "NoiseDistribution", "entropy", "varentropy", "TypeVector",
]
