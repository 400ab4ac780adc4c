"""
Residual strengths Λ = diag(λ_1..λ_n), produced by one of three strategies:
learnable (logistic of H0·w_att), PageRank-based (top-k% get λ_max) or static (βI).
"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple
import logging
import math

import numpy as np
import pandas as pd
from scipy.special import expit
from scipy.stats import spearmanr

from guards.input import as_matrix
from helper import (
    CLAMP_HI,
    CLAMP_LO,
    DimensionMismatch,
    InvalidBeta,
    InvalidFraction,
    InvalidLambda,
    InvalidLambdaOrder,
    write_csv,
)
from residual.pagerank import PageRankScores

logger = logging.getLogger(__name__)


class Provenance(Enum):
    LEARNABLE = "learnable"
    PAGERANK = "pagerank"
    STATIC = "static"


@dataclass(frozen=True)
class ResidualStrengths:
    values: np.ndarray
    provenance: Provenance
    clamp: Tuple[float, float] = (CLAMP_LO, CLAMP_HI)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        lo, hi = self.clamp
        if not 0.0 < lo <= hi < 1.0:
            raise InvalidLambda(f"clamp must satisfy 0 < lo <= hi < 1, got {self.clamp}")
        if values.size and (values.min() < lo or values.max() > hi):
            raise InvalidLambda(f"λ values leave the clamp [{lo}, {hi}]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def lambda_min(self) -> float:
        return float(self.values.min())

    @property
    def lambda_max(self) -> float:
        return float(self.values.max())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"node": np.arange(self.n, dtype=np.int64), "lambda": self.values})

    def to_csv(self, path):
        return write_csv(self.to_frame(), path)


def learnable_lambda(h0, w_att) -> ResidualStrengths:
    """ λ = clip(logistic(H0·w_att), 1e-4, 1 - 1e-4). """
    h0 = as_matrix(h0, "h0")
    w_att = as_matrix(w_att, "w_att", allow_vector=True).reshape(-1)
    if w_att.shape[0] != h0.shape[1]:
        raise DimensionMismatch(f"w_att has {w_att.shape[0]} entries, h0 has {h0.shape[1]} features")
    values = np.clip(expit(h0 @ w_att), CLAMP_LO, CLAMP_HI)
    return ResidualStrengths(values=values, provenance=Provenance.LEARNABLE)


def _check_pair(lambda_min: float, lambda_max: float) -> None:
    if not 0.0 < lambda_min < lambda_max < 1.0:
        raise InvalidLambdaOrder(f"need 0 < lambda_min < lambda_max < 1, got {lambda_min}, {lambda_max}")


def pagerank_lambda(scores: PageRankScores, top_fraction: float, lambda_max: float,
                    lambda_min: float) -> ResidualStrengths:
    """
    Gives λ_max to the ceil(k·n) highest-scoring nodes and λ_min to the rest.
    Ties at the cutoff go to the lower node index.
    """
    if not 0.0 < top_fraction < 1.0:
        raise InvalidFraction(f"top fraction must lie in (0, 1), got {top_fraction}")
    _check_pair(lambda_min, lambda_max)
    values = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    n = values.shape[0]
    # round first so 0.1 * 2708 counts as 270.8, not 270.80000000000001
    count = math.ceil(round(top_fraction * n, 9))
    order = np.lexsort((np.arange(n), -values))
    strengths = np.full(n, lambda_min)
    strengths[order[:count]] = lambda_max
    return ResidualStrengths(values=strengths, provenance=Provenance.PAGERANK,
                             clamp=(lambda_min, lambda_max))


def static_lambda(beta: float, n: int) -> ResidualStrengths:
    if not 0.0 < beta < 1.0:
        raise InvalidBeta(f"beta must lie in (0, 1), got {beta}")
    return ResidualStrengths(values=np.full(n, float(beta)), provenance=Provenance.STATIC,
                             clamp=(beta, beta))


def centrality_correlation(strengths: ResidualStrengths, scores: PageRankScores) -> float:
    """Spearman rank correlation between λ and PageRank; nan when either side is constant."""
    if np.ptp(strengths.values) == 0.0 or np.ptp(scores.scores) == 0.0:
        return float("nan")
    rho = spearmanr(strengths.values, scores.scores).statistic
    logger.info(f"Spearman correlation between learned λ and PageRank: {rho:.4f}")
    return float(rho)
