from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Optional
import logging
import os

import numpy as np
import pandas as pd
from dotenv import load_dotenv

load_dotenv()

# Residual strengths are kept strictly inside (0, 1).
CLAMP_DELTA = 1e-4
CLAMP_LO = CLAMP_DELTA
CLAMP_HI = 1.0 - CLAMP_DELTA

DEFAULT_REL_TOL = 1e-9
DEFAULT_SLOPE = 0.2
DENSE_SVD_LIMIT = 512

PAGERANK_DAMPING = 0.85
PAGERANK_TOL = 1e-10
PAGERANK_MAX_ITER = 10_000

CSV_FLOAT_FORMAT = "%.17g"
THREADS_ENV = "AIRC_THREADS"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class EXIT_CODES(Enum):
    SUCCESS = 0
    VERIFICATION_FAILED = 1
    USAGE_ERROR = 2


class AIRCError(Exception):
    """Base class for every error raised by the engine."""


class IndexOutOfRange(AIRCError):
    pass


class SelfLoopRejected(AIRCError):
    pass


class DuplicateEdgeConflict(AIRCError):
    pass


class IsolatedNodeInPlainMode(AIRCError):
    pass


class DimensionMismatch(AIRCError):
    pass


class EmptyEdgeSet(AIRCError):
    pass


class NonFiniteInput(AIRCError):
    pass


class ConvergenceFailure(AIRCError):
    pass


class ZeroMatrix(AIRCError):
    pass


class InvalidTolerance(AIRCError):
    pass


class NonContractive(AIRCError):
    pass


class DivergentSeries(AIRCError):
    pass


class InvalidLambda(AIRCError):
    pass


class InvalidSlope(AIRCError):
    pass


class InvalidFraction(AIRCError):
    pass


class InvalidLambdaOrder(AIRCError):
    pass


class InvalidBeta(AIRCError):
    pass


class TapeConsumed(AIRCError):
    pass


class EmptyMask(AIRCError):
    pass


class MissingFile(AIRCError):
    pass


class ParseError(AIRCError):
    def __init__(self, path, line: int, reason: str):
        self.path = str(path)
        self.line = line
        self.reason = reason
        super().__init__(f"{self.path}:{line}: {reason}")


class InconsistentLengths(AIRCError):
    pass


class LabelOutOfRange(AIRCError):
    pass


class MaskOverlap(AIRCError):
    pass


class IoError(AIRCError):
    pass


class OverwriteRefused(AIRCError):
    pass


class UsageError(AIRCError):
    pass


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, force=True)


@lru_cache(maxsize=1)
def get_thread_cap() -> Optional[int]:
    """ Thread cap for the dense kernels, read from AIRC_THREADS (env or .env).
        Returns:
            positive int, or None when unset
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def make_rng(seed: int) -> np.random.Generator:
    """ Named, seedable generator: PCG64 seeded through numpy's SeedSequence.
        Args:
            seed (int): unsigned 64-bit seed
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def write_csv(frame: pd.DataFrame, path, header: bool = True, sep: str = ",") -> Path:
    """Writes a table with LF line endings and 17 significant digits."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, header=header, sep=sep,
                     float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise IoError(f"Could not write {path}: {e}")
    return path
