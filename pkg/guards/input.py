import numpy as np

from helper import DimensionMismatch, NonFiniteInput


def as_matrix(value, name: str = "matrix", allow_vector: bool = False) -> np.ndarray:
    """
    Validates a dense input and returns it as a float64 array.
    Rejects NaN/Inf entries and anything that is not 2-D (or 1-D when allowed).
    """
    array = np.asarray(value, dtype=np.float64)
    allowed = (1, 2) if allow_vector else (2,)
    if array.ndim not in allowed:
        raise DimensionMismatch(f"{name} must be {'1-D or ' if allow_vector else ''}2-D, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise NonFiniteInput(f"{name} contains NaN or Inf entries")
    return array


def check_rows(array: np.ndarray, n: int, name: str = "features") -> None:
    if array.shape[0] != n:
        raise DimensionMismatch(f"{name} has {array.shape[0]} rows, expected {n}")


def check_same_shape(x: np.ndarray, y: np.ndarray, names=("x", "y")) -> None:
    if x.shape != y.shape:
        raise DimensionMismatch(f"{names[0]} has shape {x.shape} but {names[1]} has shape {y.shape}")


def check_inner(left: np.ndarray, right: np.ndarray, names=("left", "right")) -> None:
    """Checks that left @ right is defined."""
    if left.shape[-1] != right.shape[0]:
        raise DimensionMismatch(
            f"cannot multiply {names[0]} {left.shape} by {names[1]} {right.shape}"
        )
