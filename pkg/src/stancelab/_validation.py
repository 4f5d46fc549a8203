"""Small input-validation helpers shared across estimators."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError


def check_fitted(estimator, attr: str) -> None:
    if not hasattr(estimator, attr):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )


def check_no_nonfinite(matrix: np.ndarray, what: str) -> None:
    if matrix.size and not np.all(np.isfinite(matrix)):
        raise ValueError(f"{what} contains NaN or Inf entries")


def as_float_matrix(x, what: str = "input") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    check_no_nonfinite(arr, what)
    return arr
