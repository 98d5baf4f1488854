"""Small input-validation helpers shared by the estimators."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def check_texts(texts: Sequence[str], allow_empty_batch: bool = False) -> list[str]:
    """Validate a batch of strings, returning it as a list."""
    items = list(texts)
    if not items and not allow_empty_batch:
        raise ValueError("batch of texts must be non-empty")
    for i, text in enumerate(items):
        if not isinstance(text, str):
            raise TypeError(f"texts[{i}] is {type(text).__name__}, expected str")
    return items


def check_vector(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Validate one finite 1-D vector, optionally of a fixed dimension."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"expected dim {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector contains NaN or infinite components")
    return arr


def check_unit_rows(matrix: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Validate a 2-D matrix whose rows are unit-norm within `tol`."""
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    norms = np.linalg.norm(arr.astype(np.float64), axis=1)
    bad = np.where(np.abs(norms - 1.0) > tol)[0]
    if bad.size:
        raise ValueError(
            f"{bad.size} rows are not unit-norm within {tol} (first: row {bad[0]},"
            f" norm {norms[bad[0]]!r})"
        )
    return arr


def check_fitted(estimator, attribute: str) -> None:
    if getattr(estimator, attribute, None) is None:
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
