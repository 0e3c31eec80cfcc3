"""Train/test splitting and standardization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.errors import DataError, ShapeError
from src.flows.scaler import Scaler


@dataclass(frozen=True, eq=False)
class DataSplit:
    """Raw train/test rows plus the scaler fitted on the train rows.

    Unpacks as ``train, test, scaler``. With ``fraction=1`` the test rows
    are the train rows, so ``n_train + n_test == 2n``.
    """

    train: np.ndarray
    test: np.ndarray
    scaler: Scaler
    train_idx: np.ndarray
    test_idx: np.ndarray

    def __iter__(self):
        return iter((self.train, self.test, self.scaler))

    @property
    def n_train(self) -> int:
        return self.train.shape[0]

    @property
    def n_test(self) -> int:
        return self.test.shape[0]


def as_matrix(data) -> np.ndarray:
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError(f"expected an (n, d) matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise DataError("data contains non-finite values")
    return matrix


def split_standardize(data, fraction: float = 0.8, seed: int = 0) -> DataSplit:
    """Random split by ``seed``; the first ceil(fraction * n) permuted rows train.

    With ``fraction == 1`` the test split is the train split. Otherwise at
    least one row is held out.
    """
    matrix = as_matrix(data)
    n = matrix.shape[0]
    if not 0.0 < fraction <= 1.0:
        raise DataError(f"split fraction must be in (0, 1], got {fraction}")
    if n < 1 or (fraction < 1.0 and n < 2):
        raise DataError(f"cannot split {n} row(s) with fraction {fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    if fraction >= 1.0:
        train_idx = test_idx = np.sort(perm)
    else:
        # tolerance keeps e.g. 0.7 * 10 at 7 rows
        n_train = max(1, min(math.ceil(fraction * n - 1e-9), n - 1))
        train_idx, test_idx = perm[:n_train], perm[n_train:]
    train = matrix[train_idx]
    return DataSplit(train, matrix[test_idx], Scaler.fit(train), train_idx, test_idx)
