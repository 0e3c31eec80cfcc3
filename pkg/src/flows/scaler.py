"""Per-variable standardization stored alongside a flow."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.errors import ShapeError

STD_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, data: np.ndarray, floor: float = STD_FLOOR) -> Scaler:
        data = np.asarray(data, dtype=np.float64)
        return cls(data.mean(axis=0), np.maximum(data.std(axis=0), floor))

    @classmethod
    def identity(cls, d: int) -> Scaler:
        return cls(np.zeros(d), np.ones(d))

    @property
    def d(self) -> int:
        return self.mean.size

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        return (x - self.mean) / self.scale

    def inverse_transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        return x * self.scale + self.mean

    def transform_value(self, j: int, value: float) -> float:
        return (value - float(self.mean[j])) / float(self.scale[j])

    @property
    def log_abs_det(self) -> float:
        """log|det| of the standardizing map x -> (x - mean) / scale."""
        return float(-np.log(self.scale).sum())

    def _check(self, x: np.ndarray) -> None:
        if x.shape[-1] != self.d:
            raise ShapeError(f"scaler has {self.d} columns, data has {x.shape[-1]}")
