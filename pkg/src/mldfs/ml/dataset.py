from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..profiler import ProfileRecord, records_features


@dataclass
class Dataset:
    X: np.ndarray          # (n, n_features) small non-negative integers
    y: np.ndarray          # (n,) class labels
    n_classes: int
    feature_mode: str = "summary"

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.int32)
        self.y = np.ascontiguousarray(self.y, dtype=np.int32)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be (n, f) with one label per row")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise ValueError("labels must lie in [0, n_classes)")
        if self.X.size and self.X.min() < 0:
            raise ValueError("features must be non-negative integers")

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_records(cls, records: Sequence[ProfileRecord], n_classes: int,
                     feature_mode: str = "summary") -> "Dataset":
        X = records_features(records, feature_mode)
        y = np.fromiter((r.true_class for r in records), dtype=np.int32, count=len(records))
        return cls(X, y, n_classes, feature_mode)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.n_classes, self.feature_mode)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)
