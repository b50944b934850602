"""Набор данных для регрессии вектор-в-вектор."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from qregress.exceptions import DataError, ShapeError


@dataclass(frozen=True)
class RegressionDataset:
    """N пар (вход ∈ ℝ^Q, цель ∈ ℝ^{Q_out}).

    Attributes:
        inputs: Матрица N × Q.
        targets: Матрица N × Q_out.
        meta: Происхождение: источник, спецификация шума, зерно.
    """

    inputs: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        inputs = np.array(self.inputs, dtype=np.float64)
        targets = np.array(self.targets, dtype=np.float64)
        if inputs.ndim != 2 or targets.ndim != 2:
            raise ShapeError("Входы и цели должны быть матрицами")
        if inputs.shape[0] != targets.shape[0]:
            raise ShapeError(
                f"Число строк входов {inputs.shape[0]} не равно числу строк целей {targets.shape[0]}",
            )
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise DataError("Набор данных содержит нечисловые значения")
        inputs.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.targets.shape[1])

    def subset(self, rows: np.ndarray, **meta: Any) -> RegressionDataset:
        """Подвыборка по индексам строк; массивы в meta длины N режутся теми же индексами."""
        inherited = {
            key: value[rows] if isinstance(value, np.ndarray) and value.shape[:1] == (len(self),) else value
            for key, value in self.meta.items()
        }
        return RegressionDataset(
            inputs=self.inputs[rows],
            targets=self.targets[rows],
            meta={**inherited, **meta},
        )
