"""Типы данных тензорного поезда: раскладка, плотный тензор, TT-вектор.

Индексы в API 0-базовые: элемент (d_1, …, d_K) из математической
записи (1-базовой) соответствует индексу (d_1 − 1, …, d_K − 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qregress.exceptions import ShapeError


@dataclass(frozen=True)
class TensorLayout:
    """Форма K-порядкового тензора и TT-ранги.

    Attributes:
        dims: Размерности D_1..D_K.
        ranks: Ранги R_1..R_{K+1}, крайние равны 1.
    """

    dims: tuple[int, ...]
    ranks: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        ranks = tuple(int(r) for r in self.ranks)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "ranks", ranks)

        if not dims or any(d < 1 for d in dims):
            raise ShapeError(f"Размерности должны быть положительными: {dims}")
        if len(ranks) != len(dims) + 1:
            raise ShapeError(
                f"Ожидалось {len(dims) + 1} рангов для {len(dims)} размерностей, получено {len(ranks)}",
            )
        if ranks[0] != 1 or ranks[-1] != 1:
            raise ShapeError(f"Крайние ранги должны быть равны 1: {ranks}")
        for k in range(len(dims)):
            limit = min(ranks[k] * dims[k], math.prod(dims[k + 1:]))
            if not 1 <= ranks[k + 1] <= limit:
                raise ShapeError(
                    f"Ранг R_{k + 2}={ranks[k + 1]} недостижим (максимум {limit})",
                )

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        """Длина плоского входного вектора D."""
        return math.prod(self.dims)

    def core_shape(self, k: int) -> tuple[int, int, int]:
        return self.ranks[k], self.dims[k], self.ranks[k + 1]

    def core_size(self, k: int) -> int:
        return math.prod(self.core_shape(k))


@dataclass(frozen=True)
class DenseTensor:
    """Плотный тензор в построчном порядке (последний индекс меняется быстрее всего)."""

    dims: tuple[int, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        values = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        if values.size != math.prod(dims):
            raise ShapeError(
                f"Число значений {values.size} не равно произведению размерностей {dims}",
            )
        values.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", values)

    def as_array(self) -> np.ndarray:
        """Вернуть значения в виде K-мерного массива (только чтение)."""
        return self.values.reshape(self.dims)

    def __getitem__(self, index: tuple[int, ...]) -> float:
        return float(self.as_array()[index])


@dataclass(frozen=True)
class TTVector:
    """Тензорный поезд: K ядер, ядро k имеет форму R_k × D_k × R_{k+1}."""

    layout: TensorLayout
    cores: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.cores) != self.layout.order:
            raise ShapeError(
                f"Ожидалось {self.layout.order} ядер, получено {len(self.cores)}",
            )
        frozen = []
        for k, core in enumerate(self.cores):
            core = np.array(core, dtype=np.float64)
            if core.shape != self.layout.core_shape(k):
                raise ShapeError(
                    f"Ядро {k}: форма {core.shape}, ожидалась {self.layout.core_shape(k)}",
                )
            core.setflags(write=False)
            frozen.append(core)
        object.__setattr__(self, "cores", tuple(frozen))

    def vectorized_cores(self) -> list[np.ndarray]:
        """Ядра, развёрнутые в векторы длины R_k·D_k·R_{k+1}."""
        return [core.reshape(-1) for core in self.cores]
