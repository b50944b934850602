"""Тензорный поезд: разложение TT-SVD, восстановление и доступ к элементам.

Все индексы 0-базовые; элемент (d_1, …, d_K) математической записи
имеет индекс (d_1 − 1, …, d_K − 1).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np

from qregress.exceptions import BoundsError, DataError, ShapeError
from qregress.models.tensor import DenseTensor, TensorLayout, TTVector
from qregress.services import linalg

logger = logging.getLogger(__name__)


def reshape_to_tensor(x: np.ndarray, dims: Sequence[int]) -> DenseTensor:
    """Развернуть вектор длины D в K-мерный тензор (построчно).

    Raises:
        ShapeError: ∏ dims не равно длине x.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if math.prod(dims) != x.size:
        raise ShapeError(f"Произведение размерностей {tuple(dims)} не равно длине вектора {x.size}")
    return DenseTensor(tuple(dims), x)


def max_ranks(dims: Sequence[int]) -> tuple[int, ...]:
    """Достижимые (неусекающие) TT-ранги: R_{k+1} = min(R_k·D_k, ∏_{j>k} D_j)."""
    ranks = [1]
    for k, d in enumerate(dims):
        ranks.append(min(ranks[-1] * d, math.prod(dims[k + 1:])))
    return tuple(ranks)


def tt_svd(tensor: DenseTensor, ranks: Sequence[int]) -> TTVector:
    """TT-SVD: последовательные усечённые SVD слева направо.

    При неусекающих рангах восстановление точно до машинной погрешности.

    Args:
        tensor: Плотный тензор.
        ranks: Ранги R_1..R_{K+1}.

    Returns:
        TT-вектор с ядрами формы R_k × D_k × R_{k+1}.

    Raises:
        ShapeError: Ранги не удовлетворяют ограничениям раскладки.
        DataError: Тензор содержит NaN или Inf.
    """
    layout = TensorLayout(tensor.dims, tuple(ranks))
    if not np.all(np.isfinite(tensor.values)):
        raise DataError("Тензор содержит нечисловые значения")

    dims, ranks = layout.dims, layout.ranks
    cores: list[np.ndarray] = []
    remainder = tensor.values.copy()
    for k in range(layout.order - 1):
        unfolding = remainder.reshape(ranks[k] * dims[k], -1)
        u, s, vt = linalg.svd(unfolding)
        r = ranks[k + 1]
        cores.append(u[:, :r].reshape(ranks[k], dims[k], r))
        remainder = s[:r, None] * vt[:r]
    cores.append(remainder.reshape(ranks[-2], dims[-1], 1))
    return TTVector(layout, tuple(cores))


def tt_reconstruct(tt: TTVector) -> DenseTensor:
    """Собрать плотный тензор перемножением ядер."""
    layout = tt.layout
    result = tt.cores[0].reshape(-1, layout.ranks[1])
    for k in range(1, layout.order):
        core = tt.cores[k].reshape(layout.ranks[k], -1)
        result = (result @ core).reshape(-1, layout.ranks[k + 1])
    return DenseTensor(layout.dims, result.reshape(-1))


def tt_element(tt: TTVector, indices: Sequence[int]) -> float:
    """Элемент тензора как произведение K срезов R_k × R_{k+1}.

    Raises:
        ShapeError: Число индексов не равно K.
        BoundsError: Индекс вне [0, D_k).
    """
    if len(indices) != tt.layout.order:
        raise ShapeError(f"Ожидалось {tt.layout.order} индексов, получено {len(indices)}")
    product = np.ones((1, 1))
    for k, (d, core) in enumerate(zip(indices, tt.cores)):
        if not 0 <= d < tt.layout.dims[k]:
            raise BoundsError(f"d_{k}", int(d), tt.layout.dims[k])
        product = product @ core[:, d, :]
    return float(product[0, 0])
