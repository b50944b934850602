"""Типы моделей: TTN-слой, TTN-VQC, базовая PCA-VQC, режим измерения, отчёт о потерях."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from qregress.exceptions import DomainError, ShapeError
from qregress.models.circuit import BlockOrder, Topology, VQCParams
from qregress.models.tensor import TensorLayout


class ModelKind(str, enum.Enum):
    """Вид входного блока модели."""

    TTN_VQC = "ttn-vqc"
    PCA_VQC = "pca-vqc"


class MeasurementKind(str, enum.Enum):
    EXACT = "exact"
    SHOTS = "shots"


@dataclass(frozen=True)
class MeasurementMode:
    """Режим измерения: точные ожидания или оценка по M измерениям."""

    kind: MeasurementKind = MeasurementKind.EXACT
    shots: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind is MeasurementKind.SHOTS and self.shots < 1:
            raise DomainError("Для режима shots требуется M ≥ 1")

    @classmethod
    def exact(cls) -> MeasurementMode:
        return cls()

    @classmethod
    def with_shots(cls, shots: int, seed: int = 0) -> MeasurementMode:
        return cls(MeasurementKind.SHOTS, shots, seed)


@dataclass(frozen=True)
class TTNLayer:
    """Тензорно-поездной входной слой (по одному полносвязному каналу на порядок).

    Канал k: вес W̄^[k] формы U_k × (R_k·D_k·R_{k+1}), без смещения.

    Attributes:
        layout: Раскладка входного тензора и ранги.
        channel_out_dims: Выходные размерности каналов U_1..U_K.
        weights: K весовых матриц.
    """

    layout: TensorLayout
    channel_out_dims: tuple[int, ...]
    weights: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self) -> None:
        out_dims = tuple(int(u) for u in self.channel_out_dims)
        object.__setattr__(self, "channel_out_dims", out_dims)
        if len(out_dims) != self.layout.order or any(u < 1 for u in out_dims):
            raise ShapeError(
                f"Нужно {self.layout.order} положительных выходных размерностей, получено {out_dims}",
            )
        if len(self.weights) != self.layout.order:
            raise ShapeError(f"Ожидалось {self.layout.order} весовых матриц")
        frozen = []
        for k, weight in enumerate(self.weights):
            weight = np.array(weight, dtype=np.float64)
            expected = (out_dims[k], self.layout.core_size(k))
            if weight.shape != expected:
                raise ShapeError(f"Вес канала {k}: форма {weight.shape}, ожидалась {expected}")
            weight.setflags(write=False)
            frozen.append(weight)
        object.__setattr__(self, "weights", tuple(frozen))

    @property
    def num_outputs(self) -> int:
        """Число выходов U = ∏ U_k."""
        return math.prod(self.channel_out_dims)

    @property
    def param_count(self) -> int:
        return sum(w.size for w in self.weights)


@dataclass(frozen=True)
class TTNVQCModel:
    """Составная модель TTN → TPE → PQC → измерение → фиксированная регрессия T_lr.

    Attributes:
        ttn: Входной TTN-слой.
        vqc: Параметры PQC.
        readout: Фиксированная матрица Q_out × U.
        topology: Расстановка CNOT.
        block_order: Порядок слоёв в блоке.
        seed: Зерно инициализации (для воспроизводимости).
    """

    ttn: TTNLayer
    vqc: VQCParams
    readout: np.ndarray = field(repr=False)
    topology: Topology = Topology.CHAIN
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST
    seed: int = 0

    kind = ModelKind.TTN_VQC

    def __post_init__(self) -> None:
        readout = _freeze_readout(self.readout, self.vqc.num_qubits)
        object.__setattr__(self, "readout", readout)
        if self.ttn.num_outputs != self.vqc.num_qubits:
            raise ShapeError(
                f"∏U_k={self.ttn.num_outputs} не совпадает с числом кубитов {self.vqc.num_qubits}",
            )

    @property
    def num_qubits(self) -> int:
        return self.vqc.num_qubits

    @property
    def input_dim(self) -> int:
        return self.ttn.layout.size

    @property
    def output_dim(self) -> int:
        return int(self.readout.shape[0])


@dataclass(frozen=True)
class PCAProjection:
    """Результат подгонки PCA: направления, центр и границы масштабирования."""

    projection: np.ndarray = field(repr=False)
    mean: np.ndarray = field(repr=False)
    scale_min: np.ndarray = field(repr=False)
    scale_max: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PCAVQCModel:
    """Базовая модель: PCA-проекция → min-max масштабирование → VQC → T_lr.

    Attributes:
        projection: Матрица U × Q из главных направлений (строки ортонормированы).
        mean: Среднее обучающих входов (для центрирования).
        scale_min: Минимумы проекций на обучающей выборке.
        scale_max: Максимумы проекций на обучающей выборке.
        vqc: Параметры PQC.
        readout: Фиксированная матрица Q_out × U.
    """

    projection: np.ndarray = field(repr=False)
    mean: np.ndarray = field(repr=False)
    scale_min: np.ndarray = field(repr=False)
    scale_max: np.ndarray = field(repr=False)
    vqc: VQCParams = field(repr=False)
    readout: np.ndarray = field(repr=False)
    topology: Topology = Topology.CHAIN
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST
    seed: int = 0

    kind = ModelKind.PCA_VQC

    def __post_init__(self) -> None:
        projection = np.array(self.projection, dtype=np.float64)
        u = self.vqc.num_qubits
        if projection.ndim != 2 or projection.shape[0] != u:
            raise ShapeError(f"Проекция должна иметь {u} строк, форма {projection.shape}")
        for name in ("mean", "scale_min", "scale_max"):
            value = np.array(getattr(self, name), dtype=np.float64)
            expected = projection.shape[1] if name == "mean" else u
            if value.shape != (expected,):
                raise ShapeError(f"{name}: форма {value.shape}, ожидалась ({expected},)")
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        projection.setflags(write=False)
        object.__setattr__(self, "projection", projection)
        object.__setattr__(self, "readout", _freeze_readout(self.readout, u))

    @property
    def num_qubits(self) -> int:
        return self.vqc.num_qubits

    @property
    def input_dim(self) -> int:
        return int(self.projection.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.readout.shape[0])

    @property
    def constant_components(self) -> np.ndarray:
        """Маска компонент, у которых min ≥ max на обучающей выборке."""
        return ~(self.scale_min < self.scale_max)


Model = TTNVQCModel | PCAVQCModel


@dataclass(frozen=True)
class LossReport:
    """Значение MAE и, при наличии, потери по отдельным образцам."""

    mae: float
    per_sample: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class ModelNorms:
    """Нормы Фробениуса Λ_1..Λ_K, Λ′ и число обучаемых параметров."""

    channel_norms: tuple[float, ...]
    unitary_norm: float
    param_count: int

    @property
    def param_bytes(self) -> int:
        return self.param_count * 8


def _freeze_readout(readout: np.ndarray, num_qubits: int) -> np.ndarray:
    readout = np.array(readout, dtype=np.float64)
    if readout.ndim != 2 or readout.shape[1] != num_qubits:
        raise ShapeError(f"Матрица T_lr должна иметь {num_qubits} столбцов, форма {readout.shape}")
    readout.setflags(write=False)
    return readout
