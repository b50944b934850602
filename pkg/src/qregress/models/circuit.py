"""Типы данных квантовой схемы: вектор состояния, параметры VQC, вентили, отсчёты."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from qregress.exceptions import DataError, DomainError, ShapeError

MAX_QUBITS = 16
NORM_TOLERANCE = 1e-10


class GateKind(str, enum.Enum):
    """Поддерживаемые вентили."""

    RX = "rx"
    RY = "ry"
    RZ = "rz"
    CNOT = "cnot"


class Topology(str, enum.Enum):
    """Схема расстановки CNOT в блоке PQC."""

    CHAIN = "chain"
    RING = "ring"


class BlockOrder(str, enum.Enum):
    """Порядок слоёв внутри блока PQC."""

    ENTANGLE_FIRST = "entangle-first"
    ROTATE_FIRST = "rotate-first"


# Порядок осей в массиве углов: α (RX), β (RY), γ (RZ)
ROTATION_AXES = (GateKind.RX, GateKind.RY, GateKind.RZ)


@dataclass(frozen=True)
class Gate:
    """Один вентиль схемы.

    Attributes:
        kind: Тип вентиля.
        qubits: Кубит-мишень, для CNOT — пара (управляющий, целевой).
        theta: Угол поворота (для CNOT не используется).
        param_index: Позиция угла в массиве VQCParams.angles (блок, кубит, ось)
            или None для фиксированных вентилей.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    theta: float = 0.0
    param_index: tuple[int, int, int] | None = None

    @classmethod
    def rx(cls, theta: float, qubit: int) -> Gate:
        return cls(GateKind.RX, (qubit,), float(theta))

    @classmethod
    def ry(cls, theta: float, qubit: int) -> Gate:
        return cls(GateKind.RY, (qubit,), float(theta))

    @classmethod
    def rz(cls, theta: float, qubit: int) -> Gate:
        return cls(GateKind.RZ, (qubit,), float(theta))

    @classmethod
    def cnot(cls, control: int, target: int) -> Gate:
        return cls(GateKind.CNOT, (control, target))


@dataclass(frozen=True)
class StateVector:
    """Чистое состояние U кубитов.

    Кубит 0 — старший бит базисного индекса, что совпадает с порядком
    кронекерова произведения слева направо.

    Attributes:
        num_qubits: Число кубитов U (1 ≤ U ≤ 16).
        amplitudes: Комплексные амплитуды длины 2^U.
    """

    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise DomainError(f"Число кубитов {self.num_qubits} вне [1, {MAX_QUBITS}]")
        amplitudes = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amplitudes.size != 2**self.num_qubits:
            raise ShapeError(
                f"Длина вектора {amplitudes.size} не равна 2^{self.num_qubits}",
            )
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise DataError(f"Норма состояния {norm:.12f} отличается от 1")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def zero(cls, num_qubits: int) -> StateVector:
        """Состояние |0…0⟩."""
        amplitudes = np.zeros(2**num_qubits, dtype=np.complex128)
        amplitudes[0] = 1.0
        return cls(num_qubits, amplitudes)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> StateVector:
        """Базисное состояние с заданным индексом."""
        amplitudes = np.zeros(2**num_qubits, dtype=np.complex128)
        amplitudes[index] = 1.0
        return cls(num_qubits, amplitudes)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class VQCParams:
    """Параметры PQC: L блоков × U кубитов × 3 угла (α, β, γ) в радианах."""

    angles: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        angles = np.array(self.angles, dtype=np.float64)
        if angles.ndim != 3 or angles.shape[2] != 3:
            raise ShapeError(f"Ожидался массив L×U×3, получено {angles.shape}")
        if angles.shape[0] < 1:
            raise ShapeError("Нужен хотя бы один блок PQC")
        if not 1 <= angles.shape[1] <= MAX_QUBITS:
            raise DomainError(f"Число кубитов {angles.shape[1]} вне [1, {MAX_QUBITS}]")
        if not np.all(np.isfinite(angles)):
            raise DataError("Углы VQC содержат нечисловые значения")
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)

    @property
    def num_blocks(self) -> int:
        return int(self.angles.shape[0])

    @property
    def num_qubits(self) -> int:
        return int(self.angles.shape[1])

    @property
    def size(self) -> int:
        return int(self.angles.size)

    @classmethod
    def zeros(cls, num_blocks: int, num_qubits: int) -> VQCParams:
        return cls(np.zeros((num_blocks, num_qubits, 3)))


@dataclass(frozen=True)
class ShotResult:
    """Результат выборочного измерения в вычислительном базисе.

    Attributes:
        shots: Число измерений M.
        counts: Ненулевые отсчёты по битовым строкам (кубит 0 — первый символ).
    """

    shots: int
    counts: dict[str, int]

    def __post_init__(self) -> None:
        if sum(self.counts.values()) != self.shots:
            raise DataError("Сумма отсчётов не равна числу измерений")
