"""Pydantic-схемы конфигурации эксперимента."""

from __future__ import annotations

import enum
import math
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from qregress.models.circuit import BlockOrder, Topology
from qregress.models.network import MeasurementKind, ModelKind


class _Section(BaseModel):
    """База секций конфигурации: лишние ключи запрещены."""

    model_config = ConfigDict(extra="forbid", frozen=True)


# ── Шум ──────────────────────────────────────────────────


class NoiseKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LAPLACIAN = "laplacian"
    NONE = "none"


class PowerScope(str, enum.Enum):
    """Область оценки мощности сигнала при заданном SNR."""

    PER_IMAGE = "per-image"
    CORPUS = "corpus"


class NoiseSpec(_Section):
    """Аддитивный шум с заданным отношением сигнал/шум.

    SNR = +∞ равносилен отсутствию шума.
    """

    kind: NoiseKind = NoiseKind.NONE
    snr_db: float = math.inf
    power_scope: PowerScope = PowerScope.PER_IMAGE
    seed: int = 0

    @field_validator("snr_db")
    @classmethod
    def _snr_not_nan(cls, value: float) -> float:
        if math.isnan(value) or value == -math.inf:
            raise ValueError("SNR должен быть числом или +inf")
        return value

    @property
    def is_clean(self) -> bool:
        return self.kind is NoiseKind.NONE or self.snr_db == math.inf

    @property
    def label(self) -> str:
        if self.is_clean:
            return "clean"
        return f"{self.kind.value}-{self.snr_db:g}dB"

    @classmethod
    def parse(cls, text: str, seed: int = 0, power_scope: PowerScope = PowerScope.PER_IMAGE) -> NoiseSpec:
        """Разобрать запись вида `gaussian@8`, `laplacian@12.5` или `none`."""
        text = text.strip()
        if text in ("", "none", "clean"):
            return cls(seed=seed, power_scope=power_scope)
        kind, sep, snr = text.partition("@")
        if not sep:
            raise ValueError(f"Ожидалась запись вида kind@snr_db, получено '{text}'")
        return cls(kind=NoiseKind(kind.strip()), snr_db=float(snr), seed=seed, power_scope=power_scope)


def _noise_from_text(value: object) -> object:
    if isinstance(value, str):
        return NoiseSpec.parse(value)
    return value


# ── Оптимизатор ─────────────────────────────────────────


class OptimizerKind(str, enum.Enum):
    GD = "gd"
    ADAM = "adam"


DEFAULT_LEARNING_RATES = {OptimizerKind.GD: 1.0, OptimizerKind.ADAM: 0.01}


class OptimizerConfig(_Section):
    """Настройки оптимизатора и цикла обучения.

    `unit_lr_adam = true` включает Adam с η = 1 независимо от learning_rate.
    """

    kind: OptimizerKind = OptimizerKind.ADAM
    learning_rate: float | None = Field(default=None, ge=0.0)
    beta1: float = Field(default=0.9, gt=0.0, lt=1.0)
    beta2: float = Field(default=0.999, gt=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    batch_size: int = Field(default=50, ge=1)
    epochs: int = Field(default=30, ge=0)
    seed: int = 0
    unit_lr_adam: bool = False

    @model_validator(mode="before")
    @classmethod
    def _resolve_learning_rate(cls, data: object) -> object:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if str(data.get("unit_lr_adam", "")).lower() in ("true", "1", "yes"):
            data["kind"] = OptimizerKind.ADAM
            data["learning_rate"] = 1.0
        elif data.get("learning_rate") is None:
            data["learning_rate"] = DEFAULT_LEARNING_RATES[OptimizerKind(data.get("kind", OptimizerKind.ADAM))]
        return data

    @property
    def lr(self) -> float:
        return float(self.learning_rate or 0.0)


# ── Модель ───────────────────────────────────────────────


class ReadoutKind(str, enum.Enum):
    RANDOM = "random"
    IDENTITY = "identity"


class ModelConfig(_Section):
    """Архитектура модели. Значения по умолчанию — 8-кубитная конфигурация MNIST."""

    kind: ModelKind = ModelKind.TTN_VQC
    qubits: int = Field(default=8, ge=1, le=16)
    factors: list[int] = Field(default_factory=lambda: [2, 2, 2])
    dims: list[int] = Field(default_factory=lambda: [7, 16, 7])
    ranks: list[int] = Field(default_factory=lambda: [1, 3, 3, 1])
    blocks: int = Field(default=4, ge=1)
    topology: Topology = Topology.CHAIN
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST
    readout: ReadoutKind = ReadoutKind.RANDOM

    @field_validator("factors", "dims", "ranks", mode="before")
    @classmethod
    def _scalar_to_list(cls, value: object) -> object:
        if isinstance(value, (int, str)):
            return [value]
        return value

    @model_validator(mode="after")
    def _check_factors(self) -> ModelConfig:
        if self.kind is ModelKind.TTN_VQC:
            if math.prod(self.factors) != self.qubits:
                raise ValueError(f"∏ factors = {math.prod(self.factors)} ≠ qubits = {self.qubits}")
            if len(self.factors) != len(self.dims):
                raise ValueError("Число множителей U_k должно совпадать с числом размерностей D_k")
        return self


# ── Данные ───────────────────────────────────────────────


class DataSource(str, enum.Enum):
    MNIST = "mnist"
    SYNTHETIC = "synthetic"


class SyntheticTarget(str, enum.Enum):
    """Целевое отображение синтетической задачи."""

    TEACHER = "teacher"
    ANALYTIC = "analytic"


class DataConfig(_Section):
    """Источник данных, объёмы выборок и условия шума."""

    source: DataSource = DataSource.MNIST
    train_images: Path | None = None
    train_labels: Path | None = None
    test_images: Path | None = None
    test_labels: Path | None = None
    n_train: int = Field(default=2000, ge=1)
    n_test: int = Field(default=500, ge=0)
    train_noise: NoiseSpec = Field(default_factory=lambda: NoiseSpec.parse("gaussian@15"))
    test_noises: list[NoiseSpec] = Field(
        default_factory=lambda: [NoiseSpec.parse(s) for s in ("gaussian@15", "gaussian@8", "gaussian@12")],
    )
    power_scope: PowerScope = PowerScope.PER_IMAGE
    synthetic_target: SyntheticTarget = SyntheticTarget.TEACHER
    synthetic_outputs: int = Field(default=4, ge=1)
    noise_seed: int = 0

    @field_validator("train_noise", mode="before")
    @classmethod
    def _parse_train_noise(cls, value: object) -> object:
        return _noise_from_text(value)

    @field_validator("test_noises", mode="before")
    @classmethod
    def _parse_test_noises(cls, value: object) -> object:
        if isinstance(value, str):
            value = [value]
        return [_noise_from_text(v) for v in value]  # type: ignore[union-attr]


# ── Измерение, скрининг, теория, развёртки ──────────────


class MeasurementConfig(_Section):
    mode: MeasurementKind = MeasurementKind.EXACT
    shots: int = Field(default=1024, ge=1)
    seed: int = 0


class KernelSpace(str, enum.Enum):
    """Пространство, в котором строится касательное ядро."""

    OUTPUT = "output"
    MEASUREMENT = "measurement"


class ScreeningConfig(_Section):
    """Отбор инициализации по наименьшему собственному числу касательного ядра."""

    enabled: bool = False
    mu_target: float = Field(default=0.05, gt=0.0)
    max_attempts: int = Field(default=50, ge=1)
    batch_size: int = Field(default=8, ge=1)
    kernel_space: KernelSpace = KernelSpace.MEASUREMENT


class NuMode(str, enum.Enum):
    """Как заполнять ошибку обучения ν в агрегированной оценке."""

    MEASURED = "measured"
    ZERO = "zero"


class TheoryConfig(_Section):
    c1: float | None = Field(default=None, ge=0.0)
    c2: float | None = Field(default=None, ge=0.0)
    unitary_norm: float | None = Field(default=None, ge=0.0)
    rademacher_draws: int = Field(default=20, ge=1)
    ascent_steps: int = Field(default=200, ge=1)
    ascent_step_size: float = Field(default=0.5, gt=0.0)
    shots: list[int] = Field(default_factory=lambda: [100, 400, 1600, 6400, 25600])
    shot_trials: int = Field(default=200, ge=1)
    shot_samples: int = Field(default=4, ge=1)
    envelope_slack: float = Field(default=1.2, gt=0.0)
    pl_nu: NuMode = NuMode.MEASURED


class SweepConfig(_Section):
    """Значения осей для подкоманды sweep."""

    qubit_factors: list[str] = Field(default_factory=lambda: ["2x2x2", "2x3x2"])
    shots: list[int] = Field(default_factory=lambda: [100, 400, 1600, 6400, 25600])
    train_sizes: list[int] = Field(default_factory=lambda: [1000, 2000, 4000])
    snr: list[str] = Field(
        default_factory=lambda: ["gaussian@8", "gaussian@12", "laplacian@8", "laplacian@12"],
    )

    @field_validator("qubit_factors", "shots", "train_sizes", "snr", mode="before")
    @classmethod
    def _scalar_to_list(cls, value: object) -> object:
        if isinstance(value, (int, str)):
            return [value]
        return value


# ── Эксперимент целиком ─────────────────────────────────


class ExperimentConfig(_Section):
    """Полная конфигурация одного эксперимента."""

    name: str = "experiment"
    seed: int = 0
    model: ModelConfig = Field(default_factory=ModelConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    measurement: MeasurementConfig = Field(default_factory=MeasurementConfig)
    screening: ScreeningConfig = Field(default_factory=ScreeningConfig)
    theory: TheoryConfig = Field(default_factory=TheoryConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)

    def with_updates(self, **sections: dict[str, object]) -> ExperimentConfig:
        """Вернуть копию с изменёнными полями секций (с повторной валидацией)."""
        payload = self.model_dump()
        for section, values in sections.items():
            if isinstance(payload.get(section), dict):
                payload[section].update(values)
            else:
                payload[section] = values
        return ExperimentConfig.model_validate(payload)
