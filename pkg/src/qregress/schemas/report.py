"""Pydantic-схемы результатов: записи эпох, отчёты PL, теории и запуска."""

from __future__ import annotations

import math
from datetime import datetime
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Finite(BaseModel):
    """База отчётов: NaN и ±Inf в числовых полях запрещены."""

    model_config = ConfigDict(allow_inf_nan=False, frozen=True)


# ── Обучение ─────────────────────────────────────────────


class EpochRecord(_Finite):
    """Одна строка истории обучения."""

    epoch: int = Field(..., ge=1)
    train_mae: float = Field(..., ge=0.0)
    test_mae: float | None = Field(default=None, ge=0.0)
    grad_norm: float = Field(..., ge=0.0)
    pl_ratio: float | None = Field(
        default=None,
        ge=0.0,
        description="μ̂_t = ‖∇L‖² / (2L); пусто при L = 0",
    )
    seconds: float = Field(..., ge=0.0)


class PLInitReport(_Finite):
    """Итог отбора инициализации по касательному ядру."""

    attempts: int = Field(..., ge=1)
    lambda_min: float
    mu_target: float = Field(..., gt=0.0)
    accepted: bool
    ball_radius: float = Field(..., ge=0.0, description="r = 2√(2·L_S(θ_0)) / μ_target")
    initial_loss: float = Field(..., ge=0.0)
    kernel_space: str = "measurement"
    final_distance: float | None = Field(default=None, ge=0.0, description="‖θ_T − θ_0‖₂ после обучения")
    in_ball: bool | None = None

    @model_validator(mode="after")
    def _accepted_means_threshold(self) -> PLInitReport:
        if self.accepted and self.lambda_min < self.mu_target:
            raise ValueError("accepted = true требует λ_min ≥ μ_target")
        return self


class EnvelopeCheck(_Finite):
    """Проверка огибающей сходимости на одной эпохе."""

    epoch: int
    loss: float
    aggregate_limit: float
    aggregate_ok: bool
    step_limit: float | None = None
    step_ok: bool


class EnvelopeVerdict(_Finite):
    """Вердикт по всей истории: экспоненциальная и пошаговая огибающие."""

    mu_min: float
    slack: float
    checks: list[EnvelopeCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.aggregate_ok and c.step_ok for c in self.checks)

    @property
    def first_failure(self) -> int | None:
        for check in self.checks:
            if not (check.aggregate_ok and check.step_ok):
                return check.epoch
        return None


# ── Теория ───────────────────────────────────────────────


class BoundInputs(BaseModel):
    """Входные величины агрегированной оценки ошибки.

    `shots = None` означает M = ∞ (точные ожидания).
    """

    model_config = ConfigDict(frozen=True)

    power: float = Field(..., ge=0.0, description="P = max ‖x_n‖₂")
    samples: int = Field(..., ge=1, description="N")
    channel_norms: list[float] = Field(..., min_length=1, description="Λ_1..Λ_K")
    unitary_norm: float = Field(..., ge=0.0, description="Λ′")
    qubits: int = Field(..., ge=1)
    shots: int | None = Field(default=None, ge=1)
    c1: float | None = Field(default=None, ge=0.0)
    c2: float | None = Field(default=None, ge=0.0)
    nu: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _norms_non_negative(self) -> BoundInputs:
        if any(not math.isfinite(v) or v < 0 for v in self.channel_norms):
            raise ValueError("Нормы Λ_k должны быть конечными и неотрицательными")
        return self

    @property
    def order(self) -> int:
        """Порядок тензора K."""
        return len(self.channel_norms)


class ScalingFit(_Finite):
    """Результат подгонки ошибка ≈ c₁/√U + c₂/√M."""

    c1: float
    c2: float
    residual: float = Field(..., ge=0.0)
    shot_slopes: dict[int, float] = Field(
        default_factory=dict,
        description="Наклон log(ошибка) от log M при фиксированном U",
    )


class EmpiricalSummary(_Finite):
    """Эмпирические заместители членов разложения ошибки (не сами члены)."""

    train_mae: float
    test_mae: float | None = None
    generalization_gap: float | None = None
    rademacher_estimate: float | None = None


class TheoryReport(_Finite):
    """Агрегированная оценка: аппроксимация + оценивание + ошибка обучения."""

    approx_bound: float = Field(..., ge=0.0)
    estimation_bound: float = Field(..., ge=0.0)
    training_error: float = Field(..., ge=0.0, description="ν")
    aggregate: float = Field(..., ge=0.0)
    channel_bound: float | None = None
    empirical: EmpiricalSummary | None = None
    universal_factor: float | None = Field(default=None, gt=0.0, description="∏_k 1/√U_k")
    notes: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _aggregate_is_sum(self) -> TheoryReport:
        total = self.approx_bound + self.estimation_bound + self.training_error
        if total != self.aggregate:
            raise ValueError("aggregate должен равняться сумме трёх слагаемых")
        return self


# ── Запуск эксперимента ─────────────────────────────────


class ConditionResult(_Finite):
    """MAE модели на одном тестовом условии (вид шума, SNR)."""

    label: str
    noise: str
    snr_db: float | None = None
    realized_snr_db: float | None = None
    test_mae: float = Field(..., ge=0.0)
    dataset_power: float = Field(..., ge=0.0)


class RunReport(_Finite):
    """Итоговый отчёт одного запуска (report.json)."""

    name: str
    model_kind: str
    qubits: int
    train_size: int
    test_size: int
    epochs: int
    final_train_mae: float
    final_test_mae: float | None = None
    conditions: list[ConditionResult] = Field(default_factory=list)
    param_count: int
    param_bytes: int
    channel_norms: list[float] = Field(default_factory=list)
    unitary_norm: float
    dataset_power: float
    pl_init: PLInitReport | None = None
    theory: TheoryReport
    envelope: EnvelopeVerdict | None = None
    history_file: str = "history.csv"
    history_rows: int
    config: dict[str, Any]
    reference: dict[str, float] = Field(default_factory=dict)
    generated_at: datetime

    @model_validator(mode="after")
    def _history_matches_epochs(self) -> RunReport:
        if self.history_rows != self.epochs:
            raise ValueError(
                f"Число строк истории {self.history_rows} не равно числу эпох {self.epochs}",
            )
        return self


class SweepRow(_Finite):
    """Одна строка сводной таблицы развёртки."""

    axis: str
    value: str
    model_kind: str
    qubits: int
    shots: int | None = None
    train_size: int
    noise: str
    train_mae: float | None = None
    test_mae: float | None = None
    rmse: float | None = None
