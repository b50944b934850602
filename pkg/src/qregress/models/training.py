"""Состояние обучения: параметры, история эпох, начальные величины для PL-монитора."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qregress.schemas.report import EpochRecord


@dataclass
class TrainState:
    """Снимок процесса обучения.

    Attributes:
        params: Текущий плоский вектор параметров θ = {θ_ttn, θ_vqc}.
        initial_params: θ_0.
        initial_loss: L_S(θ_0) на полной обучающей выборке.
        initial_grad_norm: ‖∇L_S(θ_0)‖₂.
        epoch: Число завершённых эпох.
        history: Записи по эпохам 1..epoch.
    """

    params: np.ndarray = field(repr=False)
    initial_params: np.ndarray = field(repr=False)
    initial_loss: float = 0.0
    initial_grad_norm: float = 0.0
    epoch: int = 0
    history: list[EpochRecord] = field(default_factory=list)

    @property
    def losses(self) -> list[float]:
        """L_S(θ_0), L_S(θ_1), …, L_S(θ_T)."""
        return [self.initial_loss, *(r.train_mae for r in self.history)]

    @property
    def final_train_mae(self) -> float:
        return self.history[-1].train_mae if self.history else self.initial_loss
