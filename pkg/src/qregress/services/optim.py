"""Обучение (GD, Adam), монитор условия PL, отбор инициализации по касательному ядру
и проверка огибающей экспоненциальной сходимости.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from qregress.exceptions import DomainError, NumericalError, ShapeError, TrainingAbortedError
from qregress.models.dataset import RegressionDataset
from qregress.models.network import Model
from qregress.models.training import TrainState
from qregress.schemas.experiment import KernelSpace, OptimizerConfig, OptimizerKind, ScreeningConfig
from qregress.schemas.report import EnvelopeCheck, EnvelopeVerdict, EpochRecord, PLInitReport
from qregress.services import network

logger = logging.getLogger(__name__)

MAX_KERNEL_ROWS = 512

Monitor = Callable[[EpochRecord, TrainState], None]


# ── Целевые функции ──────────────────────────────────────


class Objective(Protocol):
    """Функция потерь над плоским вектором параметров."""

    @property
    def num_samples(self) -> int: ...

    def loss_and_grad(self, params: np.ndarray, indices: np.ndarray | None = None) -> tuple[float, np.ndarray]:
        """Средняя потеря и градиент по строкам indices (None — вся выборка)."""
        ...


class ModelObjective:
    """MAE модели на наборе данных; параметры — flatten_params(model)."""

    def __init__(
        self,
        model: Model,
        dataset: RegressionDataset,
        cache: network.InputCoreCache | None = None,
    ) -> None:
        if dataset.input_dim != model.input_dim or dataset.output_dim != model.output_dim:
            raise ShapeError(
                f"Модель {model.input_dim}→{model.output_dim} не согласована с данными "
                f"{dataset.input_dim}→{dataset.output_dim}",
            )
        self._model = model
        self._dataset = dataset
        self._cache = cache if cache is not None else network.InputCoreCache()

    @property
    def num_samples(self) -> int:
        return len(self._dataset)

    @property
    def cache(self) -> network.InputCoreCache:
        return self._cache

    def model_at(self, params: np.ndarray) -> Model:
        return network.with_params(self._model, params)

    def loss_and_grad(self, params: np.ndarray, indices: np.ndarray | None = None) -> tuple[float, np.ndarray]:
        model = self.model_at(params)
        rows = np.arange(self.num_samples) if indices is None else np.asarray(indices)
        total_loss = 0.0
        total_grad = np.zeros(params.size)
        # фиксированный порядок частичных сумм
        for start in range(0, rows.size, network.CHUNK_ROWS):
            chunk = rows[start:start + network.CHUNK_ROWS]
            grads = network.model_gradients(
                model, self._dataset.inputs[chunk], self._dataset.targets[chunk], cache=self._cache,
            )
            weight = chunk.size / rows.size
            total_loss += weight * grads.loss
            total_grad += weight * grads.flatten()
        return total_loss, total_grad


@dataclass
class QuadraticObjective:
    """L(θ) = ½‖θ − center‖², одна «выборка»; эталон для PL-проверок (μ = 1)."""

    center: np.ndarray | None = None

    @property
    def num_samples(self) -> int:
        return 1

    def loss_and_grad(self, params: np.ndarray, indices: np.ndarray | None = None) -> tuple[float, np.ndarray]:
        residual = params - (self.center if self.center is not None else 0.0)
        return 0.5 * float(residual @ residual), residual


# ── Шаг оптимизатора ─────────────────────────────────────


@dataclass
class AdamState:
    """Моменты Adam и номер шага."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> AdamState:
        return cls(np.zeros(size), np.zeros(size))


def optimizer_step(
    theta: np.ndarray,
    grad: np.ndarray,
    state: AdamState | None,
    opt: OptimizerConfig,
) -> np.ndarray:
    """Один шаг: gd θ′ = θ − η·g; adam — стандартное обновление с поправкой смещения.

    Raises:
        ShapeError: Формы θ и градиента различаются.
    """
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape:
        raise ShapeError(f"Формы параметров {theta.shape} и градиента {grad.shape} различаются")
    if opt.kind is OptimizerKind.GD:
        return theta - opt.lr * grad

    if state is None:
        raise DomainError("Для Adam требуется состояние моментов")
    state.t += 1
    state.m = opt.beta1 * state.m + (1.0 - opt.beta1) * grad
    state.v = opt.beta2 * state.v + (1.0 - opt.beta2) * grad**2
    m_hat = state.m / (1.0 - opt.beta1**state.t)
    v_hat = state.v / (1.0 - opt.beta2**state.t)
    return theta - opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)


# ── Условие PL ───────────────────────────────────────────


def pl_ratio(loss: float, grad_norm: float) -> float:
    """μ̂ = ‖∇L‖² / (2L): наибольшее μ, при котором ½‖∇L‖² ≥ μL выполняется в точке.

    Raises:
        DomainError: L ≤ 0.
    """
    if not loss > 0.0:
        raise DomainError(f"Отношение PL не определено при L = {loss}")
    return grad_norm * grad_norm / (2.0 * loss)


def step_contraction(eta: float, mu: float) -> float:
    """Множитель одного шага GD: 1 − 2ημ + η²μ (при η = 1 равен 1 − μ)."""
    return 1.0 - 2.0 * eta * mu + eta * eta * mu


def ball_radius(initial_loss: float, mu: float) -> float:
    """r = 2√(2·L_S(θ_0)) / μ."""
    if mu <= 0.0:
        raise DomainError(f"μ должно быть положительным, получено {mu}")
    return 2.0 * math.sqrt(2.0 * max(initial_loss, 0.0)) / mu


def ball_check(theta_0: np.ndarray, theta_t: np.ndarray, initial_loss: float, mu: float) -> tuple[float, float, bool]:
    """Остались ли параметры в шаре радиуса r вокруг θ_0.

    Returns:
        (‖θ_T − θ_0‖₂, r, попадание в шар).
    """
    distance = float(np.linalg.norm(np.asarray(theta_t) - np.asarray(theta_0)))
    radius = ball_radius(initial_loss, mu)
    return distance, radius, distance <= radius


# ── Цикл обучения ────────────────────────────────────────


def _all_finite(loss: float, grad: np.ndarray) -> bool:
    return math.isfinite(loss) and bool(np.all(np.isfinite(grad)))


def run_training(
    objective: Objective,
    initial_params: np.ndarray,
    opt: OptimizerConfig,
    evaluate: Callable[[np.ndarray], float] | None = None,
    monitors: Iterable[Monitor] = (),
) -> TrainState:
    """Эпохи мини-пакетного обучения с перемешиванием от (seed, эпоха).

    Полная потеря и градиент считаются один раз в конце каждой эпохи
    для монитора PL.

    Args:
        objective: Целевая функция.
        initial_params: θ_0.
        opt: Настройки оптимизатора.
        evaluate: MAE на тестовой выборке для вектора параметров.
        monitors: Обработчики, вызываемые после каждой эпохи.

    Raises:
        TrainingAbortedError: Нечисловое значение потерь или градиента;
            исключение несёт диагностическое состояние.
    """
    theta = np.array(initial_params, dtype=np.float64)
    loss_0, grad_0 = objective.loss_and_grad(theta)
    state = TrainState(
        params=theta.copy(),
        initial_params=theta.copy(),
        initial_loss=loss_0,
        initial_grad_norm=float(np.linalg.norm(grad_0)),
    )
    if not _all_finite(loss_0, grad_0):
        logger.error("Нечисловая начальная потеря: %s", loss_0)
        raise TrainingAbortedError(0, state)

    monitors = tuple(monitors)
    adam = AdamState.zeros(theta.size) if opt.kind is OptimizerKind.ADAM else None
    n = objective.num_samples
    for epoch in range(1, opt.epochs + 1):
        started = time.perf_counter()
        order = np.random.default_rng([opt.seed, epoch]).permutation(n)
        for start in range(0, n, opt.batch_size):
            loss, grad = objective.loss_and_grad(theta, order[start:start + opt.batch_size])
            if not _all_finite(loss, grad):
                state.params = theta.copy()
                logger.error("Обучение остановлено на эпохе %d: потеря %s", epoch, loss)
                raise TrainingAbortedError(epoch, state)
            theta = optimizer_step(theta, grad, adam, opt)
            if not np.all(np.isfinite(theta)):
                logger.error("Обучение остановлено на эпохе %d: нечисловые параметры", epoch)
                raise TrainingAbortedError(epoch, state)

        full_loss, full_grad = objective.loss_and_grad(theta)
        state.params = theta.copy()
        if not _all_finite(full_loss, full_grad):
            logger.error("Обучение остановлено на эпохе %d: потеря %s", epoch, full_loss)
            raise TrainingAbortedError(epoch, state)

        grad_norm = float(np.linalg.norm(full_grad))
        record = EpochRecord(
            epoch=epoch,
            train_mae=full_loss,
            test_mae=evaluate(theta) if evaluate is not None else None,
            grad_norm=grad_norm,
            pl_ratio=pl_ratio(full_loss, grad_norm) if full_loss > 0.0 else None,
            seconds=time.perf_counter() - started,
        )
        state.history.append(record)
        state.epoch = epoch
        logger.info(
            "Эпоха %d/%d: train MAE %.6f, test MAE %s, ‖∇L‖ %.3e",
            epoch,
            opt.epochs,
            record.train_mae,
            f"{record.test_mae:.6f}" if record.test_mae is not None else "—",
            grad_norm,
        )
        for monitor in monitors:
            monitor(record, state)
    return state


def train(
    model: Model,
    dataset: RegressionDataset,
    opt: OptimizerConfig,
    test: RegressionDataset | None = None,
    monitors: Iterable[Monitor] = (),
    cache: network.InputCoreCache | None = None,
) -> TrainState:
    """Обучить модель на наборе данных; итоговая модель — network.with_params(model, state.params).

    Raises:
        DomainError: Пустой набор данных.
        ShapeError: Модель и данные не согласованы.
        TrainingAbortedError: Нечисловая потеря.
    """
    if len(dataset) == 0:
        raise DomainError("Обучающая выборка пуста")
    objective = ModelObjective(model, dataset, cache)
    evaluate = None
    if test is not None and len(test) > 0:
        def evaluate(params: np.ndarray) -> float:
            return network.evaluate(objective.model_at(params), test.inputs, test.targets, cache=objective.cache).mae

    return run_training(objective, network.flatten_params(model), opt, evaluate, monitors)


# ── Касательное ядро ─────────────────────────────────────


def kernel_min_eig(jacobian: np.ndarray) -> float:
    """λ_min(J·Jᵀ) симметричным собственным решателем.

    Raises:
        DomainError: Ядро больше 512 × 512.
        NumericalError: Решатель не сошёлся.
    """
    jacobian = np.atleast_2d(np.asarray(jacobian, dtype=np.float64))
    if jacobian.shape[0] > MAX_KERNEL_ROWS:
        raise DomainError(
            f"Касательное ядро {jacobian.shape[0]}×{jacobian.shape[0]} больше допустимого {MAX_KERNEL_ROWS}",
        )
    kernel = jacobian @ jacobian.T
    try:
        eigenvalues = np.linalg.eigvalsh(kernel)
    except np.linalg.LinAlgError as exc:
        n = kernel.shape[0]
        raise NumericalError("eigvalsh", detail=f"ядро {n}×{n}: {exc}") from exc
    return float(eigenvalues[0])


def tangent_kernel_min_eig(
    model: Model,
    inputs: np.ndarray,
    space: KernelSpace = KernelSpace.OUTPUT,
    cache: network.InputCoreCache | None = None,
) -> float:
    """λ_min касательного ядра K_f = J·Jᵀ модели на пакете.

    Raises:
        DomainError: B × размерность пространства больше 512.
    """
    inputs = np.atleast_2d(inputs)
    width = model.output_dim if space is KernelSpace.OUTPUT else model.num_qubits
    if inputs.shape[0] * width > MAX_KERNEL_ROWS:
        raise DomainError(
            f"Пакет {inputs.shape[0]} × {width} выходов превышает {MAX_KERNEL_ROWS} строк ядра",
        )
    return kernel_min_eig(network.model_jacobian(model, inputs, space.value, cache))


@dataclass
class ScreeningResult:
    """Выбранная инициализация и отчёт об отборе."""

    model: Model
    report: PLInitReport
    attempts_log: list[float] = field(default_factory=list)


def screen_initialization(
    build: Callable[[int], Model],
    dataset: RegressionDataset,
    config: ScreeningConfig,
    seed: int = 0,
    cache: network.InputCoreCache | None = None,
) -> ScreeningResult:
    """Отбор инициализации: попытки до λ_min(K_f) ≥ μ_target или исчерпания лимита.

    Если ни одна попытка не прошла порог, остаётся лучшая (accepted = false).

    Args:
        build: Построитель модели по номеру попытки.
        dataset: Обучающая выборка; ядро строится на фиксированном пакете из неё.
        config: Порог, лимит попыток, размер пакета, пространство ядра.
        seed: Зерно выбора пакета.
    """
    cache = cache if cache is not None else network.InputCoreCache()
    size = min(config.batch_size, len(dataset))
    rows = np.sort(np.random.default_rng([seed, len(dataset)]).choice(len(dataset), size=size, replace=False))
    batch = dataset.inputs[rows]

    best: tuple[float, Model] | None = None
    history: list[float] = []
    for attempt in range(config.max_attempts):
        candidate = build(attempt)
        lam = tangent_kernel_min_eig(candidate, batch, config.kernel_space, cache)
        history.append(lam)
        logger.debug("Попытка инициализации %d: λ_min = %.6g", attempt + 1, lam)
        if best is None or lam > best[0]:
            best = (lam, candidate)
        if lam >= config.mu_target:
            break
    assert best is not None
    lam, model = best
    accepted = lam >= config.mu_target
    initial_loss = network.evaluate(model, dataset.inputs, dataset.targets, cache=cache).mae
    report = PLInitReport(
        attempts=len(history),
        lambda_min=lam,
        mu_target=config.mu_target,
        accepted=accepted,
        ball_radius=ball_radius(initial_loss, config.mu_target),
        initial_loss=initial_loss,
        kernel_space=config.kernel_space.value,
    )
    log = logger.info if accepted else logger.warning
    log(
        "Отбор инициализации: λ_min = %.6g, порог %.3g, попыток %d, принято: %s",
        lam,
        config.mu_target,
        len(history),
        accepted,
    )
    return ScreeningResult(model=model, report=report, attempts_log=history)


# ── Огибающая сходимости ─────────────────────────────────


def convergence_envelope(
    losses: Sequence[float],
    mu_min: float,
    slack: float = 1.2,
    pl_ratios: Sequence[float | None] | None = None,
) -> EnvelopeVerdict:
    """Проверить L_t ≤ slack·exp(−μ̂_min·t)·L_0 и L_{t+1} ≤ slack·(1 − μ̂_t)·L_t.

    Пошаговая проверка выполняется, если заданы μ̂_0..μ̂_{T−1}; μ̂_t
    ограничивается сверху единицей, чтобы множитель оставался неотрицательным.

    Args:
        losses: L_0, L_1, …, L_T (не менее двух значений).
        mu_min: μ̂_min ∈ (0, 1].
        slack: Допуск огибающей.
        pl_ratios: μ̂_t для t = 0..T−1 (None — шаг не проверяется).

    Raises:
        DomainError: μ̂_min вне (0, 1] или пустая история.
    """
    if len(losses) < 2:
        raise DomainError("История потерь должна содержать хотя бы одну эпоху")
    if not 0.0 < mu_min <= 1.0:
        raise DomainError(f"μ̂_min = {mu_min} вне (0, 1]")
    initial = losses[0]
    checks = []
    for t in range(1, len(losses)):
        aggregate_limit = slack * math.exp(-mu_min * t) * initial
        step_limit = None
        mu_t = pl_ratios[t - 1] if pl_ratios is not None and t - 1 < len(pl_ratios) else None
        if mu_t is not None:
            step_limit = slack * step_contraction(1.0, min(mu_t, 1.0)) * losses[t - 1]
        checks.append(
            EnvelopeCheck(
                epoch=t,
                loss=losses[t],
                aggregate_limit=aggregate_limit,
                aggregate_ok=losses[t] <= aggregate_limit,
                step_limit=step_limit,
                step_ok=step_limit is None or losses[t] <= step_limit,
            ),
        )
    return EnvelopeVerdict(mu_min=mu_min, slack=slack, checks=checks)


def envelope_for_state(state: TrainState, slack: float = 1.2, mu_min: float | None = None) -> EnvelopeVerdict:
    """Огибающая для истории обучения; по умолчанию μ̂_min — наименьшее измеренное μ̂_t.

    Raises:
        DomainError: Нет ни одного положительного μ̂_t.
    """
    ratios: list[float | None] = []
    if state.initial_loss > 0.0:
        ratios.append(pl_ratio(state.initial_loss, state.initial_grad_norm))
    else:
        ratios.append(None)
    ratios += [r.pl_ratio for r in state.history]
    if mu_min is None:
        measured = [r for r in ratios[:-1] if r is not None and r > 0.0]
        if not measured:
            raise DomainError("Нет положительных отношений PL для построения огибающей")
        mu_min = min(min(measured), 1.0)
    return convergence_envelope(state.losses, mu_min, slack, ratios[:-1])
