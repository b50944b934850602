"""Теоретические оценки ошибки: мощность выборки, сложность Радемахера,
подгонка констант аппроксимации, развёртка по числу измерений и итоговый отчёт.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from qregress.exceptions import DomainError, FitError, MissingFitError
from qregress.models.circuit import StateVector
from qregress.schemas.report import BoundInputs, EmpiricalSummary, ScalingFit, TheoryReport
from qregress.services import qsim

logger = logging.getLogger(__name__)


# ── Мощность и оценка Радемахера ─────────────────────────


def dataset_power(inputs: np.ndarray) -> float:
    """P = max_n ‖x_n‖₂.

    Raises:
        DomainError: Пустая выборка.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[0] == 0:
        raise DomainError("Мощность пустой выборки не определена")
    return float(np.max(np.linalg.norm(inputs, axis=1)))


def _check_samples(samples: int) -> None:
    if samples < 1:
        raise DomainError(f"Число образцов должно быть ≥ 1, получено {samples}")


def rademacher_bound(power: float, channel_norms: Sequence[float], unitary_norm: float, samples: int) -> float:
    """(2P/√N)·√(Σ Λ_k²) + 2PΛ′/√N."""
    _check_samples(samples)
    root_n = math.sqrt(samples)
    channel = math.sqrt(sum(v * v for v in channel_norms))
    return 2.0 * power / root_n * channel + 2.0 * power * unitary_norm / root_n


def block_slices(input_dim: int, order: int) -> list[slice]:
    """Разбиение входа длины Q на K смежных блоков почти равной длины."""
    if order < 1 or order > input_dim:
        raise DomainError(f"Нельзя разбить вход длины {input_dim} на {order} блоков")
    bounds = np.linspace(0, input_dim, order + 1).round().astype(int)
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def channel_rademacher_bound(
    inputs: np.ndarray,
    channel_norms: Sequence[float],
    unitary_norm: float,
) -> float:
    """Поканальная форма (2/√N)·max_n Σ_k Λ_k‖x_n^(k)‖ + 2PΛ′/√N.

    По неравенству Коши–Буняковского не превосходит rademacher_bound.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    samples = inputs.shape[0]
    _check_samples(samples)
    slices = block_slices(inputs.shape[1], len(channel_norms))
    block_norms = np.stack([np.linalg.norm(inputs[:, s], axis=1) for s in slices], axis=1)
    per_sample = block_norms @ np.asarray(channel_norms, dtype=np.float64)
    root_n = math.sqrt(samples)
    return 2.0 * float(per_sample.max()) / root_n + 2.0 * dataset_power(inputs) * unitary_norm / root_n


@dataclass(frozen=True)
class LinearChannelFamily:
    """Семейство скалярных функций f(x) = Σ_k ⟨w_k, x^(k)⟩ + ⟨v, x⟩, ‖w_k‖ ≤ Λ_k, ‖v‖ ≤ Λ′.

    x^(k) — k-й смежный блок входа.
    """

    channel_norms: tuple[float, ...]
    unitary_norm: float = 0.0

    def __post_init__(self) -> None:
        if any(v < 0 for v in self.channel_norms) or self.unitary_norm < 0:
            raise DomainError("Бюджеты норм семейства должны быть неотрицательными")


def _project(w: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(w))
    if norm <= radius:
        return w
    return w * (radius / norm)


def _ascent_sup(
    correlations: list[np.ndarray],
    radii: list[float],
    steps: int,
    step_size: float,
    rng: np.random.Generator,
) -> float:
    """Проекционный градиентный подъём по sup_w Σ_j ⟨w_j, g_j⟩ при ‖w_j‖ ≤ r_j."""
    weights = [_project(rng.uniform(-1.0, 1.0, g.shape) * r, r) for g, r in zip(correlations, radii)]
    for _ in range(steps):
        weights = [_project(w + step_size * g, r) for w, g, r in zip(weights, correlations, radii)]
    return float(sum(w @ g for w, g in zip(weights, correlations)))


def empirical_rademacher(
    family: LinearChannelFamily,
    inputs: np.ndarray,
    draws: int = 20,
    steps: int = 200,
    step_size: float = 0.5,
    seed: int = 0,
) -> float:
    """Монте-Карло оценка эмпирической сложности Радемахера семейства.

    Для каждого вектора знаков ε супремум (1/N)·Σ ε_n f(x_n) приближается
    проекционным подъёмом; результат — среднее по draws. Подъём может не
    достичь супремума, поэтому значение является оценкой снизу.

    Args:
        family: Семейство с бюджетами норм.
        inputs: Матрица N × Q.
        draws: Число векторов знаков.
        steps: Шагов подъёма на вектор.
        step_size: Длина шага.
        seed: Зерно; вектор d-го знака берётся из потока (seed, d).
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    samples = inputs.shape[0]
    _check_samples(samples)
    slices = block_slices(inputs.shape[1], len(family.channel_norms))
    radii = [*family.channel_norms, family.unitary_norm]

    estimates = []
    for draw in range(draws):
        rng = np.random.default_rng([seed, draw])
        signs = rng.choice(np.array([-1.0, 1.0]), size=samples)
        total = signs @ inputs / samples
        correlations = [total[s] for s in slices] + [total]
        estimates.append(_ascent_sup(correlations, radii, steps, step_size, rng))
    estimate = float(np.mean(estimates))
    logger.debug("Оценка Радемахера: %.6g по %d знаковым векторам", estimate, draws)
    return estimate


def linear_rademacher_closed_form(norm: float, inputs: np.ndarray, signs: np.ndarray) -> float:
    """Супремум для {x ↦ ⟨w, x⟩ : ‖w‖ ≤ Λ} при фиксированных знаках: Λ·‖Σ ε_n x_n‖/N."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    return norm * float(np.linalg.norm(signs @ inputs)) / inputs.shape[0]


# ── Аппроксимация ────────────────────────────────────────


def universal_approx_factor(channel_out_dims: Sequence[int]) -> float:
    """∏_k 1/√U_k, то есть 1/√U."""
    return math.prod(1.0 / math.sqrt(u) for u in channel_out_dims)


def approximation_bound(qubits: int, shots: int | None, c1: float, c2: float | None) -> float:
    """c₁/√U + c₂/√M; при M = ∞ второй член равен нулю.

    Raises:
        MissingFitError: M конечно, а c₂ не задан.
    """
    value = c1 / math.sqrt(qubits)
    if shots is not None:
        if c2 is None:
            raise MissingFitError(["c2"])
        value += c2 / math.sqrt(shots)
    return value


def _design_column(values: Sequence[int | None]) -> np.ndarray:
    return np.array([0.0 if v is None else 1.0 / math.sqrt(v) for v in values])


def scaling_fit(points: Sequence[tuple[int, int | None, float]]) -> ScalingFit:
    """МНК-подгонка ошибка ≈ c₁/√U + c₂/√M по точкам (U, M, ошибка); M = None означает ∞.

    Дополнительно для каждого U с несколькими конечными M возвращается
    наклон log(ошибка) от log M.

    Raises:
        FitError: Меньше трёх различных точек или вырожденная матрица плана.
    """
    distinct = {(u, m) for u, m, _ in points}
    if len(distinct) < 3:
        raise FitError(f"Для подгонки нужно ≥ 3 различных (U, M), получено {len(distinct)}")
    design = np.column_stack(
        [_design_column([u for u, _, _ in points]), _design_column([m for _, m, _ in points])],
    )
    observed = np.array([e for _, _, e in points], dtype=np.float64)
    if np.linalg.matrix_rank(design) < 2:
        raise FitError("Матрица плана вырождена: нужны различные U и различные M")
    coef, *_ = np.linalg.lstsq(design, observed, rcond=None)
    residual = float(np.linalg.norm(design @ coef - observed))

    slopes: dict[int, float] = {}
    for u in sorted({u for u, _, _ in points}):
        rows = [(m, e) for uu, m, e in points if uu == u and m is not None and e > 0]
        if len({m for m, _ in rows}) >= 2:
            log_m = np.log([m for m, _ in rows])
            log_e = np.log([e for _, e in rows])
            slopes[u] = float(np.polyfit(log_m, log_e, 1)[0])
    logger.info("Подгонка констант: c₁ = %.6g, c₂ = %.6g, невязка %.3e", coef[0], coef[1], residual)
    return ScalingFit(c1=float(coef[0]), c2=float(coef[1]), residual=residual, shot_slopes=slopes)


def fit_shot_constant(shots: Sequence[int], rmse: Sequence[float]) -> tuple[float, float]:
    """Однопараметрическая подгонка ошибка ≈ c₂/√M при фиксированном U.

    Returns:
        (c₂, невязка).

    Raises:
        FitError: Нет ни одной конечной точки M.
    """
    column = _design_column(list(shots))
    observed = np.asarray(rmse, dtype=np.float64)
    if column.size == 0 or not np.any(column > 0):
        raise FitError("Для подгонки c₂ нужна хотя бы одна точка с конечным M")
    c2 = float(column @ observed / (column @ column))
    return c2, float(np.linalg.norm(c2 * column - observed))


def shot_error_sweep(
    states: StateVector | Sequence[StateVector],
    shots: Sequence[int | None],
    trials: int = 200,
    seed: int = 0,
) -> list[tuple[int | None, float]]:
    """RMSE оценки ⟨Z⟩ по M измерениям относительно точных ожиданий.

    Для каждого M: sqrt(среднее по испытаниям и состояниям ‖ẑ − z‖²/U).
    Испытание t состояния s для i-го M использует поток (seed, индекс),
    поэтому результат детерминирован.

    Raises:
        DomainError: Пустой список M.
    """
    if not shots:
        raise DomainError("Список значений M пуст")
    states = [states] if isinstance(states, StateVector) else list(states)
    exact = [qsim.measure_z_exact(psi) for psi in states]
    results: list[tuple[int | None, float]] = []
    for i, m in enumerate(shots):
        if m is None:
            results.append((None, 0.0))
            continue
        squared = []
        for s, (psi, z) in enumerate(zip(states, exact)):
            for t in range(trials):
                index = (i * len(states) + s) * trials + t
                estimate, _ = qsim.measure_z_shots(psi, m, seed, sample_index=index)
                squared.append(float(np.sum((estimate - z) ** 2)) / psi.num_qubits)
        rmse = math.sqrt(float(np.mean(squared)))
        logger.debug("M = %d: RMSE %.6g", m, rmse)
        results.append((m, rmse))
    return results


# ── Итоговый отчёт ───────────────────────────────────────


def aggregate_bound(
    inputs: BoundInputs,
    empirical: EmpiricalSummary | None = None,
    channel_bound: float | None = None,
    notes: Sequence[str] = (),
    channel_out_dims: Sequence[int] | None = None,
) -> TheoryReport:
    """Сумма оценки аппроксимации, оценки оценивания и ошибки обучения ν.

    При заданных channel_out_dims в отчёт добавляется множитель ∏_k 1/√U_k
    из оценки универсальной аппроксимации.

    Raises:
        MissingFitError: Нет c₁ (или c₂ при конечном M); сначала нужна scaling_fit.
    """
    missing = []
    if inputs.c1 is None:
        missing.append("c1")
    if inputs.shots is not None and inputs.c2 is None:
        missing.append("c2")
    if missing:
        raise MissingFitError(missing)

    approx = approximation_bound(inputs.qubits, inputs.shots, inputs.c1, inputs.c2)
    estimation = rademacher_bound(inputs.power, inputs.channel_norms, inputs.unitary_norm, inputs.samples)
    return TheoryReport(
        approx_bound=approx,
        estimation_bound=estimation,
        training_error=inputs.nu,
        aggregate=approx + estimation + inputs.nu,
        channel_bound=channel_bound,
        empirical=empirical,
        universal_factor=universal_approx_factor(channel_out_dims) if channel_out_dims else None,
        notes=list(notes),
    )


def empirical_summary(
    train_mae: float,
    test_mae: float | None,
    rademacher_estimate: float | None = None,
) -> EmpiricalSummary:
    """Наблюдаемые заместители: train/test MAE и разрыв обобщения."""
    return EmpiricalSummary(
        train_mae=train_mae,
        test_mae=test_mae,
        generalization_gap=None if test_mae is None else test_mae - train_mae,
        rademacher_estimate=rademacher_estimate,
    )
