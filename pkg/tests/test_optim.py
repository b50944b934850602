"""Unit-тесты обучения, условия PL, касательного ядра и огибающей сходимости."""

import math
from unittest.mock import patch

import numpy as np
import pytest

from qregress.exceptions import DomainError, NumericalError, ShapeError, TrainingAbortedError
from qregress.models import RegressionDataset
from qregress.schemas.experiment import KernelSpace, OptimizerConfig, OptimizerKind, ScreeningConfig
from qregress.services import data, network, optim


# ── Фикстуры ────────────────────────────────────────────


def _gd(lr: float = 1.0, epochs: int = 1, batch_size: int = 50, seed: int = 0) -> OptimizerConfig:
    return OptimizerConfig(kind="gd", learning_rate=lr, epochs=epochs, batch_size=batch_size, seed=seed)


def _synthetic(num_samples: int = 40, seed: int = 0) -> RegressionDataset:
    dataset, _ = data.synthetic_dataset((4, 4), (1, 2, 1), (2, 2), num_samples, output_dim=3, seed=seed)
    return dataset


def _student(seed: int = 1, attempt: int = 0):
    return network.build_ttn_vqc((4, 4), (1, 2, 1), (2, 2), num_blocks=2, output_dim=3, seed=seed, attempt=attempt)


class _NaNAfterFirstCall:
    """Целевая функция, которая портится после вычисления начальной потери."""

    num_samples = 2

    def __init__(self) -> None:
        self.calls = 0

    def loss_and_grad(self, params, indices=None):
        self.calls += 1
        if self.calls == 1:
            return 1.0, np.ones_like(params)
        return math.nan, np.ones_like(params)


# ── Настройки и шаг оптимизатора ────────────────────────


def test_default_learning_rates():
    """По умолчанию η = 1 для gd и 0.01 для Adam."""
    assert OptimizerConfig(kind="gd").lr == 1.0
    assert OptimizerConfig().lr == 0.01
    assert OptimizerConfig(kind="adam", learning_rate=0.3).lr == 0.3


def test_unit_lr_adam_flag():
    """Флаг unit_lr_adam включает Adam с η = 1."""
    config = OptimizerConfig(kind="gd", learning_rate=0.1, unit_lr_adam=True)
    assert config.kind is OptimizerKind.ADAM
    assert config.lr == 1.0


def test_optimizer_config_rejects_bad_betas():
    """β вне (0, 1) отклоняется валидацией."""
    with pytest.raises(ValueError):
        OptimizerConfig(beta1=1.0)


def test_zero_gradient_keeps_params():
    """Нулевой градиент не меняет θ ни в gd, ни в Adam."""
    theta = np.array([1.0, -2.0])
    assert np.array_equal(optim.optimizer_step(theta, np.zeros(2), None, _gd()), theta)
    adam = OptimizerConfig(kind="adam", learning_rate=0.1)
    assert np.array_equal(optim.optimizer_step(theta, np.zeros(2), optim.AdamState.zeros(2), adam), theta)


def test_gd_step_arithmetic():
    """θ = (1, 2), g = (0.5, 0.5), η = 1 → (0.5, 1.5)."""
    out = optim.optimizer_step(np.array([1.0, 2.0]), np.array([0.5, 0.5]), None, _gd())
    np.testing.assert_allclose(out, [0.5, 1.5])


def test_adam_first_step():
    """Первый шаг Adam с поправкой смещения: Δθ = −η·g/(|g| + ε)."""
    opt = OptimizerConfig(kind="adam", learning_rate=0.05)
    grad = np.array([0.3, -2.0, 1e-3])
    state = optim.AdamState.zeros(3)
    out = optim.optimizer_step(np.zeros(3), grad, state, opt)
    np.testing.assert_allclose(out, -0.05 * grad / (np.abs(grad) + opt.eps), rtol=1e-10)
    assert state.t == 1


def test_adam_requires_state():
    """Adam без состояния моментов — DomainError."""
    with pytest.raises(DomainError):
        optim.optimizer_step(np.zeros(2), np.ones(2), None, OptimizerConfig(kind="adam"))


def test_step_rejects_shape_mismatch():
    """Формы θ и градиента различаются — ShapeError."""
    with pytest.raises(ShapeError):
        optim.optimizer_step(np.zeros(2), np.ones(3), None, _gd())


# ── Условие PL ──────────────────────────────────────────


def test_pl_ratio_of_quadratic_is_one():
    """L = ½θ²: μ̂ = 1 в любой точке θ ≠ 0."""
    for theta in (3.0, -0.2, 1e-3):
        assert optim.pl_ratio(0.5 * theta**2, abs(theta)) == pytest.approx(1.0)


def test_pl_ratio_of_quartic_vanishes_near_zero():
    """L = ¼θ⁴ в θ = 0.1: μ̂ = 2θ² = 0.02."""
    theta = 0.1
    assert optim.pl_ratio(theta**4 / 4, abs(theta**3)) == pytest.approx(0.02)


def test_pl_ratio_undefined_at_zero_loss():
    """L = 0 — DomainError."""
    with pytest.raises(DomainError):
        optim.pl_ratio(0.0, 1.0)


def test_step_contraction_and_ball():
    """При η = 1 множитель равен 1 − μ; радиус r = 2√(2L₀)/μ."""
    assert optim.step_contraction(1.0, 0.3) == pytest.approx(0.7)
    assert optim.step_contraction(0.5, 0.4) == pytest.approx(1 - 0.4 + 0.1)
    assert optim.ball_radius(2.0, 0.5) == pytest.approx(8.0)
    distance, radius, inside = optim.ball_check(np.zeros(2), np.array([3.0, 4.0]), 2.0, 0.5)
    assert (distance, radius, inside) == (5.0, pytest.approx(8.0), True)
    with pytest.raises(DomainError):
        optim.ball_radius(1.0, 0.0)


# ── Цикл обучения ───────────────────────────────────────


def test_quadratic_gd_converges_in_one_step():
    """½‖θ‖², gd, η = 1, полный пакет: θ = 0 после одного шага."""
    state = optim.run_training(optim.QuadraticObjective(), np.array([1.5, -2.0, 0.5]), _gd(epochs=1))
    np.testing.assert_array_equal(state.params, np.zeros(3))
    assert state.initial_loss == pytest.approx(0.5 * (1.5**2 + 4 + 0.25))
    assert state.history[0].train_mae == 0.0
    assert state.history[0].pl_ratio is None


@pytest.mark.parametrize("seed", range(5))
def test_quadratic_satisfies_envelope_without_slack(seed):
    """На квадратичной задаче gd с η = 1 укладывается в огибающую при slack = 1."""
    rng = np.random.default_rng(seed)
    state = optim.run_training(optim.QuadraticObjective(), rng.normal(size=4), _gd(epochs=3))
    verdict = optim.envelope_for_state(state, slack=1.0)
    assert verdict.mu_min == pytest.approx(1.0)
    assert verdict.passed


def test_zero_learning_rate_keeps_model(small_model):
    """η = 0: параметры не меняются за несколько эпох."""
    dataset = _synthetic(20)
    state = optim.train(small_model, dataset, _gd(lr=0.0, epochs=3, batch_size=7))
    np.testing.assert_array_equal(state.params, network.flatten_params(small_model))
    assert state.epoch == 3
    assert len(state.history) == 3


def test_teacher_initialization_has_zero_loss():
    """Ученик с весами учителя имеет MAE 0 в начальной точке."""
    dataset, teacher = data.synthetic_dataset((4, 4), (1, 2, 1), (2, 2), 30, output_dim=3, seed=4)
    state = optim.train(teacher, dataset, _gd(epochs=1))
    assert state.initial_loss == 0.0


def test_history_records_are_consistent(small_model):
    """μ̂_t·L_t = ‖∇L_t‖²/2 для каждой записанной эпохи; тестовая MAE заполнена."""
    dataset = _synthetic(30)
    test = _synthetic(10, seed=1)
    state = optim.train(small_model, dataset, OptimizerConfig(kind="adam", epochs=3, batch_size=10), test=test)
    assert [r.epoch for r in state.history] == [1, 2, 3]
    for record in state.history:
        assert record.test_mae is not None
        assert record.pl_ratio * record.train_mae == pytest.approx(record.grad_norm**2 / 2, rel=1e-12)
    assert state.final_train_mae == state.history[-1].train_mae
    assert state.losses[0] == state.initial_loss


def test_gd_training_is_deterministic(small_model):
    """Одинаковые модель, данные и настройки дают одинаковую историю."""
    dataset = _synthetic(25)
    opt = _gd(lr=0.5, epochs=2, batch_size=8, seed=3)
    first = optim.train(small_model, dataset, opt)
    second = optim.train(small_model, dataset, opt)
    np.testing.assert_array_equal(first.params, second.params)
    strip = [r.model_dump(exclude={"seconds"}) for r in first.history]
    assert strip == [r.model_dump(exclude={"seconds"}) for r in second.history]


def test_monitors_see_every_epoch(small_model):
    """Монитор вызывается после каждой эпохи со снимком состояния."""
    seen = []
    optim.train(
        small_model,
        _synthetic(12),
        _gd(lr=0.1, epochs=2),
        monitors=[lambda record, state: seen.append((record.epoch, state.epoch))],
    )
    assert seen == [(1, 1), (2, 2)]


def test_training_aborts_on_nan_loss():
    """Нечисловая потеря останавливает обучение с диагностическим состоянием."""
    with pytest.raises(TrainingAbortedError) as excinfo:
        optim.run_training(_NaNAfterFirstCall(), np.zeros(2), _gd(epochs=3))
    assert excinfo.value.epoch == 1
    assert excinfo.value.state.initial_loss == 1.0
    assert excinfo.value.state.history == []


def test_train_rejects_empty_dataset(small_model):
    """Пустая обучающая выборка — DomainError."""
    empty = RegressionDataset(np.zeros((0, 16)), np.zeros((0, 3)))
    with pytest.raises(DomainError):
        optim.train(small_model, empty, _gd())


def test_objective_rejects_mismatched_dataset(small_model):
    """Размерности модели и данных различаются — ShapeError."""
    dataset = RegressionDataset(np.zeros((2, 9)), np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        optim.ModelObjective(small_model, dataset)


def test_chunked_objective_matches_single_pass(small_model):
    """Взвешенная сумма по частям совпадает с градиентом по всей выборке."""
    dataset = _synthetic(300)
    objective = optim.ModelObjective(small_model, dataset)
    loss, grad = objective.loss_and_grad(network.flatten_params(small_model))
    direct = network.model_gradients(small_model, dataset.inputs, dataset.targets)
    assert loss == pytest.approx(direct.loss, rel=1e-12)
    np.testing.assert_allclose(grad, direct.flatten(), rtol=1e-10, atol=1e-14)


# ── Касательное ядро и отбор инициализации ──────────────


def test_kernel_of_identity_jacobian():
    """J = I → λ_min = 1."""
    assert optim.kernel_min_eig(np.eye(4)) == pytest.approx(1.0)


def test_kernel_of_diagonal_jacobian():
    """J = diag(1, 2) → K = diag(1, 4), λ_min = 1."""
    assert optim.kernel_min_eig(np.diag([1.0, 2.0])) == pytest.approx(1.0)


def test_kernel_rank_deficient(rng):
    """Выходов больше, чем параметров: λ_min = 0."""
    assert optim.kernel_min_eig(rng.normal(size=(6, 2))) == pytest.approx(0.0, abs=1e-8)


def test_kernel_size_limit(small_model, rng):
    """Ядро больше 512 строк не строится."""
    with pytest.raises(DomainError):
        optim.kernel_min_eig(np.zeros((513, 2)))
    with pytest.raises(DomainError):
        optim.tangent_kernel_min_eig(small_model, rng.uniform(size=(200, 16)))


def test_kernel_solver_failure_is_numerical_error():
    """Сбой LAPACK — NumericalError без числа итераций, с размером ядра в сообщении."""
    with patch("numpy.linalg.eigvalsh", side_effect=np.linalg.LinAlgError("no convergence")):
        with pytest.raises(NumericalError) as excinfo:
            optim.kernel_min_eig(np.eye(3))
    assert excinfo.value.method == "eigvalsh"
    assert excinfo.value.iterations is None
    assert "3×3" in str(excinfo.value)


def test_tangent_kernel_matches_jacobian(small_model, small_inputs):
    """λ_min совпадает с собственными числами J·Jᵀ якобиана модели."""
    jac = network.model_jacobian(small_model, small_inputs, "measurement")
    expected = np.linalg.eigvalsh(jac @ jac.T)[0]
    value = optim.tangent_kernel_min_eig(small_model, small_inputs, KernelSpace.MEASUREMENT)
    assert value == pytest.approx(expected)


def test_screening_keeps_best_when_threshold_unreachable():
    """Недостижимый порог: все попытки исчерпаны, остаётся лучшая, accepted = false."""
    dataset = _synthetic(20)
    config = ScreeningConfig(enabled=True, mu_target=1e6, max_attempts=3, batch_size=4)
    result = optim.screen_initialization(lambda attempt: _student(attempt=attempt), dataset, config, seed=2)
    assert result.report.attempts == 3
    assert not result.report.accepted
    assert result.report.lambda_min == max(result.attempts_log)
    best = int(np.argmax(result.attempts_log))
    np.testing.assert_array_equal(result.model.vqc.angles, _student(attempt=best).vqc.angles)


def test_screening_accepts_and_is_sound():
    """Принятая инициализация действительно проходит порог на том же пакете."""
    dataset = _synthetic(20)
    config = ScreeningConfig(enabled=True, mu_target=1e-12, max_attempts=5, batch_size=4)
    result = optim.screen_initialization(lambda attempt: _student(attempt=attempt), dataset, config, seed=2)
    assert result.report.accepted
    assert result.report.attempts == 1
    rows = np.sort(np.random.default_rng([2, 20]).choice(20, size=4, replace=False))
    recomputed = optim.tangent_kernel_min_eig(result.model, dataset.inputs[rows], config.kernel_space)
    assert recomputed >= config.mu_target
    assert result.report.ball_radius == pytest.approx(
        2 * math.sqrt(2 * result.report.initial_loss) / config.mu_target,
    )


# ── Огибающая сходимости ────────────────────────────────


def test_envelope_quadratic_pass():
    """L₁ = 0 ≤ e^{−1}·L₀ — огибающая выполнена."""
    verdict = optim.convergence_envelope([2.0, 0.0], mu_min=1.0)
    assert verdict.passed
    assert verdict.first_failure is None


def test_envelope_constant_history_fails_at_first_epoch():
    """Постоянная потеря при μ̂_min = 0.1 нарушает огибающую на t = 1."""
    verdict = optim.convergence_envelope([1.0, 1.0, 1.0], mu_min=0.1, slack=1.0)
    assert not verdict.passed
    assert verdict.first_failure == 1
    assert verdict.checks[0].aggregate_limit == pytest.approx(math.exp(-0.1))


def test_envelope_aggregate_limit_is_exponential():
    """Предел эпохи t равен slack·e^{−μ̂_min·t}·L₀, а не slack·(1 − μ̂_min)^t·L₀."""
    verdict = optim.convergence_envelope([2.0, 2.0, 2.0, 2.0], mu_min=0.5, slack=1.5)
    limits = [check.aggregate_limit for check in verdict.checks]
    assert limits == pytest.approx([1.5 * math.exp(-0.5 * t) * 2.0 for t in (1, 2, 3)])
    assert limits[2] != pytest.approx(1.5 * 0.5**3 * 2.0)


def test_envelope_step_check():
    """Пошаговая проверка L₁ ≤ slack·(1 − μ̂₀)·L₀ срабатывает отдельно от агрегированной."""
    verdict = optim.convergence_envelope([1.0, 0.6], mu_min=0.3, slack=1.0, pl_ratios=[0.5])
    check = verdict.checks[0]
    assert check.aggregate_ok
    assert check.step_limit == pytest.approx(0.5)
    assert not check.step_ok
    assert verdict.first_failure == 1


def test_envelope_clamps_large_ratios():
    """μ̂_t > 1 ограничивается единицей: предел шага не отрицателен."""
    verdict = optim.convergence_envelope([1.0, 0.0], mu_min=1.0, pl_ratios=[3.0])
    assert verdict.checks[0].step_limit == 0.0
    assert verdict.passed


def test_envelope_domain_errors():
    """μ̂_min вне (0, 1] или история без эпох — DomainError."""
    with pytest.raises(DomainError):
        optim.convergence_envelope([1.0, 0.5], mu_min=0.0)
    with pytest.raises(DomainError):
        optim.convergence_envelope([1.0, 0.5], mu_min=1.5)
    with pytest.raises(DomainError):
        optim.convergence_envelope([1.0], mu_min=0.5)


# ── Статистические проверки ─────────────────────────────


@pytest.mark.slow
def test_synthetic_training_reduces_loss_for_most_seeds():
    """Полнопакетный Adam снижает MAE синтетической задачи хотя бы для 18 из 20 зерён."""
    improved = 0
    for seed in range(20):
        dataset = _synthetic(60, seed=seed)
        opt = OptimizerConfig(kind="adam", learning_rate=0.01, epochs=20, batch_size=60, seed=seed)
        state = optim.train(_student(seed=seed + 100), dataset, opt)
        improved += state.final_train_mae < state.initial_loss
    assert improved >= 18
