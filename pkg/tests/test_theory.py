"""Unit-тесты теоретических оценок: мощность, Радемахер, подгонка констант, отчёт."""

import math

import numpy as np
import pytest

from qregress.exceptions import DomainError, FitError, MissingFitError
from qregress.models import StateVector
from qregress.schemas.experiment import NoiseSpec
from qregress.schemas.report import BoundInputs
from qregress.services import data, qsim, theory


# ── Фикстуры ────────────────────────────────────────────


def _inputs(**overrides) -> BoundInputs:
    """Рабочий пример: U = 8, M = ∞, c₁ = 1, P = 2, N = 100, Λ = (1, 1, 1), Λ′ = 1, ν = 0."""
    values = {
        "power": 2.0,
        "samples": 100,
        "channel_norms": [1.0, 1.0, 1.0],
        "unitary_norm": 1.0,
        "qubits": 8,
        "shots": None,
        "c1": 1.0,
        "c2": None,
        "nu": 0.0,
    }
    values.update(overrides)
    return BoundInputs(**values)


def _signs(seed: int, draw: int, samples: int) -> np.ndarray:
    rng = np.random.default_rng([seed, draw])
    return rng.choice(np.array([-1.0, 1.0]), size=samples)


# ── Мощность выборки ────────────────────────────────────


def test_power_of_unit_vector():
    """Один единичный вектор → P = 1."""
    assert theory.dataset_power(np.array([[0.0, 1.0, 0.0]])) == 1.0


def test_power_pythagorean():
    """{(3, 4), (0, 1)} → 5."""
    assert theory.dataset_power(np.array([[3.0, 4.0], [0.0, 1.0]])) == 5.0


def test_power_matches_brute_force(rng):
    """Совпадение с перебором норм."""
    x = rng.normal(size=(30, 7))
    assert theory.dataset_power(x) == pytest.approx(max(math.sqrt(sum(v * v for v in row)) for row in x))


def test_power_of_empty_set():
    """Пустая выборка — DomainError."""
    with pytest.raises(DomainError):
        theory.dataset_power(np.zeros((0, 3)))


def test_noise_increases_power(rng):
    """Более низкий SNR даёт большую мощность P в среднем по зёрнам."""
    clean = rng.uniform(size=(10, 784))
    means = {}
    for snr in (8.0, 12.0):
        powers = [
            theory.dataset_power(data.add_noise(clean, NoiseSpec.parse(f"gaussian@{snr}", seed=s)))
            for s in range(100)
        ]
        means[snr] = float(np.mean(powers))
    assert means[8.0] > means[12.0] > theory.dataset_power(clean)


# ── Оценка Радемахера ───────────────────────────────────


def test_rademacher_bound_zero_power():
    """P = 0 → 0."""
    assert theory.rademacher_bound(0.0, [1.0, 2.0], 3.0, 10) == 0.0


def test_rademacher_bound_example():
    """P = 2, N = 100, Λ = (1, 1, 1), Λ′ = 1 → 0.4·(√3 + 1)."""
    value = theory.rademacher_bound(2.0, [1.0, 1.0, 1.0], 1.0, 100)
    assert value == pytest.approx(0.4 * (math.sqrt(3) + 1))
    assert value == pytest.approx(1.09282, abs=1e-5)


def test_rademacher_bound_sample_scaling():
    """N → 4N уменьшает оценку вдвое."""
    base = theory.rademacher_bound(1.5, [0.3, 0.7], 2.0, 25)
    assert theory.rademacher_bound(1.5, [0.3, 0.7], 2.0, 100) == pytest.approx(base / 2)


def test_rademacher_bound_monotonic(rng):
    """Не убывает по P и Λ, не возрастает по N."""
    for _ in range(100):
        p, lam, lam_prime = rng.uniform(0, 3), list(rng.uniform(0, 2, size=3)), rng.uniform(0, 4)
        n = int(rng.integers(1, 500))
        base = theory.rademacher_bound(p, lam, lam_prime, n)
        assert theory.rademacher_bound(p + 0.1, lam, lam_prime, n) >= base
        assert theory.rademacher_bound(p, [lam[0] + 0.1, *lam[1:]], lam_prime, n) >= base
        assert theory.rademacher_bound(p, lam, lam_prime + 0.1, n) >= base
        assert theory.rademacher_bound(p, lam, lam_prime, n + 1) <= base


def test_rademacher_bound_rejects_zero_samples():
    """N = 0 — DomainError."""
    with pytest.raises(DomainError):
        theory.rademacher_bound(1.0, [1.0], 1.0, 0)


def test_channel_bound_is_tighter(rng):
    """Поканальная форма не превосходит основной оценки."""
    x = rng.normal(size=(40, 12))
    norms = [0.5, 1.5, 2.0]
    channel = theory.channel_rademacher_bound(x, norms, 1.0)
    assert channel <= theory.rademacher_bound(theory.dataset_power(x), norms, 1.0, 40) + 1e-12


def test_block_slices_cover_input():
    """Смежные блоки покрывают вход без пропусков."""
    slices = theory.block_slices(784, 3)
    assert slices[0].start == 0
    assert slices[-1].stop == 784
    assert all(a.stop == b.start for a, b in zip(slices, slices[1:]))
    with pytest.raises(DomainError):
        theory.block_slices(2, 3)


def test_degenerate_family_has_zero_complexity(rng):
    """Семейство {f ≡ 0} (нулевые бюджеты) → оценка 0."""
    family = theory.LinearChannelFamily((0.0, 0.0), 0.0)
    assert theory.empirical_rademacher(family, rng.normal(size=(20, 4)), draws=5) == 0.0


def test_linear_family_matches_closed_form(rng):
    """Линейное семейство ‖w‖ ≤ Λ: подъём совпадает с Λ·‖Σ ε_n x_n‖/N в пределах 2 %."""
    x = rng.normal(size=(100, 2))
    family = theory.LinearChannelFamily((1.5,), 0.0)
    estimate = theory.empirical_rademacher(family, x, draws=20, seed=4)
    closed = np.mean([theory.linear_rademacher_closed_form(1.5, x, _signs(4, d, 100)) for d in range(20)])
    assert estimate == pytest.approx(closed, rel=0.02)
    assert estimate <= closed + 1e-12


def test_estimate_within_bound(rng):
    """Оценка Монте-Карло не превосходит rademacher_bound на 100 случайных конфигурациях."""
    for trial in range(100):
        n = int(rng.integers(10, 60))
        x = rng.normal(size=(n, 6)) * rng.uniform(0.1, 2.0)
        norms = tuple(rng.uniform(0.0, 2.0, size=int(rng.integers(1, 4))))
        family = theory.LinearChannelFamily(norms, float(rng.uniform(0.0, 2.0)))
        estimate = theory.empirical_rademacher(family, x, draws=10, steps=50, seed=trial)
        bound = theory.rademacher_bound(theory.dataset_power(x), norms, family.unitary_norm, n)
        assert estimate <= bound


def test_family_rejects_negative_budget():
    """Отрицательный бюджет нормы — DomainError."""
    with pytest.raises(DomainError):
        theory.LinearChannelFamily((-1.0,), 0.0)


# ── Аппроксимация и подгонка ────────────────────────────


def test_universal_factor():
    """∏ 1/√U_k = 1/√U."""
    assert theory.universal_approx_factor((2, 2, 2)) == pytest.approx(1 / math.sqrt(8))


def test_approximation_bound():
    """c₁/√U + c₂/√M; при M = ∞ второй член отсутствует."""
    assert theory.approximation_bound(4, None, 2.0, None) == pytest.approx(1.0)
    assert theory.approximation_bound(4, 100, 2.0, 5.0) == pytest.approx(1.5)
    with pytest.raises(MissingFitError):
        theory.approximation_bound(4, 100, 2.0, None)


def test_scaling_fit_recovers_constants():
    """Данные 3/√U + 5/√M → (3, 5)."""
    points = [(u, m, 3 / math.sqrt(u) + 5 / math.sqrt(m)) for u in (2, 4, 8, 12) for m in (100, 400, 1600)]
    fit = theory.scaling_fit(points)
    assert fit.c1 == pytest.approx(3.0, abs=1e-6)
    assert fit.c2 == pytest.approx(5.0, abs=1e-6)
    assert fit.residual < 1e-9


def test_scaling_fit_without_shot_dependence():
    """Ошибка не зависит от M → c₂ ≈ 0."""
    points = [(u, m, 2 / math.sqrt(u)) for u in (2, 4, 8) for m in (100, 400)]
    fit = theory.scaling_fit(points)
    assert fit.c2 == pytest.approx(0.0, abs=1e-9)
    assert fit.c1 == pytest.approx(2.0)


def test_scaling_fit_reports_shot_slopes():
    """Наклон log-ошибки по log M для чистой зависимости 1/√M равен −0.5."""
    points = [(u, m, 5 / math.sqrt(m)) for u in (4, 8) for m in (100, 400, 1600)]
    fit = theory.scaling_fit(points)
    assert fit.shot_slopes == {4: pytest.approx(-0.5), 8: pytest.approx(-0.5)}


def test_scaling_fit_exact_points_have_no_slope():
    """M = ∞ (None) учитывается в плане как нулевой столбец и не входит в наклоны."""
    points = [(2, None, 1.0), (8, None, 0.5), (2, 100, 1.5)]
    fit = theory.scaling_fit(points)
    assert fit.shot_slopes == {}
    assert fit.c1 == pytest.approx(math.sqrt(2))


def test_scaling_fit_errors():
    """Меньше трёх различных точек или вырожденный план — FitError."""
    with pytest.raises(FitError):
        theory.scaling_fit([(2, 100, 1.0), (2, 100, 1.1), (4, 100, 0.8)])
    with pytest.raises(FitError):
        theory.scaling_fit([(u, u, 1.0 / u) for u in (2, 4, 8)])
    with pytest.raises(FitError):
        theory.scaling_fit([(u, None, 1.0 / u) for u in (2, 4, 8)])


def test_fit_shot_constant():
    """RMSE = 2/√M → c₂ = 2 без невязки."""
    shots = [100, 400, 1600]
    c2, residual = theory.fit_shot_constant(shots, [2 / math.sqrt(m) for m in shots])
    assert c2 == pytest.approx(2.0)
    assert residual == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(FitError):
        theory.fit_shot_constant([None], [0.0])


# ── Развёртка по числу измерений ────────────────────────


def _random_states(count: int, num_qubits: int, seed: int) -> list[StateVector]:
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(count):
        amplitudes = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
        states.append(StateVector(num_qubits, amplitudes / np.linalg.norm(amplitudes)))
    return states


def test_sweep_exact_sentinel_is_zero():
    """M = ∞ (None) → ошибка 0."""
    assert theory.shot_error_sweep(_random_states(1, 2, 0), [None], trials=3) == [(None, 0.0)]


def test_sweep_basis_state_has_no_error():
    """Базисное состояние детерминировано: ошибка 0 при любом M."""
    result = theory.shot_error_sweep(StateVector.basis(3, 5), [1, 10, 100], trials=5)
    assert [rmse for _, rmse in result] == [0.0, 0.0, 0.0]


def test_sweep_is_deterministic():
    """Одинаковое зерно → одинаковые RMSE."""
    states = _random_states(2, 3, 1)
    assert theory.shot_error_sweep(states, [50, 200], trials=10, seed=7) == theory.shot_error_sweep(
        states, [50, 200], trials=10, seed=7,
    )


def test_sweep_quadrupled_shots_halve_error():
    """Учетверение M уменьшает RMSE вдвое в пределах 15 %."""
    result = dict(theory.shot_error_sweep(_random_states(4, 4, 2), [400, 1600], trials=200, seed=1))
    assert result[1600] / result[400] == pytest.approx(0.5, rel=0.15)


def test_sweep_rejects_empty_list():
    """Пустой список M — DomainError."""
    with pytest.raises(DomainError):
        theory.shot_error_sweep(StateVector.zero(1), [])


@pytest.mark.slow
def test_shot_scaling_exponent():
    """Наклон log RMSE по log M лежит в [−0.55, −0.45]."""
    states = _random_states(4, 4, 3)
    shots = [100, 400, 1600, 6400]
    points = []
    for u, psi_list in ((4, states[:2]), (2, [qsim.tpe_encode(np.array([0.3, 0.6]))])):
        points += [(u, m, rmse) for m, rmse in theory.shot_error_sweep(psi_list, shots, trials=200, seed=u)]
    fit = theory.scaling_fit(points)
    for slope in fit.shot_slopes.values():
        assert -0.55 <= slope <= -0.45


# ── Итоговый отчёт ──────────────────────────────────────


def test_aggregate_worked_instance():
    """1/√8 + 0.4·(√3 + 1) ≈ 1.44637."""
    report = theory.aggregate_bound(_inputs())
    assert report.aggregate == pytest.approx(1.44637, abs=1e-5)
    assert report.approx_bound == pytest.approx(1 / math.sqrt(8))
    assert report.training_error == 0.0


def test_aggregate_is_exact_sum():
    """aggregate в точности равен сумме трёх слагаемых."""
    report = theory.aggregate_bound(_inputs(shots=400, c2=0.7, nu=0.013))
    assert report.aggregate == report.approx_bound + report.estimation_bound + report.training_error


def test_aggregate_requires_fit_constants():
    """Нет c₁ или c₂ при конечном M — MissingFitError."""
    with pytest.raises(MissingFitError) as excinfo:
        theory.aggregate_bound(_inputs(c1=None, shots=100))
    assert excinfo.value.missing == ["c1", "c2"]


def test_aggregate_carries_empirical_summary():
    """Эмпирические заместители и заметки попадают в отчёт."""
    summary = theory.empirical_summary(0.05, 0.08, rademacher_estimate=0.2)
    report = theory.aggregate_bound(_inputs(), empirical=summary, channel_bound=0.9, notes=["c1 по умолчанию"])
    assert report.empirical.generalization_gap == pytest.approx(0.03)
    assert report.channel_bound == 0.9
    assert report.notes == ["c1 по умолчанию"]
    assert theory.empirical_summary(0.05, None).generalization_gap is None
