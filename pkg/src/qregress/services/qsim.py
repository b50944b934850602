"""Симулятор вектора состояния для VQC.

TPE-кодирование и декодирование, блоки PQC, точное и выборочное
измерение Pauli-Z, градиенты по углам (сопряжённый проход и правило
сдвига параметра). Кубит 0 — старший бит базисного индекса.

Внутренние функции работают с пакетами состояний формы (B, 2^U);
публичные операции над StateVector — тонкие обёртки над ними.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from qregress.exceptions import BoundsError, DomainError, NotATPEStateError, ShapeError
from qregress.models.circuit import (
    MAX_QUBITS,
    ROTATION_AXES,
    BlockOrder,
    Gate,
    GateKind,
    ShotResult,
    StateVector,
    Topology,
    VQCParams,
)

logger = logging.getLogger(__name__)

TPE_TOLERANCE = 1e-6
DENSE_UNITARY_MAX_QUBITS = 12

_PAULI = {
    GateKind.RX: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    GateKind.RY: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    GateKind.RZ: np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
# d/dx (cos(πx/2), sin(πx/2)) = (π/2)·(−sin, cos)
_TPE_DERIVATIVE = 0.5 * np.pi * np.array([[0.0, -1.0], [1.0, 0.0]], dtype=np.complex128)


# ── Матрицы вентилей ─────────────────────────────────────


def rotation_matrix(kind: GateKind, theta: float) -> np.ndarray:
    """Матрица R_P(θ) = exp(−iθP/2) для P ∈ {X, Y, Z}."""
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    if kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind is GateKind.RZ:
        return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=np.complex128)
    raise DomainError(f"Вентиль {kind.value} не является поворотом")


def _apply_1q(states: np.ndarray, matrix: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    batch = states.shape[0]
    view = states.reshape(batch, 2**qubit, 2, 2 ** (num_qubits - qubit - 1))
    return np.einsum("ij,bajc->baic", matrix, view).reshape(batch, -1)


def _apply_cnot(states: np.ndarray, control: int, target: int, num_qubits: int) -> np.ndarray:
    batch = states.shape[0]
    view = states.reshape((batch,) + (2,) * num_qubits)
    out = view.copy()
    index: list[slice | int] = [slice(None)] * (num_qubits + 1)
    index[control + 1] = 1
    # после выборки управляющего кубита его ось исчезает
    target_axis = target + 1 if target < control else target
    out[tuple(index)] = np.flip(view[tuple(index)], axis=target_axis)
    return out.reshape(batch, -1)


def _check_gate(gate: Gate, num_qubits: int) -> None:
    for q in gate.qubits:
        if not 0 <= q < num_qubits:
            raise BoundsError("qubit", q, num_qubits)
    if gate.kind is GateKind.CNOT:
        if len(gate.qubits) != 2:
            raise ShapeError("CNOT требует пару (управляющий, целевой)")
        if gate.qubits[0] == gate.qubits[1]:
            raise DomainError("Управляющий и целевой кубиты CNOT совпадают")


def _apply(states: np.ndarray, gate: Gate, num_qubits: int, adjoint: bool = False) -> np.ndarray:
    if gate.kind is GateKind.CNOT:
        return _apply_cnot(states, gate.qubits[0], gate.qubits[1], num_qubits)
    theta = -gate.theta if adjoint else gate.theta
    return _apply_1q(states, rotation_matrix(gate.kind, theta), gate.qubits[0], num_qubits)


# ── Компиляция PQC ───────────────────────────────────────


def entangling_pairs(num_qubits: int, topology: Topology = Topology.CHAIN) -> list[tuple[int, int]]:
    """Пары CNOT одного блока: цепочка (i, i+1), для кольца ещё (U−1, 0) при U > 2."""
    pairs = [(i, i + 1) for i in range(num_qubits - 1)]
    if topology is Topology.RING and num_qubits > 2:
        pairs.append((num_qubits - 1, 0))
    return pairs


def pqc_gates(
    params: VQCParams,
    topology: Topology = Topology.CHAIN,
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST,
) -> list[Gate]:
    """Развернуть L блоков PQC в плоский список вентилей.

    Блок: слой CNOT, затем для каждого кубита RX(α) → RY(β) → RZ(γ)
    (или в обратном порядке слоёв при block_order = rotate-first).
    """
    u = params.num_qubits
    gates: list[Gate] = []
    for block in range(params.num_blocks):
        entangle = [Gate.cnot(c, t) for c, t in entangling_pairs(u, topology)]
        rotate = [
            Gate(axis, (q,), float(params.angles[block, q, a]), (block, q, a))
            for q in range(u)
            for a, axis in enumerate(ROTATION_AXES)
        ]
        if block_order is BlockOrder.ENTANGLE_FIRST:
            gates += entangle + rotate
        else:
            gates += rotate + entangle
    return gates


# ── Пакетные операции ────────────────────────────────────


def encode_states(inputs: np.ndarray) -> np.ndarray:
    """TPE для пакета входов (B, U) → амплитуды (B, 2^U)."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[1] > MAX_QUBITS:
        raise DomainError(f"Число кубитов {inputs.shape[1]} больше {MAX_QUBITS}")
    if np.any(~np.isfinite(inputs)) or np.any(inputs < 0.0) or np.any(inputs > 1.0):
        raise DomainError("Вход TPE должен лежать в [0, 1]^U")
    half = 0.5 * np.pi * inputs
    pairs = np.stack([np.cos(half), np.sin(half)], axis=-1)
    states = pairs[:, 0, :]
    for q in range(1, inputs.shape[1]):
        states = (states[:, :, None] * pairs[:, q, None, :]).reshape(inputs.shape[0], -1)
    return states.astype(np.complex128)


def run_circuit(states: np.ndarray, gates: Sequence[Gate], num_qubits: int) -> np.ndarray:
    for gate in gates:
        states = _apply(states, gate, num_qubits)
    return states


def z_signs(num_qubits: int) -> np.ndarray:
    """Таблица (U, 2^U): +1, если бит кубита равен 0, иначе −1."""
    indices = np.arange(2**num_qubits)
    bits = (indices[None, :] >> (num_qubits - 1 - np.arange(num_qubits))[:, None]) & 1
    return 1.0 - 2.0 * bits


def z_expectations(states: np.ndarray, num_qubits: int) -> np.ndarray:
    """⟨Z_i⟩ для пакета состояний → (B, U)."""
    probs = np.abs(states) ** 2
    return probs @ z_signs(num_qubits).T


def _adjoint_pass(
    initial: np.ndarray,
    gates: Sequence[Gate],
    num_qubits: int,
    upstream: np.ndarray,
    num_params: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Один прямой и один обратный проход для L_b = Σ_i g_{b,i}·⟨Z_i⟩_b.

    Returns:
        (z: (B, U), ∂L_b/∂θ: (B, P) в порядке angles.reshape(-1),
        λ, возвращённое к входу схемы: (B, 2^U)).
    """
    shape = (num_params // (3 * num_qubits), num_qubits, 3)
    phi = run_circuit(initial, gates, num_qubits)
    z = z_expectations(phi, num_qubits)

    # λ = H·φ, H = Σ_i g_i Z_i диагонален в вычислительном базисе
    lam = phi * (upstream @ z_signs(num_qubits))
    grads = np.zeros((initial.shape[0], num_params))
    for gate in reversed(gates):
        if gate.param_index is not None:
            generated = _apply_1q(phi, _PAULI[gate.kind], gate.qubits[0], num_qubits)
            flat = int(np.ravel_multi_index(gate.param_index, shape))
            grads[:, flat] = np.einsum("bi,bi->b", np.conj(lam), generated).imag
        phi = _apply(phi, gate, num_qubits, adjoint=True)
        lam = _apply(lam, gate, num_qubits, adjoint=True)
    return z, grads, lam


def _input_gradient(initial: np.ndarray, lam: np.ndarray, num_qubits: int) -> np.ndarray:
    """∂L/∂x для TPE-входа по λ, возвращённому к началу схемы."""
    grad_x = np.empty((initial.shape[0], num_qubits))
    for q in range(num_qubits):
        d_state = _apply_1q(initial, _TPE_DERIVATIVE, q, num_qubits)
        grad_x[:, q] = 2.0 * np.einsum("bi,bi->b", np.conj(lam), d_state).real
    return grad_x


def circuit_backward(
    inputs: np.ndarray,
    params: VQCParams,
    upstream: np.ndarray,
    topology: Topology = Topology.CHAIN,
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Сопряжённый проход для пакета: L = Σ_b Σ_i g_{b,i}·⟨Z_i⟩_b.

    Args:
        inputs: TPE-входы (B, U) в [0, 1].
        params: Параметры PQC.
        upstream: ∂L/∂z формы (B, U).

    Returns:
        (z, ∂L/∂θ формы L×U×3 — сумма по пакету, ∂L/∂x формы (B, U)).
    """
    u = params.num_qubits
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    upstream = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    if inputs.shape[1] != u or upstream.shape != inputs.shape:
        raise ShapeError(
            f"Формы входа {inputs.shape} и ∂L/∂z {upstream.shape} не согласованы с U={u}",
        )
    initial = encode_states(inputs)
    z, grads, lam = _adjoint_pass(initial, pqc_gates(params, topology, block_order), u, upstream, params.size)
    # фиксированный порядок суммирования по образцам
    grad = np.add.reduce(grads, axis=0).reshape(params.angles.shape)
    return z, grad, _input_gradient(initial, lam, u)


def circuit_jacobians(
    inputs: np.ndarray,
    params: VQCParams,
    topology: Topology = Topology.CHAIN,
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Якобианы измерений по углам и по входам для каждого образца.

    Returns:
        (z: (B, U), ∂z/∂θ: (B, U, L·U·3), ∂z/∂x: (B, U, U)).
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    batch, u = inputs.shape
    initial = encode_states(inputs)
    gates = pqc_gates(params, topology, block_order)
    jac_theta = np.zeros((batch, u, params.size))
    jac_x = np.zeros((batch, u, u))
    z = np.zeros((batch, u))
    for i in range(u):
        upstream = np.zeros((batch, u))
        upstream[:, i] = 1.0
        z, grads, lam = _adjoint_pass(initial, gates, u, upstream, params.size)
        jac_theta[:, i, :] = grads
        jac_x[:, i, :] = _input_gradient(initial, lam, u)
    return z, jac_theta, jac_x


# ── Операции над StateVector ─────────────────────────────


def tpe_encode(x: np.ndarray) -> StateVector:
    """Кодирование x ∈ [0,1]^U в произведение (cos(πx_i/2), sin(πx_i/2)).

    Raises:
        DomainError: Компонента вне [0, 1].
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return StateVector(x.size, encode_states(x[None, :])[0])


def product_state_marginals(psi: StateVector) -> np.ndarray:
    """Вероятности p_i(1) того, что кубит i находится в состоянии 1."""
    probs = psi.probabilities()
    return (1.0 - probs @ z_signs(psi.num_qubits).T) / 2.0


def tpe_decode(psi: StateVector) -> np.ndarray:
    """Восстановить x из TPE-состояния: x_i = (2/π)·atan2(√p_i(1), √p_i(0)).

    Raises:
        NotATPEStateError: Модули амплитуд расходятся с перекодированным
            состоянием больше чем на 1e-6.
    """
    p1 = np.clip(product_state_marginals(psi), 0.0, 1.0)
    x = (2.0 / np.pi) * np.arctan2(np.sqrt(p1), np.sqrt(1.0 - p1))
    x = np.clip(x, 0.0, 1.0)
    deviation = float(np.max(np.abs(np.abs(psi.amplitudes) - np.abs(encode_states(x[None, :])[0]))))
    if deviation > TPE_TOLERANCE:
        raise NotATPEStateError(deviation)
    return x


def apply_gate(psi: StateVector, gate: Gate) -> StateVector:
    """Применить один вентиль.

    Raises:
        BoundsError: Номер кубита вне [0, U).
        DomainError: У CNOT совпадают управляющий и целевой кубиты.
    """
    _check_gate(gate, psi.num_qubits)
    return StateVector(psi.num_qubits, _apply(psi.amplitudes[None, :], gate, psi.num_qubits)[0])


def pqc_forward(
    psi: StateVector,
    params: VQCParams,
    topology: Topology = Topology.CHAIN,
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST,
) -> StateVector:
    """Прогнать состояние через L блоков PQC.

    Raises:
        ShapeError: Число кубитов состояния и параметров различается.
    """
    if psi.num_qubits != params.num_qubits:
        raise ShapeError(f"Состояние на {psi.num_qubits} кубитах, параметры на {params.num_qubits}")
    out = run_circuit(psi.amplitudes[None, :], pqc_gates(params, topology, block_order), psi.num_qubits)
    return StateVector(psi.num_qubits, out[0])


def measure_z_exact(psi: StateVector) -> np.ndarray:
    return z_expectations(psi.amplitudes[None, :], psi.num_qubits)[0]


def shot_stream(seed: int, sample_index: int = 0) -> np.random.Generator:
    """Счётчиковый поток Philox, определяемый парой (seed, номер образца)."""
    if seed < 0 or sample_index < 0:
        raise DomainError("Зерно и номер образца должны быть неотрицательными")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, sample_index])))


def sample_counts(probabilities: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """M выборок методом обратной функции распределения → отсчёты по базису."""
    cdf = np.cumsum(probabilities)
    cdf[-1] = 1.0
    outcomes = np.searchsorted(cdf, rng.random(shots), side="right")
    return np.bincount(np.minimum(outcomes, cdf.size - 1), minlength=cdf.size)


def measure_z_shots(
    psi: StateVector,
    shots: int,
    seed: int,
    sample_index: int = 0,
) -> tuple[np.ndarray, ShotResult]:
    """Оценка ⟨Z_i⟩ по M измерениям в вычислительном базисе.

    Raises:
        DomainError: M < 1.
    """
    if shots < 1:
        raise DomainError(f"Число измерений должно быть ≥ 1, получено {shots}")
    counts = sample_counts(psi.probabilities(), shots, shot_stream(seed, sample_index))
    estimates = z_signs(psi.num_qubits) @ counts / shots
    width = psi.num_qubits
    table = {format(int(i), f"0{width}b"): int(counts[i]) for i in np.flatnonzero(counts)}
    return estimates, ShotResult(shots, table)


def vqc_gradient(
    psi_in: StateVector,
    params: VQCParams,
    upstream: np.ndarray,
    method: str = "adjoint",
    topology: Topology = Topology.CHAIN,
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST,
) -> np.ndarray:
    """∂L/∂θ для L = Σ_i upstream_i·⟨Z_i⟩ на выходе PQC.

    Args:
        psi_in: Входное состояние (произвольное, не обязательно TPE).
        params: Параметры PQC.
        upstream: ∂L/∂z длины U.
        method: "adjoint" (по умолчанию) или "parameter-shift".

    Returns:
        Массив формы params.angles.

    Raises:
        ShapeError: Несогласованные размеры.
        DomainError: Неизвестный метод.
    """
    upstream = np.asarray(upstream, dtype=np.float64).reshape(-1)
    u = params.num_qubits
    if psi_in.num_qubits != u or upstream.size != u:
        raise ShapeError(
            f"U={u}, состояние на {psi_in.num_qubits} кубитах, ∂L/∂z длины {upstream.size}",
        )
    gates = pqc_gates(params, topology, block_order)
    initial = psi_in.amplitudes[None, :]

    if method == "parameter-shift":
        grad = np.zeros_like(params.angles)
        for index in np.ndindex(*params.angles.shape):
            values = []
            for shift in (0.5 * np.pi, -0.5 * np.pi):
                shifted = [
                    Gate(g.kind, g.qubits, g.theta + shift, g.param_index) if g.param_index == index else g
                    for g in gates
                ]
                values.append(float(z_expectations(run_circuit(initial, shifted, u), u)[0] @ upstream))
            grad[index] = 0.5 * (values[0] - values[1])
        return grad
    if method != "adjoint":
        raise DomainError(f"Неизвестный метод градиента '{method}'")

    _, grads, _ = _adjoint_pass(initial, gates, u, upstream[None, :], params.size)
    return grads[0].reshape(params.angles.shape)


def pqc_unitary(
    params: VQCParams,
    topology: Topology = Topology.CHAIN,
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST,
) -> np.ndarray:
    """Плотная унитарная матрица всех L блоков (U ≤ 12)."""
    u = params.num_qubits
    if u > DENSE_UNITARY_MAX_QUBITS:
        raise DomainError(f"Плотная матрица для U={u} > {DENSE_UNITARY_MAX_QUBITS} слишком велика")
    basis = np.eye(2**u, dtype=np.complex128)
    return run_circuit(basis, pqc_gates(params, topology, block_order), u).T
