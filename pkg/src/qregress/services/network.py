"""Составная модель TTN-VQC и базовая PCA-VQC.

Прямой проход, MAE, градиенты по обучаемым параметрам (T_lr
фиксирована), якобианы для касательного ядра и нормы Фробениуса.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import math
import threading
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from qregress.exceptions import DomainError, ShapeError, UnsupportedModeError
from qregress.models.circuit import BlockOrder, StateVector, Topology, VQCParams
from qregress.models.network import (
    LossReport,
    MeasurementKind,
    MeasurementMode,
    Model,
    ModelNorms,
    PCAProjection,
    PCAVQCModel,
    TTNLayer,
    TTNVQCModel,
)
from qregress.models.tensor import TensorLayout
from qregress.services import linalg, qsim, tt

logger = logging.getLogger(__name__)

CHUNK_ROWS = 256
VQC_INIT_RANGE = 0.1
READOUT_STREAM = 1_000_003
PCA_PAD_STREAM = 1_000_033


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# ── Кэш входных TT-ядер ──────────────────────────────────


class InputCoreCache:
    """Кэш векторизованных TT-ядер входов.

    Ключ — хэш blake2b от байтов образца и раскладки, поэтому один
    и тот же образец не раскладывается повторно между эпохами.
    """

    def __init__(self) -> None:
        self._entries: dict[bytes, tuple[np.ndarray, ...]] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._entries)

    @staticmethod
    def _key(x: np.ndarray, layout: TensorLayout) -> bytes:
        digest = hashlib.blake2b(digest_size=16)
        digest.update(np.ascontiguousarray(x, dtype=np.float64).tobytes())
        digest.update(repr((layout.dims, layout.ranks)).encode())
        return digest.digest()

    def get_or_compute(self, x: np.ndarray, layout: TensorLayout) -> tuple[np.ndarray, ...]:
        key = self._key(x, layout)
        with self._lock:
            cached = self._entries.get(key)
            if cached is not None:
                self.hits += 1
                return cached
        cores = _input_cores(x, layout)
        with self._lock:
            self._entries.setdefault(key, cores)
            self.misses += 1
        return cores


def _input_cores(x: np.ndarray, layout: TensorLayout) -> tuple[np.ndarray, ...]:
    tensor = tt.reshape_to_tensor(x, layout.dims)
    return tuple(tt.tt_svd(tensor, layout.ranks).vectorized_cores())


def channel_inputs(
    inputs: np.ndarray,
    layout: TensorLayout,
    cache: InputCoreCache | None = None,
) -> list[np.ndarray]:
    """Векторизованные TT-ядра пакета: K массивов формы (B, R_k·D_k·R_{k+1})."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[1] != layout.size:
        raise ShapeError(f"Длина входа {inputs.shape[1]} не равна ∏D_k = {layout.size}")
    rows = [
        cache.get_or_compute(x, layout) if cache is not None else _input_cores(x, layout)
        for x in inputs
    ]
    return [np.stack([row[k] for row in rows]) for k in range(layout.order)]


# ── TTN-слой ─────────────────────────────────────────────


def _output_index(channel_out_dims: Sequence[int]) -> np.ndarray:
    """Таблица (U, K): мульти-индекс (u_1, …, u_K) каждого плоского выхода."""
    return np.stack(np.unravel_index(np.arange(math.prod(channel_out_dims)), channel_out_dims), axis=1)


def _channel_activations(layer: TTNLayer, cores: list[np.ndarray]) -> list[np.ndarray]:
    return [sigmoid(c @ w.T) for w, c in zip(layer.weights, cores)]


def _outer(layer: TTNLayer, activations: list[np.ndarray]) -> np.ndarray:
    index = _output_index(layer.channel_out_dims)
    y = np.ones((activations[0].shape[0], index.shape[0]))
    for k, z in enumerate(activations):
        y = y * z[:, index[:, k]]
    return y


def _outer_partials(layer: TTNLayer, activations: list[np.ndarray]) -> list[np.ndarray]:
    """∂y/∂z^[k] для каждого канала: массивы (B, U, U_k)."""
    index = _output_index(layer.channel_out_dims)
    partials = []
    for k, u_k in enumerate(layer.channel_out_dims):
        others = np.ones((activations[0].shape[0], index.shape[0]))
        for j, z in enumerate(activations):
            if j != k:
                others = others * z[:, index[:, j]]
        onehot = np.eye(u_k)[index[:, k]]
        partials.append(others[:, :, None] * onehot[None, :, :])
    return partials


def ttn_forward(x: np.ndarray, layer: TTNLayer, cache: InputCoreCache | None = None) -> np.ndarray:
    """TTN-слой для одного образца → y ∈ (0,1)^U.

    Вход раскладывается в TT-ядра, канал k даёт z^[k] = Sigm(W̄^[k]·vec X^[k]),
    выход — построчно развёрнутое внешнее произведение z^[1] ⊗ … ⊗ z^[K].

    Raises:
        ShapeError: Длина x не равна ∏ D_k.
    """
    return ttn_forward_batch(np.asarray(x, dtype=np.float64)[None, :], layer, cache)[0]


def ttn_forward_batch(inputs: np.ndarray, layer: TTNLayer, cache: InputCoreCache | None = None) -> np.ndarray:
    cores = channel_inputs(inputs, layer.layout, cache)
    return _outer(layer, _channel_activations(layer, cores))


# ── PCA ─────────────────────────────────────────────────


def _pad_directions(basis: np.ndarray, num_components: int, seed: int) -> np.ndarray:
    """Дополнить ортонормированный базис случайными ортонормированными столбцами."""
    rng = np.random.default_rng([seed, PCA_PAD_STREAM])
    extra = rng.normal(size=(basis.shape[0], num_components - basis.shape[1]))
    extra -= basis @ (basis.T @ extra)
    q, _ = np.linalg.qr(extra)
    q -= basis @ (basis.T @ q)
    q, _ = np.linalg.qr(q)
    return np.hstack([basis, linalg.fix_column_signs(q)])


def pca_fit(train_inputs: np.ndarray, num_components: int, seed: int = 0) -> PCAProjection:
    """Главные направления центрированной ковариации и min-max масштабирование.

    Направления упорядочены по убыванию собственных чисел, знак каждого
    фиксирован так же, как у сингулярных векторов в TT-SVD, поэтому при
    невырожденной ковариации результат от seed не зависит. seed задаёт
    только дополнение до U направлений, когда положительных собственных
    чисел меньше U.

    Raises:
        DomainError: Не выполнено N > U ≥ 1.
        ShapeError: U больше размерности входа.
    """
    x = np.asarray(train_inputs, dtype=np.float64)
    n, q = x.shape
    if not n > num_components >= 1:
        raise DomainError(f"PCA требует N > U ≥ 1, получено N={n}, U={num_components}")
    if num_components > q:
        raise ShapeError(f"Нельзя выбрать {num_components} направлений в пространстве размерности {q}")

    mean = x.mean(axis=0)
    centered = x - mean
    covariance = centered.T @ centered / (n - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(-eigenvalues, kind="stable")[:num_components]
    eigenvalues = eigenvalues[order]
    directions = linalg.fix_column_signs(eigenvectors[:, order])

    tolerance = max(n, q) * np.finfo(np.float64).eps * max(float(eigenvalues[0]), 0.0)
    positive = int(np.sum(eigenvalues > tolerance))
    if positive < num_components:
        logger.warning(
            "Ковариация вырождена: %d положительных собственных чисел из %d, "
            "недостающие направления взяты из ортогонального дополнения",
            positive,
            num_components,
        )
        directions = _pad_directions(directions[:, :positive], num_components, seed)
    projected = centered @ directions
    scale_min = projected.min(axis=0)
    # направления с нулевой дисперсией считаются постоянными
    scale_max = np.where(eigenvalues > tolerance, projected.max(axis=0), scale_min)
    return PCAProjection(
        projection=directions.T,
        mean=mean,
        scale_min=scale_min,
        scale_max=scale_max,
        eigenvalues=np.maximum(eigenvalues, 0.0),
    )


def pca_project(x: np.ndarray, model: PCAVQCModel) -> np.ndarray:
    """Проекция, min-max масштабирование по обучающей статистике, обрезка в [0, 1].

    Постоянные на обучающей выборке компоненты отображаются в 0.5.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    projected = (np.atleast_2d(x) - model.mean) @ model.projection.T
    span = model.scale_max - model.scale_min
    constant = model.constant_components
    safe_span = np.where(constant, 1.0, span)
    scaled = np.where(constant, 0.5, (projected - model.scale_min) / safe_span)
    result = np.clip(scaled, 0.0, 1.0)
    return result[0] if single else result


# ── Построение моделей ───────────────────────────────────


def make_readout(output_dim: int, num_qubits: int, seed: int, identity: bool = False) -> np.ndarray:
    """Фиксированная матрица T_lr: Uniform(−1/√U, 1/√U) или единичная при Q_out = U."""
    if identity:
        if output_dim != num_qubits:
            raise ShapeError(f"Единичная T_lr требует Q_out = U, получено {output_dim} и {num_qubits}")
        return np.eye(num_qubits)
    bound = 1.0 / math.sqrt(num_qubits)
    rng = np.random.default_rng([seed, READOUT_STREAM])
    return rng.uniform(-bound, bound, size=(output_dim, num_qubits))


def random_vqc(num_blocks: int, num_qubits: int, rng: np.random.Generator) -> VQCParams:
    """Углы из Uniform(−0.1, 0.1): близко к тождественной схеме."""
    return VQCParams(rng.uniform(-VQC_INIT_RANGE, VQC_INIT_RANGE, size=(num_blocks, num_qubits, 3)))


def random_ttn(layout: TensorLayout, channel_out_dims: Sequence[int], rng: np.random.Generator) -> TTNLayer:
    """Веса каналов из Uniform(−1/√fan_in, 1/√fan_in), fan_in = R_k·D_k·R_{k+1}."""
    weights = []
    for k, u_k in enumerate(channel_out_dims):
        fan_in = layout.core_size(k)
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(u_k, fan_in)))
    return TTNLayer(layout, tuple(channel_out_dims), tuple(weights))


def build_ttn_vqc(
    dims: Sequence[int],
    ranks: Sequence[int],
    channel_out_dims: Sequence[int],
    num_blocks: int,
    output_dim: int,
    seed: int = 0,
    attempt: int = 0,
    identity_readout: bool = False,
    topology: Topology = Topology.CHAIN,
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST,
) -> TTNVQCModel:
    """Случайно инициализированная модель TTN-VQC.

    Поток параметров задаётся парой (seed, attempt), T_lr — только seed,
    поэтому повторные попытки инициализации не меняют регрессию.
    """
    layout = TensorLayout(tuple(dims), tuple(ranks))
    rng = np.random.default_rng([seed, attempt])
    ttn = random_ttn(layout, channel_out_dims, rng)
    u = ttn.num_outputs
    return TTNVQCModel(
        ttn=ttn,
        vqc=random_vqc(num_blocks, u, rng),
        readout=make_readout(output_dim, u, seed, identity_readout),
        topology=topology,
        block_order=block_order,
        seed=seed,
    )


def build_pca_vqc(
    train_inputs: np.ndarray,
    num_qubits: int,
    num_blocks: int,
    output_dim: int,
    seed: int = 0,
    attempt: int = 0,
    identity_readout: bool = False,
    topology: Topology = Topology.CHAIN,
    block_order: BlockOrder = BlockOrder.ENTANGLE_FIRST,
    fitted: PCAProjection | None = None,
) -> PCAVQCModel:
    """Модель PCA-VQC: PCA подгоняется на обучающих входах (или берётся готовая)."""
    fitted = fitted or pca_fit(train_inputs, num_qubits, seed)
    rng = np.random.default_rng([seed, attempt])
    return PCAVQCModel(
        projection=fitted.projection,
        mean=fitted.mean,
        scale_min=fitted.scale_min,
        scale_max=fitted.scale_max,
        vqc=random_vqc(num_blocks, num_qubits, rng),
        readout=make_readout(output_dim, num_qubits, seed, identity_readout),
        topology=topology,
        block_order=block_order,
        seed=seed,
    )


# ── Плоский вектор параметров ───────────────────────────


def flatten_params(model: Model) -> np.ndarray:
    """θ = {θ_ttn, θ_vqc} одним вектором (веса каналов по порядку, затем углы)."""
    parts = [w.reshape(-1) for w in model.ttn.weights] if isinstance(model, TTNVQCModel) else []
    parts.append(model.vqc.angles.reshape(-1))
    return np.concatenate(parts)


def with_params(model: Model, params: np.ndarray) -> Model:
    """Копия модели с параметрами из плоского вектора."""
    params = np.asarray(params, dtype=np.float64)
    expected = param_count(model)
    if params.shape != (expected,):
        raise ShapeError(f"Ожидался вектор из {expected} параметров, форма {params.shape}")
    offset = 0
    updates: dict[str, object] = {}
    if isinstance(model, TTNVQCModel):
        weights = []
        for w in model.ttn.weights:
            weights.append(params[offset:offset + w.size].reshape(w.shape))
            offset += w.size
        updates["ttn"] = dataclasses.replace(model.ttn, weights=tuple(weights))
    updates["vqc"] = VQCParams(params[offset:].reshape(model.vqc.angles.shape))
    return dataclasses.replace(model, **updates)


def param_count(model: Model) -> int:
    ttn = model.ttn.param_count if isinstance(model, TTNVQCModel) else 0
    return ttn + model.vqc.size


# ── Прямой проход ────────────────────────────────────────


@dataclass
class _FrontState:
    """Промежуточные величины входного блока для обратного прохода."""

    features: np.ndarray
    cores: list[np.ndarray] = field(default_factory=list)
    activations: list[np.ndarray] = field(default_factory=list)


def _front(model: Model, inputs: np.ndarray, cache: InputCoreCache | None) -> _FrontState:
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[1] != model.input_dim:
        raise ShapeError(f"Длина входа {inputs.shape[1]} не равна {model.input_dim}")
    if isinstance(model, PCAVQCModel):
        return _FrontState(features=np.atleast_2d(pca_project(inputs, model)))
    cores = channel_inputs(inputs, model.ttn.layout, cache)
    activations = _channel_activations(model.ttn, cores)
    return _FrontState(features=_outer(model.ttn, activations), cores=cores, activations=activations)


def measure_batch(
    model: Model,
    inputs: np.ndarray,
    mode: MeasurementMode | None = None,
    cache: InputCoreCache | None = None,
    sample_offset: int = 0,
) -> np.ndarray:
    """Измерения z ∈ [−1,1]^U для пакета входов.

    В режиме shots образец с номером n использует поток (seed, sample_offset + n).
    """
    mode = mode or MeasurementMode.exact()
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    u = model.num_qubits
    gates = qsim.pqc_gates(model.vqc, model.topology, model.block_order)
    results = []
    for start in range(0, inputs.shape[0], CHUNK_ROWS):
        front = _front(model, inputs[start:start + CHUNK_ROWS], cache)
        states = qsim.run_circuit(qsim.encode_states(front.features), gates, u)
        if mode.kind is MeasurementKind.EXACT:
            results.append(qsim.z_expectations(states, u))
            continue
        signs = qsim.z_signs(u)
        probs = np.abs(states) ** 2
        chunk = np.empty((states.shape[0], u))
        for i, p in enumerate(probs):
            rng = qsim.shot_stream(mode.seed, sample_offset + start + i)
            chunk[i] = signs @ qsim.sample_counts(p, mode.shots, rng) / mode.shots
        results.append(chunk)
    return np.concatenate(results) if results else np.zeros((0, u))


def circuit_states(model: Model, inputs: np.ndarray, cache: InputCoreCache | None = None) -> list[StateVector]:
    """Состояния PQC перед измерением для каждого входа пакета."""
    front = _front(model, inputs, cache)
    states = qsim.run_circuit(
        qsim.encode_states(front.features),
        qsim.pqc_gates(model.vqc, model.topology, model.block_order),
        model.num_qubits,
    )
    return [StateVector(model.num_qubits, amplitudes) for amplitudes in states]


def predict(
    model: Model,
    inputs: np.ndarray,
    mode: MeasurementMode | None = None,
    cache: InputCoreCache | None = None,
    sample_offset: int = 0,
) -> np.ndarray:
    """ŷ = T_lr·z для пакета входов → (B, Q_out)."""
    return measure_batch(model, inputs, mode, cache, sample_offset) @ model.readout.T


def model_forward(
    x: np.ndarray,
    model: Model,
    mode: MeasurementMode | None = None,
    cache: InputCoreCache | None = None,
) -> np.ndarray:
    """ŷ для одного входа: T_lr · measure(PQC(TPE(front(x))))."""
    return predict(model, np.asarray(x, dtype=np.float64)[None, :], mode, cache)[0]


def mae_loss(yhat: np.ndarray, y: np.ndarray) -> LossReport:
    """Поэлементная MAE: (1/Q_out)·Σ|ŷ_j − y_j|, для пакета — среднее по образцам.

    Raises:
        ShapeError: Формы не совпадают.
    """
    yhat = np.asarray(yhat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if yhat.shape != y.shape:
        raise ShapeError(f"Формы предсказания {yhat.shape} и цели {y.shape} различаются")
    if yhat.ndim == 1:
        return LossReport(mae=float(np.mean(np.abs(yhat - y))))
    per_sample = np.mean(np.abs(yhat - y), axis=1)
    return LossReport(mae=float(np.mean(per_sample)), per_sample=per_sample)


def evaluate(
    model: Model,
    inputs: np.ndarray,
    targets: np.ndarray,
    mode: MeasurementMode | None = None,
    cache: InputCoreCache | None = None,
) -> LossReport:
    return mae_loss(predict(model, inputs, mode, cache), targets)


# ── Градиенты ────────────────────────────────────────────


@dataclass(frozen=True)
class ModelGradients:
    """Градиенты средней MAE пакета по обучаемым параметрам."""

    ttn: tuple[np.ndarray, ...]
    vqc: np.ndarray
    loss: float

    def flatten(self) -> np.ndarray:
        return np.concatenate([*(g.reshape(-1) for g in self.ttn), self.vqc.reshape(-1)])


def _ttn_weight_grads(layer: TTNLayer, front: _FrontState, grad_features: np.ndarray) -> tuple[np.ndarray, ...]:
    grads = []
    for k, partial in enumerate(_outer_partials(layer, front.activations)):
        z = front.activations[k]
        delta = np.einsum("bu,buv->bv", grad_features, partial) * z * (1.0 - z)
        grads.append(delta.T @ front.cores[k])
    return tuple(grads)


def model_gradients(
    model: Model,
    inputs: np.ndarray,
    targets: np.ndarray,
    mode: MeasurementMode | None = None,
    cache: InputCoreCache | None = None,
    upstream: np.ndarray | None = None,
) -> ModelGradients:
    """Градиенты средней по пакету MAE по θ_ttn и θ_vqc (T_lr не обучается).

    Субградиент |r| в нуле принят равным 0.

    Args:
        upstream: Явный ∂L/∂ŷ формы (B, Q_out) вместо субградиента MAE.

    Raises:
        UnsupportedModeError: Запрошен режим shots.
    """
    mode = mode or MeasurementMode.exact()
    if mode.kind is not MeasurementKind.EXACT:
        raise UnsupportedModeError("model_gradients", mode.kind.value)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if targets.shape != (inputs.shape[0], model.output_dim):
        raise ShapeError(f"Форма целей {targets.shape}, ожидалась ({inputs.shape[0]}, {model.output_dim})")

    front = _front(model, inputs, cache)
    z = qsim.z_expectations(
        qsim.run_circuit(
            qsim.encode_states(front.features),
            qsim.pqc_gates(model.vqc, model.topology, model.block_order),
            model.num_qubits,
        ),
        model.num_qubits,
    )
    yhat = z @ model.readout.T
    loss = mae_loss(yhat, targets).mae
    if upstream is None:
        upstream = np.sign(yhat - targets) / targets.size
    grad_z = np.asarray(upstream, dtype=np.float64) @ model.readout

    _, grad_vqc, grad_features = qsim.circuit_backward(
        front.features, model.vqc, grad_z, model.topology, model.block_order,
    )
    ttn_grads: tuple[np.ndarray, ...] = ()
    if isinstance(model, TTNVQCModel):
        ttn_grads = _ttn_weight_grads(model.ttn, front, grad_features)
    return ModelGradients(ttn=ttn_grads, vqc=grad_vqc, loss=loss)


def model_jacobian(
    model: Model,
    inputs: np.ndarray,
    space: str = "output",
    cache: InputCoreCache | None = None,
) -> np.ndarray:
    """Якобиан сложенных выходов по всем обучаемым параметрам.

    Args:
        space: "output" — по ŷ (B·Q_out строк), "measurement" — по z (B·U строк).

    Returns:
        Матрица (B·dim, P) в порядке flatten_params.
    """
    if space not in ("output", "measurement"):
        raise DomainError(f"Неизвестное пространство якобиана '{space}'")
    front = _front(model, inputs, cache)
    _, jac_theta, jac_x = qsim.circuit_jacobians(front.features, model.vqc, model.topology, model.block_order)

    blocks = []
    if isinstance(model, TTNVQCModel):
        for k, partial in enumerate(_outer_partials(model.ttn, front.activations)):
            z = front.activations[k]
            d_pre = np.einsum("biu,buv->biv", jac_x, partial) * (z * (1.0 - z))[:, None, :]
            blocks.append(np.einsum("biv,bc->bivc", d_pre, front.cores[k]).reshape(d_pre.shape[0], d_pre.shape[1], -1))
    blocks.append(jac_theta)
    jac = np.concatenate(blocks, axis=2)
    if space == "output":
        jac = np.einsum("qi,bip->bqp", model.readout, jac)
    return jac.reshape(-1, jac.shape[2])


# ── Нормы ────────────────────────────────────────────────


def model_norms(model: Model) -> ModelNorms:
    """Λ_k = ‖W̄^[k]‖_F, Λ′ = 2^{U/2} (норма любой унитарной 2^U × 2^U), число параметров."""
    channel = (
        tuple(float(np.linalg.norm(w)) for w in model.ttn.weights) if isinstance(model, TTNVQCModel) else ()
    )
    return ModelNorms(
        channel_norms=channel,
        unitary_norm=2.0 ** (model.num_qubits / 2.0),
        param_count=param_count(model),
    )
