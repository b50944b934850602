"""Данные: разбор IDX (MNIST), зашумление с заданным SNR, пары для шумоподавления,
синтетические задачи регрессии.
"""

from __future__ import annotations

import gzip
import logging
import math
import struct
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from qregress.exceptions import DataError, DatasetSizeError, DomainError, IdxFormatError
from qregress.models.dataset import RegressionDataset
from qregress.models.network import TTNVQCModel
from qregress.schemas.experiment import NoiseKind, NoiseSpec, PowerScope, SyntheticTarget
from qregress.services import network

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
IMAGE_SIDE = 28
ANALYTIC_STREAM = 2_000_003

# Имена стандартных файлов MNIST
MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


# ── IDX ──────────────────────────────────────────────────


def _read_bytes(path: Path) -> bytes:
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def read_idx(path: str | Path, magic: int, ndim: int) -> np.ndarray:
    """Прочитать IDX-файл с беззнаковыми байтами (big-endian заголовок).

    Raises:
        IdxFormatError: Неверное магическое число, усечённый заголовок или данные.
    """
    path = Path(path)
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise IdxFormatError(str(path), "magic", "файл короче заголовка")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise IdxFormatError(str(path), "magic", f"ожидалось 0x{magic:08x}, найдено 0x{found:08x}")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxFormatError(str(path), "dims", "заголовок размерностей усечён")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    expected = math.prod(dims)
    payload = len(raw) - header
    if payload != expected:
        raise IdxFormatError(str(path), "payload", f"ожидалось {expected} байт, найдено {payload}")
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def load_mnist_idx(images_path: str | Path, labels_path: str | Path | None = None) -> RegressionDataset:
    """Чистый набор MNIST: пиксели / 255 в [0, 1], вход и цель — один и тот же вектор длины 784.

    Метки, если заданы, сохраняются в meta["labels"].

    Raises:
        IdxFormatError: Нарушение формата одного из файлов.
    """
    images = read_idx(images_path, IMAGES_MAGIC, 3)
    if images.shape[1:] != (IMAGE_SIDE, IMAGE_SIDE):
        raise IdxFormatError(
            str(images_path), "rows/cols", f"ожидалось {IMAGE_SIDE}×{IMAGE_SIDE}, найдено {images.shape[1:]}",
        )
    pixels = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    meta: dict[str, object] = {"source": "mnist", "path": str(images_path)}
    if labels_path is not None:
        labels = read_idx(labels_path, LABELS_MAGIC, 1)
        if labels.shape[0] != images.shape[0]:
            raise IdxFormatError(
                str(labels_path), "count", f"меток {labels.shape[0]}, изображений {images.shape[0]}",
            )
        meta["labels"] = labels.copy()
    logger.info("Загружено %d изображений из %s", pixels.shape[0], images_path)
    return RegressionDataset(pixels, pixels, meta)


def load_mnist_dir(directory: str | Path) -> tuple[RegressionDataset, RegressionDataset]:
    """Стандартные обучающая и тестовая части из каталога (файлы могут быть сжаты gzip)."""
    directory = Path(directory)

    def locate(name: str) -> Path:
        plain = directory / name
        return plain if plain.exists() else directory / f"{name}.gz"

    train = load_mnist_idx(locate(MNIST_FILES["train_images"]), locate(MNIST_FILES["train_labels"]))
    test = load_mnist_idx(locate(MNIST_FILES["test_images"]), locate(MNIST_FILES["test_labels"]))
    return train, test


# ── Выборки ──────────────────────────────────────────────


def prepare_dataset(
    clean: RegressionDataset,
    n_train: int,
    n_test: int,
    seed: int = 0,
    test_pool: RegressionDataset | None = None,
) -> tuple[RegressionDataset, RegressionDataset]:
    """Выборка без возвращения обучающей и тестовой частей.

    Без test_pool обе части берутся из одного пула и не пересекаются;
    с test_pool тестовая часть берётся из него.

    Raises:
        DatasetSizeError: Образцов меньше, чем запрошено.
    """
    rng = np.random.default_rng(seed)
    if test_pool is None:
        if n_train + n_test > len(clean):
            raise DatasetSizeError(n_train + n_test, len(clean))
        order = rng.permutation(len(clean))
        train_idx, test_idx = order[:n_train], order[n_train:n_train + n_test]
        pool = clean
    else:
        if n_train > len(clean):
            raise DatasetSizeError(n_train, len(clean))
        if n_test > len(test_pool):
            raise DatasetSizeError(n_test, len(test_pool))
        train_idx = rng.permutation(len(clean))[:n_train]
        test_idx = rng.permutation(len(test_pool))[:n_test]
        pool = test_pool
    return (
        clean.subset(train_idx, split="train", indices=train_idx),
        pool.subset(test_idx, split="test", indices=test_idx),
    )


# ── Шум ──────────────────────────────────────────────────


def noise_stream(seed: int, index: int) -> np.random.Generator:
    """Поток Philox образца index; результат не зависит от порядка обработки."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def noise_std(signal_power: np.ndarray | float, snr_db: float) -> np.ndarray:
    """σ = √(P_sig · 10^(−SNR/10))."""
    return np.sqrt(np.asarray(signal_power, dtype=np.float64) * 10.0 ** (-snr_db / 10.0))


def add_noise(inputs: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Аддитивный гауссов или лапласов шум с заданным SNR, без отсечения.

    Мощность сигнала P_sig = mean(x²) считается по образцу (per-image)
    или по всему корпусу (corpus). Лаплас: b = σ/√2, дисперсия 2b² = σ².

    Raises:
        DataError: Входы содержат нечисловые значения.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if not np.all(np.isfinite(inputs)):
        raise DataError("Нельзя зашумить нечисловые входы")
    if spec.is_clean:
        return inputs.copy()
    if spec.power_scope is PowerScope.CORPUS:
        powers = np.full(inputs.shape[0], np.mean(inputs**2))
    else:
        powers = np.mean(inputs**2, axis=1)
    sigmas = noise_std(powers, spec.snr_db)

    noisy = np.empty_like(inputs)
    for n, (row, sigma) in enumerate(zip(inputs, sigmas)):
        rng = noise_stream(spec.seed, n)
        if spec.kind is NoiseKind.GAUSSIAN:
            noise = rng.normal(0.0, 1.0, row.shape) * sigma
        else:
            noise = rng.laplace(0.0, 1.0, row.shape) * (sigma / math.sqrt(2.0))
        noisy[n] = row + noise
    return noisy


def make_denoising_pairs(clean: RegressionDataset, spec: NoiseSpec) -> RegressionDataset:
    """Вход — зашумлённое изображение, цель — чистое."""
    return RegressionDataset(
        add_noise(clean.inputs, spec),
        clean.inputs,
        {**clean.meta, "noise": spec.label, "noise_seed": spec.seed},
    )


def realized_snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    """10·log₁₀(P_sig / P̂_noise) по всей матрице."""
    clean = np.asarray(clean, dtype=np.float64)
    noise_power = float(np.mean((np.asarray(noisy) - clean) ** 2))
    return 10.0 * math.log10(float(np.mean(clean**2)) / noise_power)


# ── Синтетические задачи ────────────────────────────────


def _analytic_targets(inputs: np.ndarray, output_dim: int, seed: int) -> np.ndarray:
    """Гладкое отображение y_j = ½·sin(2π·⟨a_j, x⟩ / Q), a_j ~ Uniform[0, 1]^Q."""
    rng = np.random.default_rng([seed, ANALYTIC_STREAM])
    directions = rng.uniform(0.0, 1.0, size=(output_dim, inputs.shape[1]))
    return 0.5 * np.sin(2.0 * np.pi * inputs @ directions.T / inputs.shape[1])


def synthetic_dataset(
    dims: Sequence[int],
    ranks: Sequence[int],
    channel_out_dims: Sequence[int],
    num_samples: int,
    output_dim: int = 4,
    num_blocks: int = 2,
    target: SyntheticTarget = SyntheticTarget.TEACHER,
    seed: int = 0,
    noise: NoiseSpec | None = None,
) -> tuple[RegressionDataset, TTNVQCModel | None]:
    """Контролируемая задача: входы Uniform[0,1]^Q, цели от модели-учителя или аналитической функции.

    Учитель — build_ttn_vqc(..., seed) с попыткой 0, поэтому ученик с тем же
    зерном совпадает с ним в начальной точке.

    Returns:
        (набор данных, модель-учитель или None для аналитической цели).

    Raises:
        DomainError: num_samples < 1.
    """
    if num_samples < 1:
        raise DomainError(f"Размер синтетической выборки должен быть ≥ 1, получено {num_samples}")
    rng = np.random.default_rng([seed, num_samples])
    inputs = rng.uniform(0.0, 1.0, size=(num_samples, math.prod(dims)))

    teacher = None
    if target is SyntheticTarget.TEACHER:
        teacher = network.build_ttn_vqc(dims, ranks, channel_out_dims, num_blocks, output_dim, seed=seed)
        targets = network.predict(teacher, inputs)
    else:
        targets = _analytic_targets(inputs, output_dim, seed)

    meta: dict[str, object] = {"source": "synthetic", "target": target.value, "seed": seed}
    if noise is not None and not noise.is_clean:
        inputs = add_noise(inputs, noise)
        meta["noise"] = noise.label
    return RegressionDataset(inputs, targets, meta), teacher
