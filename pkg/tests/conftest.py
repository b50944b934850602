"""Общие фикстуры для unit-тестов."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Добавляем src в PYTHONPATH для корректного импорта
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from qregress.services import network  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    """Детерминированный генератор для тестовых данных."""
    return np.random.default_rng(1234)


@pytest.fixture
def small_model():
    """TTN-VQC на 4 кубитах: вход 4×4, ранги (1, 2, 1), два блока PQC, Q_out = 3."""
    return network.build_ttn_vqc(
        dims=(4, 4),
        ranks=(1, 2, 1),
        channel_out_dims=(2, 2),
        num_blocks=2,
        output_dim=3,
        seed=7,
    )


@pytest.fixture
def small_inputs(rng: np.random.Generator) -> np.ndarray:
    """Пять входов длины 16 из [0, 1]."""
    return rng.uniform(0.0, 1.0, size=(5, 16))
