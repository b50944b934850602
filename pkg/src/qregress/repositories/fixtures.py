"""Расположение встроенного IDX-фикстура (10 изображений 28×28 и метки)."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

FIXTURE_IMAGES = "fixture-images-idx3-ubyte"
FIXTURE_LABELS = "fixture-labels-idx1-ubyte"
FIXTURE_COUNT = 10
# Сумма всех байтов пикселей фикстура
FIXTURE_PIXEL_SUM = 993936


def fixture_paths() -> tuple[Path, Path]:
    """Пути к файлам изображений и меток фикстура."""
    root = resources.files("qregress") / "resources"
    return Path(str(root / FIXTURE_IMAGES)), Path(str(root / FIXTURE_LABELS))
