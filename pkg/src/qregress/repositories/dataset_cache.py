"""Двоичный кэш наборов данных.

Формат (little-endian):
    b"QRDS" | uint16 версия | uint32 N | uint32 Q | uint32 Q_out | uint8 код типа
    | входы N×Q | цели N×Q_out (построчно).
Код типа 1 — float64.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Any

import numpy as np
import orjson

from qregress.exceptions import DataError
from qregress.models.dataset import RegressionDataset

CACHE_MAGIC = b"QRDS"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sHIIIB")
_DTYPES = {1: np.dtype("<f8")}


def cache_key(payload: dict[str, Any]) -> str:
    """Короткий sha256 от канонического JSON параметров, определяющих набор данных."""
    raw = orjson.dumps({**payload, "version": CACHE_VERSION}, option=orjson.OPT_SORT_KEYS)
    return hashlib.sha256(raw).hexdigest()[:16]


class DatasetCacheRepository:
    """Запись и чтение наборов данных в плоском двоичном формате."""

    def write(self, dataset: RegressionDataset, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = _HEADER.pack(
            CACHE_MAGIC, CACHE_VERSION, len(dataset), dataset.input_dim, dataset.output_dim, 1,
        )
        dtype = _DTYPES[1]
        with path.open("wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(dataset.inputs, dtype=dtype).tobytes())
            fh.write(np.ascontiguousarray(dataset.targets, dtype=dtype).tobytes())
        return path

    def read(self, path: str | Path) -> RegressionDataset:
        """Raises:
            DataError: Неверная сигнатура, версия, тип или длина данных.
        """
        path = Path(path)
        raw = path.read_bytes()
        if len(raw) < _HEADER.size:
            raise DataError(f"{path}: файл короче заголовка кэша")
        magic, version, n, q, q_out, code = _HEADER.unpack_from(raw)
        if magic != CACHE_MAGIC:
            raise DataError(f"{path}: неверная сигнатура {magic!r}")
        if version != CACHE_VERSION:
            raise DataError(f"{path}: неподдерживаемая версия кэша {version}")
        if code not in _DTYPES:
            raise DataError(f"{path}: неизвестный код типа {code}")
        dtype = _DTYPES[code]
        expected = _HEADER.size + (n * q + n * q_out) * dtype.itemsize
        if len(raw) != expected:
            raise DataError(f"{path}: ожидалось {expected} байт, найдено {len(raw)}")
        body = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size).copy()
        inputs = body[: n * q].reshape(n, q)
        targets = body[n * q:].reshape(n, q_out)
        return RegressionDataset(inputs, targets, {"source": "cache", "path": str(path)})
