"""Репозиторий контрольных точек моделей (.npz)."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import numpy as np
import orjson

from qregress.exceptions import CheckpointFormatError
from qregress.models.circuit import BlockOrder, Topology, VQCParams
from qregress.models.network import Model, ModelKind, PCAVQCModel, TTNLayer, TTNVQCModel
from qregress.models.tensor import TensorLayout

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "qregress-checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointRepository:
    """Сохранение и загрузка обученных моделей.

    Архив содержит `meta` (JSON в байтах), `vqc_angles`, `readout` и
    веса входного блока: `ttn_weight_{k}` либо `pca_*`.
    """

    def save(self, model: Model, path: str | Path, extra: dict[str, Any] | None = None) -> Path:
        """Записать модель; extra попадает в meta (эхо конфигурации, зёрна).

        Returns:
            Путь к записанному файлу.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        meta: dict[str, Any] = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "kind": model.kind.value,
            "topology": model.topology.value,
            "block_order": model.block_order.value,
            "seed": model.seed,
            "extra": extra or {},
        }
        arrays: dict[str, np.ndarray] = {
            "vqc_angles": np.asarray(model.vqc.angles),
            "readout": np.asarray(model.readout),
        }
        if isinstance(model, TTNVQCModel):
            meta["dims"] = list(model.ttn.layout.dims)
            meta["ranks"] = list(model.ttn.layout.ranks)
            meta["channel_out_dims"] = list(model.ttn.channel_out_dims)
            for k, weight in enumerate(model.ttn.weights):
                arrays[f"ttn_weight_{k}"] = np.asarray(weight)
        else:
            arrays.update(
                pca_projection=np.asarray(model.projection),
                pca_mean=np.asarray(model.mean),
                pca_min=np.asarray(model.scale_min),
                pca_max=np.asarray(model.scale_max),
            )
        meta_bytes = np.frombuffer(orjson.dumps(meta, option=orjson.OPT_SORT_KEYS), dtype=np.uint8)
        with path.open("wb") as fh:
            np.savez(fh, meta=meta_bytes, **arrays)
        logger.info("Контрольная точка записана: %s", path)
        return path

    def load(self, path: str | Path) -> tuple[Model, dict[str, Any]]:
        """Прочитать модель и её meta.

        Raises:
            CheckpointFormatError: Чужой формат, неизвестная версия или нет нужных массивов.
        """
        path = Path(path)
        try:
            archive = np.load(path, allow_pickle=False)
        except (OSError, ValueError) as exc:
            raise CheckpointFormatError(f"{path}: не удаётся прочитать архив: {exc}") from exc
        with archive:
            entries = {name: archive[name] for name in archive.files}
        meta = self._read_meta(path, entries)
        try:
            model = self._build(meta, entries)
        except KeyError as exc:
            raise CheckpointFormatError(f"{path}: отсутствует массив {exc}") from exc
        return model, meta

    @staticmethod
    def _read_meta(path: Path, entries: dict[str, np.ndarray]) -> dict[str, Any]:
        if "meta" not in entries:
            raise CheckpointFormatError(f"{path}: нет записи meta")
        try:
            meta = orjson.loads(entries["meta"].tobytes())
        except orjson.JSONDecodeError as exc:
            raise CheckpointFormatError(f"{path}: meta не является JSON") from exc
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointFormatError(f"{path}: неизвестный формат {meta.get('format')!r}")
        if meta.get("version") != CHECKPOINT_VERSION:
            raise CheckpointFormatError(f"{path}: неподдерживаемая версия {meta.get('version')!r}")
        return meta

    @staticmethod
    def _build(meta: dict[str, Any], entries: dict[str, np.ndarray]) -> Model:
        common = {
            "vqc": VQCParams(entries["vqc_angles"]),
            "readout": entries["readout"],
            "topology": Topology(meta["topology"]),
            "block_order": BlockOrder(meta["block_order"]),
            "seed": int(meta["seed"]),
        }
        if ModelKind(meta["kind"]) is ModelKind.TTN_VQC:
            layout = TensorLayout(tuple(meta["dims"]), tuple(meta["ranks"]))
            weights = tuple(entries[f"ttn_weight_{k}"] for k in range(layout.order))
            return TTNVQCModel(ttn=TTNLayer(layout, tuple(meta["channel_out_dims"]), weights), **common)
        return PCAVQCModel(
            projection=entries["pca_projection"],
            mean=entries["pca_mean"],
            scale_min=entries["pca_min"],
            scale_max=entries["pca_max"],
            **common,
        )
