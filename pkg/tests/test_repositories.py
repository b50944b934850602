"""Тесты файловых репозиториев: контрольные точки, история, отчёты, кэш данных."""

from datetime import datetime, timezone

import numpy as np
import orjson
import pytest

from qregress.exceptions import CheckpointFormatError, DataError
from qregress.models.circuit import BlockOrder, Topology
from qregress.models.dataset import RegressionDataset
from qregress.models.training import TrainState
from qregress.repositories import (
    HISTORY_COLUMNS,
    CheckpointRepository,
    DatasetCacheRepository,
    HistoryRepository,
    ReportRepository,
    cache_key,
    dump_json,
)
from qregress.repositories.checkpoint import CHECKPOINT_FORMAT
from qregress.schemas.report import BoundInputs, EpochRecord, RunReport, SweepRow
from qregress.services import network, theory


# ── Фикстуры ────────────────────────────────────────────


def _state(epochs: int) -> TrainState:
    history = [
        EpochRecord(
            epoch=t,
            train_mae=0.1 / t,
            test_mae=None if t % 2 else 0.2 / t,
            grad_norm=1.0 / 3.0 ** t,
            pl_ratio=None if t == epochs else 0.123456789 * t,
            seconds=0.01 * t,
        )
        for t in range(1, epochs + 1)
    ]
    return TrainState(params=np.zeros(3), initial_params=np.zeros(3), initial_loss=0.2, epoch=epochs, history=history)


def _report(epochs: int = 2) -> RunReport:
    bound = theory.aggregate_bound(
        BoundInputs(power=2.0, samples=100, channel_norms=[1.0, 1.0, 1.0], unitary_norm=1.0, qubits=8, c1=1.0),
    )
    return RunReport(
        name="unit",
        model_kind="ttn-vqc",
        qubits=8,
        train_size=100,
        test_size=20,
        epochs=epochs,
        final_train_mae=0.05,
        final_test_mae=0.07,
        param_count=56,
        param_bytes=448,
        channel_norms=[1.0, 1.0, 1.0],
        unitary_norm=1.0,
        dataset_power=2.0,
        theory=bound,
        history_rows=epochs,
        config={"seed": 0, "model": {"kind": "ttn-vqc"}},
        generated_at=datetime(2024, 1, 1, tzinfo=timezone.utc),
    )


def _rewrite_meta(path, **changes) -> None:
    with np.load(path) as archive:
        entries = {name: archive[name] for name in archive.files}
    meta = orjson.loads(entries["meta"].tobytes())
    meta.update(changes)
    entries["meta"] = np.frombuffer(orjson.dumps(meta), dtype=np.uint8)
    with path.open("wb") as fh:
        np.savez(fh, **entries)


# ── Контрольные точки ───────────────────────────────────


def test_checkpoint_roundtrip_ttn(tmp_path, small_model, small_inputs):
    """TTN-VQC: после загрузки предсказания совпадают побитно, extra сохраняется."""
    repo = CheckpointRepository()
    path = repo.save(small_model, tmp_path / "run" / "checkpoint.npz", extra={"epochs": 3})
    loaded, meta = repo.load(path)
    np.testing.assert_array_equal(network.predict(loaded, small_inputs), network.predict(small_model, small_inputs))
    np.testing.assert_array_equal(network.flatten_params(loaded), network.flatten_params(small_model))
    assert meta["format"] == CHECKPOINT_FORMAT
    assert meta["kind"] == "ttn-vqc"
    assert meta["extra"] == {"epochs": 3}


def test_checkpoint_roundtrip_pca(tmp_path, rng):
    """PCA-VQC: проекция, масштаб и топология сохраняются."""
    train = rng.uniform(size=(20, 16))
    model = network.build_pca_vqc(
        train, num_qubits=3, num_blocks=2, output_dim=4, seed=5,
        topology=Topology.RING, block_order=BlockOrder.ROTATE_FIRST,
    )
    repo = CheckpointRepository()
    loaded, meta = repo.load(repo.save(model, tmp_path / "pca.npz"))
    assert loaded.topology is Topology.RING
    assert loaded.block_order is BlockOrder.ROTATE_FIRST
    assert meta["seed"] == 5
    np.testing.assert_array_equal(network.predict(loaded, train), network.predict(model, train))


def test_checkpoint_rejects_foreign_format(tmp_path, small_model):
    """Чужой формат — CheckpointFormatError."""
    path = CheckpointRepository().save(small_model, tmp_path / "c.npz")
    _rewrite_meta(path, format="something-else")
    with pytest.raises(CheckpointFormatError):
        CheckpointRepository().load(path)


def test_checkpoint_rejects_unknown_version(tmp_path, small_model):
    """Неизвестная версия — CheckpointFormatError."""
    path = CheckpointRepository().save(small_model, tmp_path / "c.npz")
    _rewrite_meta(path, version=99)
    with pytest.raises(CheckpointFormatError):
        CheckpointRepository().load(path)


def test_checkpoint_rejects_garbage(tmp_path):
    """Файл не является архивом — CheckpointFormatError."""
    path = tmp_path / "garbage.npz"
    path.write_bytes(b"not an archive")
    with pytest.raises(CheckpointFormatError):
        CheckpointRepository().load(path)


# ── История ─────────────────────────────────────────────


def test_history_header_only(tmp_path):
    """Ноль эпох — только строка заголовка."""
    path = HistoryRepository().write(_state(0), tmp_path / "history.csv")
    assert path.read_bytes() == (",".join(HISTORY_COLUMNS) + "\n").encode()
    assert HistoryRepository().read(path) == []


def test_history_roundtrip(tmp_path):
    """Записи читаются обратно без потерь; строки завершаются LF."""
    state = _state(4)
    path = HistoryRepository().write(state, tmp_path / "history.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.count(b"\n") == 5
    assert HistoryRepository().read(path) == state.history


# ── Отчёты ──────────────────────────────────────────────


def test_dump_json_is_canonical():
    """Ключи отсортированы, отступ 2, завершающий LF."""
    raw = dump_json({"b": 1, "a": {"d": 2, "c": 3}})
    assert raw == b'{\n  "a": {\n    "c": 3,\n    "d": 2\n  },\n  "b": 1\n}\n'


def test_report_roundtrip(tmp_path):
    """report.json читается в равный RunReport."""
    repo = ReportRepository()
    report = _report()
    path = repo.write_report(report, tmp_path / "out" / "report.json")
    assert repo.read_report(path) == report
    assert path.read_bytes() == dump_json(report)


def test_report_history_rows_must_match():
    """history_rows ≠ epochs — ошибка валидации."""
    with pytest.raises(ValueError):
        RunReport.model_validate(_report().model_dump() | {"history_rows": 3})


def test_sweep_roundtrip(tmp_path):
    """Сводная таблица: отсутствующие значения — пустые ячейки, чтение восстанавливает None."""
    rows = [
        SweepRow(axis="shots", value="100", model_kind="ttn-vqc", qubits=4, shots=100, train_size=50,
                 noise="clean", rmse=0.05),
        SweepRow(axis="shots", value="inf", model_kind="ttn-vqc", qubits=4, train_size=50,
                 noise="clean", train_mae=0.01, test_mae=0.02),
    ]
    repo = ReportRepository()
    path = repo.write_sweep(rows, tmp_path / "sweep.csv")
    assert path.read_text(encoding="utf-8").splitlines()[0] == ",".join(SweepRow.model_fields)
    assert repo.read_sweep(path) == rows


# ── Кэш данных ──────────────────────────────────────────


def test_dataset_cache_roundtrip(tmp_path, rng):
    """Входы и цели восстанавливаются побитно."""
    dataset = RegressionDataset(rng.normal(size=(7, 5)), rng.normal(size=(7, 2)))
    repo = DatasetCacheRepository()
    loaded = repo.read(repo.write(dataset, tmp_path / "cache.bin"))
    np.testing.assert_array_equal(loaded.inputs, dataset.inputs)
    np.testing.assert_array_equal(loaded.targets, dataset.targets)
    assert (tmp_path / "cache.bin").read_bytes()[:4] == b"QRDS"


def test_dataset_cache_rejects_bad_files(tmp_path, rng):
    """Чужая сигнатура или усечённые данные — DataError."""
    repo = DatasetCacheRepository()
    path = repo.write(RegressionDataset(rng.normal(size=(3, 2)), rng.normal(size=(3, 1))), tmp_path / "c.bin")
    raw = path.read_bytes()
    (tmp_path / "magic.bin").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(DataError):
        repo.read(tmp_path / "magic.bin")
    with pytest.raises(DataError):
        repo.read(tmp_path / "short.bin")


def test_cache_key_is_canonical():
    """Ключ не зависит от порядка полей и меняется вместе с параметрами."""
    first = cache_key({"seed": 1, "data": {"n_train": 20, "source": "synthetic"}})
    reordered = cache_key({"data": {"source": "synthetic", "n_train": 20}, "seed": 1})
    assert first == reordered
    assert len(first) == 16
    assert cache_key({"seed": 2, "data": {"n_train": 20, "source": "synthetic"}}) != first
