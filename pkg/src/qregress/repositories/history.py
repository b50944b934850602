"""Репозиторий истории обучения (CSV)."""

from __future__ import annotations

import csv
from pathlib import Path

from qregress.models.training import TrainState
from qregress.schemas.report import EpochRecord

HISTORY_COLUMNS = ("epoch", "train_mae", "test_mae", "grad_norm", "pl_ratio", "seconds")


def _cell(value: float | int | None) -> str:
    # repr даёт кратчайшую запись, которая читается обратно без потерь
    return "" if value is None else repr(value)


class HistoryRepository:
    """Запись и чтение history.csv: одна строка на эпоху, UTF-8, окончания строк LF."""

    def write(self, state: TrainState, path: str | Path) -> Path:
        """Записать историю; для состояния без эпох — только заголовок.

        Raises:
            OSError: Путь недоступен для записи.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(HISTORY_COLUMNS)
            for record in state.history:
                writer.writerow([_cell(getattr(record, column)) for column in HISTORY_COLUMNS])
        return path

    def read(self, path: str | Path) -> list[EpochRecord]:
        with Path(path).open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            return [
                EpochRecord(**{key: (value if value != "" else None) for key, value in row.items()})
                for row in reader
            ]
