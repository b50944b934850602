"""Репозиторий отчётов (JSON) и сводных таблиц развёрток (CSV)."""

from __future__ import annotations

import csv
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import orjson
from pydantic import BaseModel

from qregress.schemas.report import RunReport, SweepRow

JSON_OPTIONS = (
    orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_NON_STR_KEYS | orjson.OPT_SERIALIZE_NUMPY
)


def dump_json(payload: BaseModel | dict[str, Any]) -> bytes:
    """Детерминированная сериализация: сортированные ключи, отступ 2, завершающий LF."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return orjson.dumps(payload, option=JSON_OPTIONS) + b"\n"


class ReportRepository:
    """Запись report.json, сводок и CSV развёрток."""

    def write_report(self, report: RunReport, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(dump_json(report))
        return path

    def read_report(self, path: str | Path) -> RunReport:
        return RunReport.model_validate(orjson.loads(Path(path).read_bytes()))

    def write_json(self, payload: BaseModel | dict[str, Any], path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(dump_json(payload))
        return path

    def write_sweep(self, rows: Sequence[SweepRow], path: str | Path) -> Path:
        """Сводная таблица развёртки; пустые ячейки для отсутствующих значений."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        columns = list(SweepRow.model_fields)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                values = row.model_dump()
                writer.writerow(["" if values[c] is None else values[c] for c in columns])
        return path

    def read_sweep(self, path: str | Path) -> list[SweepRow]:
        with Path(path).open(encoding="utf-8", newline="") as fh:
            return [
                SweepRow(**{key: (value if value != "" else None) for key, value in row.items()})
                for row in csv.DictReader(fh)
            ]
