"""Слой репозиториев: файлы контрольных точек, историй, отчётов и кэша данных."""

from qregress.repositories.checkpoint import CheckpointRepository
from qregress.repositories.dataset_cache import DatasetCacheRepository, cache_key
from qregress.repositories.fixtures import fixture_paths
from qregress.repositories.history import HISTORY_COLUMNS, HistoryRepository
from qregress.repositories.report import ReportRepository, dump_json

__all__ = [
    "HISTORY_COLUMNS",
    "CheckpointRepository",
    "DatasetCacheRepository",
    "HistoryRepository",
    "ReportRepository",
    "cache_key",
    "dump_json",
    "fixture_paths",
]
