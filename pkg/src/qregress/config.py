"""Конфигурация: настройки процесса из окружения и загрузка файла эксперимента."""

from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path
from typing import Any

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from qregress.exceptions import ConfigError
from qregress.schemas.experiment import ExperimentConfig

# Ключи, значение которых всегда список, даже если в файле одно значение
_LIST_KEYS = {
    "model.factors",
    "model.dims",
    "model.ranks",
    "data.test_noises",
    "theory.shots",
    "sweep.qubit_factors",
    "sweep.shots",
    "sweep.train_sizes",
    "sweep.snr",
}


class Settings(BaseSettings):
    """Настройки процесса.

    Значения читаются из переменных окружения с префиксом `QREGRESS_`
    или из файла `.env`.
    """

    model_config = SettingsConfigDict(
        env_prefix="QREGRESS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ── Исполнение ───────────────────────────────────────
    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"

    # ── Файлы ────────────────────────────────────────────
    output_dir: Path = Path("runs")
    mnist_dir: Path | None = None
    dataset_cache: bool = False


def get_settings() -> Settings:
    """Создать и вернуть экземпляр настроек."""
    return Settings()


def _parse_value(key: str, raw: str) -> Any:
    if key in _LIST_KEYS or "," in raw:
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw


def parse_config_lines(lines: Iterable[str], source: str = "<config>") -> dict[str, Any]:
    """Разобрать строки `секция.ключ = значение` во вложенный словарь.

    Пустые строки и строки, начинающиеся с `#`, пропускаются.

    Raises:
        ConfigError: Строка без `=`, пустой или повторяющийся ключ.
    """
    tree: dict[str, Any] = {}
    seen: set[str] = set()
    for number, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        key, sep, raw = text.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{number}: ожидалась запись 'ключ = значение'")
        if key in seen:
            raise ConfigError(f"{source}:{number}: ключ '{key}' задан повторно")
        seen.add(key)

        node = tree
        *sections, leaf = key.split(".")
        for section in sections:
            child = node.setdefault(section, {})
            if not isinstance(child, dict):
                raise ConfigError(f"{source}:{number}: '{section}' не является секцией")
            node = child
        node[leaf] = _parse_value(key, raw.strip())
    return tree


def build_experiment_config(tree: dict[str, Any], source: str = "<config>") -> ExperimentConfig:
    """Провалидировать вложенный словарь как ExperimentConfig.

    Raises:
        ConfigError: Неизвестный ключ или недопустимое значение (с именем ключа).
    """
    try:
        return ExperimentConfig.model_validate(tree)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "<root>"
        if first["type"] == "extra_forbidden":
            raise ConfigError(f"{source}: неизвестный ключ '{key}'") from exc
        raise ConfigError(f"{source}: ключ '{key}': {first['msg']}") from exc


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Прочитать файл конфигурации эксперимента.

    Raises:
        ConfigError: Файл не найден или содержит ошибки.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Не удаётся прочитать конфигурацию {path}: {exc}") from exc
    return build_experiment_config(parse_config_lines(text.splitlines(), str(path)), str(path))
