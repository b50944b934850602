"""Пользовательские исключения и сопоставление их с кодами выхода CLI."""

from __future__ import annotations

import logging
import sys
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from qregress.models.training import TrainState

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME_FAILURE = 1
EXIT_USAGE = 2


class QRegressError(Exception):
    """Базовое исключение библиотеки.

    Attributes:
        exit_code: Код выхода CLI для этой ошибки.
    """

    exit_code: int = EXIT_RUNTIME_FAILURE

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail


# ── Формы, индексы, области определения ─────────────────


class ShapeError(QRegressError, ValueError):
    """Несогласованные размерности массивов или конфигурации."""


class BoundsError(QRegressError, IndexError):
    """Индекс (тензора, кубита) вне допустимого диапазона."""

    def __init__(self, name: str, value: int, upper: int) -> None:
        super().__init__(f"{name}={value} вне диапазона [0, {upper})")


class DomainError(QRegressError, ValueError):
    """Аргумент вне области определения операции."""


class DataError(QRegressError, ValueError):
    """Некорректные данные (NaN, Inf и т.п.)."""


class NotATPEStateError(QRegressError, ValueError):
    """Состояние не является произведением однокубитных TPE-состояний."""

    def __init__(self, deviation: float) -> None:
        super().__init__(
            f"Состояние не является TPE-состоянием: отклонение {deviation:.3e}",
        )
        self.deviation = deviation


class NumericalError(QRegressError, ArithmeticError):
    """Численный метод не сошёлся."""

    def __init__(self, method: str, iterations: int | None = None, detail: str | None = None) -> None:
        message = f"{method}: нет сходимости"
        if iterations is not None:
            message += f" за {iterations} итераций"
        if detail:
            message += f" ({detail})"
        super().__init__(message)
        self.method = method
        self.iterations = iterations


# ── Теория и обучение ───────────────────────────────────


class FitError(QRegressError, ValueError):
    """Вырожденная матрица плана при подгонке констант масштабирования."""


class MissingFitError(QRegressError):
    """Для агрегированной оценки не хватает подогнанных констант c₁, c₂."""

    def __init__(self, missing: list[str]) -> None:
        super().__init__(
            "Не заданы константы " + ", ".join(missing) + " — сначала выполните scaling_fit",
        )
        self.missing = missing


class UnsupportedModeError(QRegressError):
    """Режим измерения не поддерживается операцией."""

    def __init__(self, operation: str, mode: str) -> None:
        super().__init__(f"Операция {operation} не поддерживает режим '{mode}'")


class TrainingAbortedError(QRegressError):
    """Обучение остановлено из-за нечисловой функции потерь.

    Attributes:
        state: Диагностический снимок состояния на момент остановки.
    """

    def __init__(self, epoch: int, state: TrainState) -> None:
        super().__init__(f"Нечисловое значение функции потерь на эпохе {epoch}")
        self.epoch = epoch
        self.state = state


# ── Данные и файлы ──────────────────────────────────────


class IdxFormatError(QRegressError, ValueError):
    """Нарушение формата IDX-файла."""

    def __init__(self, path: str, field: str, detail: str) -> None:
        super().__init__(f"{path}: поле '{field}': {detail}")
        self.field = field


class DatasetSizeError(QRegressError, ValueError):
    """Недостаточно образцов для запрошенной выборки."""

    def __init__(self, requested: int, available: int) -> None:
        super().__init__(f"Запрошено {requested} образцов, доступно {available}")


class CheckpointFormatError(QRegressError):
    """Файл контрольной точки повреждён или имеет неизвестную версию."""


class ConfigError(QRegressError):
    """Ошибка конфигурации эксперимента."""

    exit_code = EXIT_USAGE


class ExperimentStageError(QRegressError):
    """Сбой одной из стадий эксперимента.

    Attributes:
        stage: Имя стадии (data, init, train, evaluate, theory).
    """

    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"Стадия '{stage}' завершилась ошибкой: {cause}")
        self.stage = stage
        self.exit_code = getattr(cause, "exit_code", EXIT_RUNTIME_FAILURE)


# ── Обработка на уровне CLI ─────────────────────────────


def exit_code_for(exc: BaseException) -> int:
    """Вернуть код выхода CLI для исключения."""
    if isinstance(exc, QRegressError):
        return exc.exit_code
    return EXIT_RUNTIME_FAILURE


def report_error(exc: BaseException, stream: Any = None) -> int:
    """Вывести ошибку в поток ошибок и вернуть код выхода.

    Ожидаемые ошибки печатаются одной строкой, непредвиденные
    логируются вместе с трассировкой.
    """
    stream = stream or sys.stderr
    if isinstance(exc, QRegressError):
        print(f"ошибка: {exc.detail}", file=stream)
    else:
        logger.exception("Непредвиденная ошибка: %s", exc)
        print("ошибка: внутренняя ошибка, подробности в журнале", file=stream)
    return exit_code_for(exc)
