"""Интерфейс командной строки `qregress`."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from qregress import __version__
from qregress.config import Settings, get_settings, load_experiment_config
from qregress.exceptions import EXIT_OK, EXIT_USAGE, ConfigError, report_error
from qregress.repositories import dump_json
from qregress.schemas.experiment import ExperimentConfig
from qregress.services.experiment import ExperimentService, SweepAxis

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Парсер, который сообщает об ошибке использования исключением, а не выходом."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: ошибка: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qregress", description="Регрессия TTN-VQC: обучение, оценка, теоретические границы")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    # ── Общие флаги ──────────────────────────────────────
    def with_config(sub: argparse.ArgumentParser) -> argparse.ArgumentParser:
        sub.add_argument("--config", type=Path, required=True, help="файл конфигурации key = value")
        sub.add_argument("--seed", type=int, default=None, help="переопределить seed конфигурации")
        return sub

    train = with_config(commands.add_parser("train", help="один запуск: history.csv и report.json"))
    train.add_argument("--out", type=Path, default=None, help="каталог результатов")

    evaluate = with_config(commands.add_parser("eval", help="MAE контрольной точки на тестовых условиях"))
    evaluate.add_argument("--checkpoint", type=Path, required=True)
    evaluate.add_argument(
        "--noise",
        action="append",
        default=None,
        help="условие шума вида gaussian@8 (можно несколько раз)",
    )

    sweep = with_config(commands.add_parser("sweep", help="развёртка по одной оси"))
    sweep.add_argument("--axis", choices=[a.value for a in SweepAxis], required=True)
    sweep.add_argument("--out", type=Path, default=None)

    theory = with_config(commands.add_parser("theory-report", help="агрегированная оценка ошибки"))
    theory.add_argument("--checkpoint", type=Path, required=True)
    theory.add_argument("--out", type=Path, default=None, help="файл JSON (по умолчанию stdout)")

    commands.add_parser("fixture-check", help="разобрать встроенный IDX-фикстур")
    return parser


def configure_logging(settings: Settings) -> None:
    logging.basicConfig(level=settings.log_level.upper(), format=LOG_FORMAT, stream=sys.stderr)


def _updated(config: ExperimentConfig, **sections: object) -> ExperimentConfig:
    try:
        return config.with_updates(**sections)  # type: ignore[arg-type]
    except (ValidationError, ValueError) as exc:
        raise ConfigError(f"Недопустимое значение в аргументах командной строки: {exc}") from exc


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_experiment_config(args.config)
    if args.seed is not None:
        config = _updated(config, seed=args.seed)
    return config


def _emit(payload: object) -> None:
    sys.stdout.write(dump_json(payload).decode("utf-8"))  # type: ignore[arg-type]


def dispatch(argv: Sequence[str] | None = None, service: ExperimentService | None = None) -> int:
    """Разобрать аргументы и выполнить подкоманду.

    Returns:
        0 — успех, 1 — ошибка выполнения, 2 — ошибка использования или конфигурации.
    """
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE

    try:
        settings = get_settings()
    except ValidationError as exc:
        return report_error(ConfigError(f"Некорректные переменные окружения QREGRESS_*: {exc}"))
    configure_logging(settings)
    service = service or ExperimentService(settings=settings)
    try:
        if args.command == "fixture-check":
            _emit(service.fixture_check())
            return EXIT_OK

        config = _load_config(args)
        if args.command == "train":
            out = args.out or settings.output_dir / config.name
            report = service.run_experiment(config, out)
            print(f"{out}: train MAE {report.final_train_mae:.6f}, test MAE {report.final_test_mae}")
        elif args.command == "eval":
            if args.noise:
                config = _updated(config, data={"test_noises": args.noise})
            conditions = service.evaluate_checkpoint(args.checkpoint, config)
            _emit({"conditions": [c.model_dump(mode="json") for c in conditions]})
        elif args.command == "sweep":
            out = args.out or settings.output_dir / f"{config.name}-sweep-{args.axis}"
            rows = service.sweep(config, args.axis, out)
            print(f"{out}: строк развёртки {len(rows)}")
        else:
            report = service.theory_from_checkpoint(args.checkpoint, config)
            if args.out is not None:
                args.out.parent.mkdir(parents=True, exist_ok=True)
                args.out.write_bytes(dump_json(report))
            else:
                _emit(report)
    except Exception as exc:
        return report_error(exc)
    return EXIT_OK


def main() -> int:
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
