"""Тесты интерфейса командной строки: разбор аргументов, коды выхода, вывод."""

import json
from unittest.mock import MagicMock

import pytest

from qregress.exceptions import EXIT_OK, EXIT_RUNTIME_FAILURE, EXIT_USAGE, ExperimentStageError
from qregress.main import dispatch
from qregress.schemas.report import BoundInputs, ConditionResult
from qregress.services import theory
from qregress.services.experiment import ExperimentService


# ── Фикстуры ────────────────────────────────────────────


def _write_config(tmp_path, *extra: str):
    path = tmp_path / "run.conf"
    path.write_text("\n".join(["name = cli", "data.source = synthetic", *extra]) + "\n", encoding="utf-8")
    return path


def _make_service() -> MagicMock:
    """Замоканный ExperimentService с правдоподобными результатами."""
    service = MagicMock(spec=ExperimentService)
    service.run_experiment.return_value = MagicMock(final_train_mae=0.125, final_test_mae=0.25)
    service.evaluate_checkpoint.return_value = [
        ConditionResult(label="clean", noise="none", test_mae=0.1, dataset_power=1.0),
    ]
    service.theory_from_checkpoint.return_value = theory.aggregate_bound(
        BoundInputs(power=2.0, samples=100, channel_norms=[1.0, 1.0, 1.0], unitary_norm=1.0, qubits=8, c1=1.0),
    )
    service.sweep.return_value = []
    return service


# ── Ошибки использования ────────────────────────────────


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["train"],
        ["sweep", "--config", "x.conf", "--axis", "depth"],
    ],
)
def test_usage_errors(argv):
    """Неизвестная подкоманда, нет обязательного флага, недопустимая ось — код 2."""
    service = _make_service()
    assert dispatch(argv, service=service) == EXIT_USAGE
    service.run_experiment.assert_not_called()


def test_missing_config_file(tmp_path, capsys):
    """Отсутствующий файл конфигурации — код 2 и сообщение в stderr."""
    code = dispatch(["train", "--config", str(tmp_path / "none.conf")], service=_make_service())
    assert code == EXIT_USAGE
    assert "ошибка" in capsys.readouterr().err


def test_invalid_config_key(tmp_path):
    """Неизвестный ключ в файле — код 2."""
    path = _write_config(tmp_path, "model.colour = red")
    assert dispatch(["train", "--config", str(path)], service=_make_service()) == EXIT_USAGE


def test_invalid_environment_settings(monkeypatch, capsys):
    """QREGRESS_THREADS = 0 — ошибка конфигурации с кодом 2, подкоманда не выполняется."""
    monkeypatch.setenv("QREGRESS_THREADS", "0")
    service = _make_service()
    assert dispatch(["fixture-check"], service=service) == EXIT_USAGE
    assert "QREGRESS_" in capsys.readouterr().err
    service.fixture_check.assert_not_called()


# ── Подкоманды ──────────────────────────────────────────


def test_fixture_check(capsys):
    """fixture-check разбирает встроенный фикстур и печатает JSON."""
    assert dispatch(["fixture-check"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["images"] == 10
    assert payload["features"] == 784
    assert payload["pixel_sum"] == 993936


def test_train_passes_seed_and_out(tmp_path, capsys):
    """train: --seed переопределяет зерно, --out передаётся сервису."""
    service = _make_service()
    path = _write_config(tmp_path)
    code = dispatch(["train", "--config", str(path), "--seed", "7", "--out", str(tmp_path / "out")], service=service)
    assert code == EXIT_OK
    config, out = service.run_experiment.call_args.args
    assert config.seed == 7
    assert config.name == "cli"
    assert out == tmp_path / "out"
    assert "0.125000" in capsys.readouterr().out


def test_eval_noise_override(tmp_path, capsys):
    """eval: флаги --noise заменяют тестовые условия конфигурации."""
    service = _make_service()
    path = _write_config(tmp_path)
    argv = ["eval", "--config", str(path), "--checkpoint", "c.npz", "--noise", "gaussian@8", "--noise", "laplacian@12"]
    assert dispatch(argv, service=service) == EXIT_OK
    _, config = service.evaluate_checkpoint.call_args.args
    assert [spec.label for spec in config.data.test_noises] == ["gaussian-8dB", "laplacian-12dB"]
    payload = json.loads(capsys.readouterr().out)
    assert payload["conditions"][0]["label"] == "clean"


def test_eval_bad_noise(tmp_path):
    """Некорректная запись шума в --noise — код 2."""
    path = _write_config(tmp_path)
    argv = ["eval", "--config", str(path), "--checkpoint", "c.npz", "--noise", "pink"]
    assert dispatch(argv, service=_make_service()) == EXIT_USAGE


def test_theory_report_to_file(tmp_path):
    """theory-report --out пишет JSON с агрегированной оценкой."""
    service = _make_service()
    path = _write_config(tmp_path)
    target = tmp_path / "reports" / "theory.json"
    argv = ["theory-report", "--config", str(path), "--checkpoint", "c.npz", "--out", str(target)]
    assert dispatch(argv, service=service) == EXIT_OK
    payload = json.loads(target.read_text(encoding="utf-8"))
    assert payload["aggregate"] == pytest.approx(1.44637, abs=1e-5)


def test_sweep_axis(tmp_path):
    """sweep передаёт ось сервису."""
    service = _make_service()
    path = _write_config(tmp_path)
    argv = ["sweep", "--config", str(path), "--axis", "train-size", "--out", str(tmp_path / "s")]
    assert dispatch(argv, service=service) == EXIT_OK
    assert service.sweep.call_args.args[1] == "train-size"


# ── Ошибки выполнения ───────────────────────────────────


def test_stage_failure_exit_code(tmp_path, capsys):
    """Сбой стадии — код 1 и имя стадии в сообщении."""
    service = _make_service()
    service.run_experiment.side_effect = ExperimentStageError("train", RuntimeError("boom"))
    assert dispatch(["train", "--config", str(_write_config(tmp_path))], service=service) == EXIT_RUNTIME_FAILURE
    assert "train" in capsys.readouterr().err


def test_unexpected_failure_exit_code(tmp_path):
    """Непредвиденное исключение — код 1."""
    service = _make_service()
    service.sweep.side_effect = KeyError("x")
    argv = ["sweep", "--config", str(_write_config(tmp_path)), "--axis", "snr"]
    assert dispatch(argv, service=service) == EXIT_RUNTIME_FAILURE
