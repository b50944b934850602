"""Тесты загрузки конфигурации эксперимента и настроек процесса."""

from pathlib import Path

import pytest

from qregress.config import Settings, build_experiment_config, load_experiment_config, parse_config_lines
from qregress.exceptions import EXIT_USAGE, ConfigError
from qregress.models.network import ModelKind
from qregress.schemas.experiment import DataSource, NoiseKind, OptimizerKind

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


# ── Фикстуры ────────────────────────────────────────────


def _config(*lines: str):
    return build_experiment_config(parse_config_lines(lines))


# ── Разбор строк ────────────────────────────────────────


def test_parse_nested_sections():
    """Ключи с точками раскладываются по секциям, комментарии и пустые строки пропускаются."""
    tree = parse_config_lines(["# комментарий", "", "name = demo", "model.blocks = 3", "  data.n_train=10  "])
    assert tree == {"name": "demo", "model": {"blocks": "3"}, "data": {"n_train": "10"}}


def test_parse_lists():
    """Значения через запятую — список; списочный ключ с одним значением — тоже список."""
    tree = parse_config_lines(["model.dims = 7, 16 ,7", "model.factors = 4"])
    assert tree["model"]["dims"] == ["7", "16", "7"]
    assert tree["model"]["factors"] == ["4"]


@pytest.mark.parametrize(
    "lines",
    [
        ["name demo"],
        [" = 3"],
        ["seed = 1", "seed = 2"],
        ["model = 1", "model.blocks = 2"],
    ],
)
def test_parse_errors(lines):
    """Строка без '=', пустой или повторный ключ, ключ поверх значения — ConfigError."""
    with pytest.raises(ConfigError):
        parse_config_lines(lines)


# ── Валидация ───────────────────────────────────────────


def test_defaults():
    """Пустой файл — 8-кубитная конфигурация TTN-VQC с Adam η = 0.01."""
    config = _config()
    assert config.model.kind is ModelKind.TTN_VQC
    assert config.model.qubits == 8
    assert config.optimizer.kind is OptimizerKind.ADAM
    assert config.optimizer.lr == 0.01
    assert [spec.label for spec in config.data.test_noises] == ["gaussian-15dB", "gaussian-8dB", "gaussian-12dB"]


def test_unknown_key():
    """Неизвестный ключ — ConfigError с кодом выхода 2 и именем ключа."""
    with pytest.raises(ConfigError) as excinfo:
        _config("model.colour = red")
    assert excinfo.value.exit_code == EXIT_USAGE
    assert "model.colour" in excinfo.value.detail


def test_invalid_value_names_key():
    """Недопустимое значение — ConfigError с именем ключа."""
    with pytest.raises(ConfigError) as excinfo:
        _config("optimizer.batch_size = 0")
    assert "optimizer.batch_size" in excinfo.value.detail


def test_factor_product_checked():
    """∏ factors ≠ qubits — ConfigError."""
    with pytest.raises(ConfigError):
        _config("model.qubits = 6", "model.factors = 2, 2, 2")


def test_gd_default_learning_rate():
    """Для gd без явного шага η = 1.0."""
    assert _config("optimizer.kind = gd").optimizer.lr == 1.0


def test_unit_lr_adam():
    """unit_lr_adam включает Adam с η = 1 поверх других настроек."""
    config = _config("optimizer.kind = gd", "optimizer.learning_rate = 0.3", "optimizer.unit_lr_adam = true")
    assert config.optimizer.kind is OptimizerKind.ADAM
    assert config.optimizer.lr == 1.0


def test_noise_entries():
    """Шум обучения и тестовые условия разбираются из записей kind@snr."""
    config = _config("data.train_noise = none", "data.test_noises = laplacian@8")
    assert config.data.train_noise.is_clean
    assert config.data.test_noises[0].kind is NoiseKind.LAPLACIAN
    assert config.data.test_noises[0].snr_db == 8.0


def test_with_updates_revalidates():
    """with_updates меняет поля секции и валидирует результат."""
    config = _config()
    updated = config.with_updates(data={"n_train": 10}, seed=5)
    assert updated.data.n_train == 10
    assert updated.seed == 5
    assert updated.data.test_noises == config.data.test_noises
    with pytest.raises(ValueError):
        config.with_updates(data={"n_train": 0})


# ── Файлы ───────────────────────────────────────────────


@pytest.mark.parametrize("name", ["mnist-8q.conf", "mnist-12q.conf", "pca-8q.conf", "synthetic.conf"])
def test_shipped_configs_are_valid(name):
    """Поставляемые конфигурации проходят валидацию."""
    config = load_experiment_config(CONFIG_DIR / name)
    assert config.name


def test_synthetic_config():
    """Синтетическая конфигурация: 4 кубита, gd, без шума обучения."""
    config = load_experiment_config(CONFIG_DIR / "synthetic.conf")
    assert config.data.source is DataSource.SYNTHETIC
    assert config.model.factors == [2, 2]
    assert config.optimizer.lr == 0.5
    assert config.data.train_noise.is_clean


def test_missing_file(tmp_path):
    """Отсутствующий файл — ConfigError."""
    with pytest.raises(ConfigError):
        load_experiment_config(tmp_path / "missing.conf")


def test_settings_from_environment(monkeypatch, tmp_path):
    """Настройки процесса читаются из переменных QREGRESS_*."""
    monkeypatch.setenv("QREGRESS_THREADS", "3")
    monkeypatch.setenv("QREGRESS_OUTPUT_DIR", str(tmp_path))
    monkeypatch.delenv("QREGRESS_MNIST_DIR", raising=False)
    settings = Settings(_env_file=None)
    assert settings.threads == 3
    assert settings.output_dir == tmp_path
    assert settings.mnist_dir is None
