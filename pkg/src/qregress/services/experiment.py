"""Оркестрация экспериментов: данные → инициализация → обучение → оценка → теория.

Сервис собирает RunReport, пишет history.csv, report.json и контрольную
точку через репозитории, выполняет развёртки по осям qubits, shots,
train-size и snr.
"""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from qregress.config import Settings, get_settings
from qregress.exceptions import (
    ConfigError,
    DataError,
    DomainError,
    ExperimentStageError,
    FitError,
    TrainingAbortedError,
)
from qregress.models.dataset import RegressionDataset
from qregress.models.network import MeasurementKind, MeasurementMode, Model, ModelKind, PCAVQCModel
from qregress.models.training import TrainState
from qregress.repositories import (
    CheckpointRepository,
    DatasetCacheRepository,
    HistoryRepository,
    ReportRepository,
    cache_key,
    fixture_paths,
)
from qregress.repositories.fixtures import FIXTURE_COUNT, FIXTURE_PIXEL_SUM
from qregress.schemas.experiment import DataConfig, DataSource, ExperimentConfig, NoiseSpec, NuMode, ReadoutKind
from qregress.schemas.report import BoundInputs, ConditionResult, PLInitReport, RunReport, SweepRow, TheoryReport
from qregress.services import data as data_service
from qregress.services import network, optim, theory

logger = logging.getLogger(__name__)

# Опубликованные значения MAE полномасштабных запусков; в отчёте только как справка
REFERENCE_RESULTS: dict[str, float] = {
    "ttn_vqc_8q_test_mae": 0.0597,
    "ttn_vqc_12q_test_mae": 0.0156,
    "pca_vqc_8q_test_mae": 0.3847,
    "pca_vqc_12q_test_mae": 0.2939,
    "ttn_vqc_gaussian_8db_test_mae": 0.1703,
    "ttn_vqc_gaussian_12db_test_mae": 0.1078,
    "ttn_vqc_laplacian_8db_test_mae": 0.1684,
    "ttn_vqc_laplacian_12db_test_mae": 0.1327,
    "ttn_vqc_train_20000_test_mae": 0.2941,
    "ttn_vqc_train_40000_test_mae": 0.1853,
    "ttn_vqc_train_60000_test_mae": 0.1078,
}


class SweepAxis(str, enum.Enum):
    QUBITS = "qubits"
    SHOTS = "shots"
    TRAIN_SIZE = "train-size"
    SNR = "snr"


@dataclass
class DataBundle:
    """Обучающая выборка и тестовые условия; условие 0 — чистый тест."""

    train: RegressionDataset
    conditions: list[tuple[NoiseSpec, RegressionDataset]]

    @property
    def history_condition(self) -> int:
        """Условие, по которому пишется test_mae в истории: первое зашумлённое, иначе чистое."""
        return 1 if len(self.conditions) > 1 else 0


@dataclass
class RunOutcome:
    """Результат одного запуска вместе с обученной моделью."""

    report: RunReport
    model: Model
    state: TrainState
    data: DataBundle


def measurement_mode(config: ExperimentConfig) -> MeasurementMode:
    if config.measurement.mode is MeasurementKind.SHOTS:
        return MeasurementMode.with_shots(config.measurement.shots, config.measurement.seed)
    return MeasurementMode.exact()


def parse_factors(text: str) -> list[int]:
    """Разобрать запись вида `2x3x2` в список множителей U_k."""
    try:
        factors = [int(part) for part in text.lower().split("x")]
    except ValueError as exc:
        raise ConfigError(f"Некорректная запись множителей кубитов '{text}'") from exc
    if any(f < 1 for f in factors):
        raise ConfigError(f"Множители кубитов должны быть положительными: '{text}'")
    return factors


class ExperimentService:
    """Исполнитель экспериментов.

    Attributes:
        _settings: Настройки процесса (число потоков, каталог вывода).
        _history_repo: Репозиторий истории обучения.
        _report_repo: Репозиторий отчётов.
        _checkpoint_repo: Репозиторий контрольных точек.
        _dataset_cache_repo: Кэш подготовленных наборов данных (при settings.dataset_cache).
        _clock: Источник времени для generated_at.
    """

    def __init__(
        self,
        settings: Settings | None = None,
        history_repo: HistoryRepository | None = None,
        report_repo: ReportRepository | None = None,
        checkpoint_repo: CheckpointRepository | None = None,
        clock: Callable[[], datetime] | None = None,
        dataset_cache_repo: DatasetCacheRepository | None = None,
    ) -> None:
        self._settings = settings or get_settings()
        self._history_repo = history_repo or HistoryRepository()
        self._report_repo = report_repo or ReportRepository()
        self._checkpoint_repo = checkpoint_repo or CheckpointRepository()
        self._clock = clock or (lambda: datetime.now(tz=timezone.utc))
        self._dataset_cache_repo = dataset_cache_repo or DatasetCacheRepository()

    @contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        logger.info("Стадия '%s'", name)
        try:
            yield
        except ExperimentStageError:
            raise
        except Exception as exc:
            logger.error("Стадия '%s' завершилась ошибкой: %s", name, exc)
            raise ExperimentStageError(name, exc) from exc

    # ── Данные ───────────────────────────────────────────

    def _mnist_sources(self, data: DataConfig) -> tuple[RegressionDataset, RegressionDataset | None]:
        if data.train_images is not None:
            train = data_service.load_mnist_idx(data.train_images, data.train_labels)
            test = data_service.load_mnist_idx(data.test_images, data.test_labels) if data.test_images else None
            return train, test
        if self._settings.mnist_dir is not None:
            return data_service.load_mnist_dir(self._settings.mnist_dir)
        raise ConfigError("Не задан data.train_images и не настроен QREGRESS_MNIST_DIR")

    @staticmethod
    def _noise(spec: NoiseSpec, data: DataConfig, index: int) -> NoiseSpec:
        return spec.model_copy(update={"seed": data.noise_seed + index, "power_scope": data.power_scope})

    @staticmethod
    def _noisy(dataset: RegressionDataset, spec: NoiseSpec) -> RegressionDataset:
        if spec.is_clean:
            return dataset
        return RegressionDataset(
            data_service.add_noise(dataset.inputs, spec),
            dataset.targets,
            {**dataset.meta, "noise": spec.label, "noise_seed": spec.seed},
        )

    def _prepare_clean(self, config: ExperimentConfig) -> tuple[RegressionDataset, RegressionDataset]:
        data = config.data
        if data.source is DataSource.SYNTHETIC:
            m = config.model
            full, _ = data_service.synthetic_dataset(
                m.dims,
                m.ranks,
                m.factors,
                data.n_train + data.n_test,
                output_dim=data.synthetic_outputs,
                num_blocks=m.blocks,
                target=data.synthetic_target,
                seed=config.seed,
            )
            return data_service.prepare_dataset(full, data.n_train, data.n_test, config.seed)
        pool, test_pool = self._mnist_sources(data)
        return data_service.prepare_dataset(pool, data.n_train, data.n_test, config.seed, test_pool)

    def _cache_payload(self, config: ExperimentConfig) -> dict[str, Any]:
        data = config.data
        payload: dict[str, Any] = {
            "seed": config.seed,
            "data": data.model_dump(
                mode="json",
                include={
                    "source",
                    "train_images",
                    "train_labels",
                    "test_images",
                    "test_labels",
                    "n_train",
                    "n_test",
                    "synthetic_target",
                    "synthetic_outputs",
                },
            ),
        }
        if data.source is DataSource.SYNTHETIC:
            payload["model"] = config.model.model_dump(mode="json", include={"dims", "ranks", "factors", "blocks"})
        elif data.train_images is None:
            payload["mnist_dir"] = str(self._settings.mnist_dir)
        return payload

    def _clean_split(self, config: ExperimentConfig) -> tuple[RegressionDataset, RegressionDataset]:
        """Чистые обучающая и тестовая выборки, через кэш при settings.dataset_cache.

        Кэш лежит в output_dir/cache; ключ строится по источнику, зерну и
        размерам выборок. Изменение самих IDX-файлов ключ не меняет.
        """
        if not self._settings.dataset_cache:
            return self._prepare_clean(config)
        key = cache_key(self._cache_payload(config))
        directory = self._settings.output_dir / "cache"
        train_path, test_path = directory / f"{key}-train.qrds", directory / f"{key}-test.qrds"
        if train_path.exists() and test_path.exists():
            logger.info("Данные из кэша %s", key)
            return self._dataset_cache_repo.read(train_path), self._dataset_cache_repo.read(test_path)
        train, test = self._prepare_clean(config)
        self._dataset_cache_repo.write(train, train_path)
        self._dataset_cache_repo.write(test, test_path)
        logger.info("Данные записаны в кэш %s", key)
        return train, test

    def load_data(self, config: ExperimentConfig) -> DataBundle:
        """Обучающая выборка с шумом обучения и набор тестовых условий.

        Условие 0 — чистый тест, далее — data.test_noises по порядку.
        Шум i-го условия берёт зерно noise_seed + i (обучение — noise_seed).

        Raises:
            ConfigError: Для MNIST не указаны файлы.
            DatasetSizeError: Образцов недостаточно.
        """
        data = config.data
        train_clean, test_clean = self._clean_split(config)

        train =self._noisy(train_clean, self._noise(data.train_noise, data, 0))
        conditions = [(NoiseSpec(), test_clean)]
        for i, spec in enumerate(data.test_noises, start=1):
            spec = self._noise(spec, data, i)
            conditions.append((spec, self._noisy(test_clean, spec)))
        logger.info(
            "Данные: обучение %d (%s), тест %d, условий %d",
            len(train),
            data.train_noise.label,
            len(test_clean),
            len(conditions),
        )
        return DataBundle(train=train, conditions=conditions)

    # ── Модель ───────────────────────────────────────────

    @staticmethod
    def model_builder(config: ExperimentConfig, train: RegressionDataset) -> Callable[[int], Model]:
        """Построитель модели по номеру попытки инициализации."""
        m = config.model
        identity = m.readout is ReadoutKind.IDENTITY
        if m.kind is ModelKind.TTN_VQC:
            def build(attempt: int) -> Model:
                return network.build_ttn_vqc(
                    m.dims,
                    m.ranks,
                    m.factors,
                    m.blocks,
                    train.output_dim,
                    seed=config.seed,
                    attempt=attempt,
                    identity_readout=identity,
                    topology=m.topology,
                    block_order=m.block_order,
                )
            return build

        fitted = network.pca_fit(train.inputs, m.qubits, seed=config.seed)

        def build_pca(attempt: int) -> Model:
            return network.build_pca_vqc(
                train.inputs,
                m.qubits,
                m.blocks,
                train.output_dim,
                seed=config.seed,
                attempt=attempt,
                identity_readout=identity,
                topology=m.topology,
                block_order=m.block_order,
                fitted=fitted,
            )
        return build_pca

    # ── Оценка и теория ──────────────────────────────────

    def _evaluate(
        self,
        model: Model,
        bundle: DataBundle,
        mode: MeasurementMode,
        cache: network.InputCoreCache,
    ) -> list[ConditionResult]:
        results = []
        clean = bundle.conditions[0][1]
        for spec, dataset in bundle.conditions:
            if len(dataset) == 0:
                continue
            mae = network.evaluate(model, dataset.inputs, dataset.targets, mode, cache).mae
            realized = None if spec.is_clean else data_service.realized_snr_db(clean.inputs, dataset.inputs)
            results.append(
                ConditionResult(
                    label=spec.label,
                    noise=spec.kind.value,
                    snr_db=None if spec.is_clean else spec.snr_db,
                    realized_snr_db=realized,
                    test_mae=mae,
                    dataset_power=theory.dataset_power(dataset.inputs),
                ),
            )
            logger.info("Условие %s: test MAE %.6f", spec.label, mae)
        return results

    def _theory(
        self,
        config: ExperimentConfig,
        model: Model,
        train: RegressionDataset,
        train_mae: float,
        test_mae: float | None,
        cache: network.InputCoreCache,
    ) -> tuple[TheoryReport, list[float], float]:
        settings = config.theory
        norms = network.model_norms(model)
        unitary = settings.unitary_norm if settings.unitary_norm is not None else norms.unitary_norm
        channel = list(norms.channel_norms)
        out_dims = list(config.model.factors)
        notes: list[str] = []
        if isinstance(model, PCAVQCModel):
            channel = [float(np.linalg.norm(model.projection))]
            out_dims = [model.num_qubits]
            notes.append("PCA-VQC: вместо Λ_k использована норма фиксированной проекции")

        c1 = settings.c1
        if c1 is None:
            c1 = 1.0
            notes.append("c1 не задан: использовано 1.0, константа аппроксимации не подогнана")
        shots = config.measurement.shots if config.measurement.mode is MeasurementKind.SHOTS else None
        c2 = settings.c2
        if shots is not None and c2 is None:
            states = network.circuit_states(model, train.inputs[: settings.shot_samples], cache)
            sweep = theory.shot_error_sweep(states, settings.shots, settings.shot_trials, config.measurement.seed)
            c2, residual = theory.fit_shot_constant([m for m, _ in sweep], [r for _, r in sweep])
            c2 = max(c2, 0.0)
            notes.append(f"c2 подогнан по развёртке измерений: {c2:.6g} (невязка {residual:.3e})")

        power = theory.dataset_power(train.inputs)
        estimate = theory.empirical_rademacher(
            theory.LinearChannelFamily(tuple(channel), unitary),
            train.inputs,
            draws=settings.rademacher_draws,
            steps=settings.ascent_steps,
            step_size=settings.ascent_step_size,
            seed=config.seed,
        )
        inputs = BoundInputs(
            power=power,
            samples=len(train),
            channel_norms=channel,
            unitary_norm=unitary,
            qubits=model.num_qubits,
            shots=shots,
            c1=c1,
            c2=c2,
            nu=0.0 if settings.pl_nu is NuMode.ZERO else train_mae,
        )
        report = theory.aggregate_bound(
            inputs,
            empirical=theory.empirical_summary(train_mae, test_mae, estimate),
            channel_bound=theory.channel_rademacher_bound(train.inputs, channel, unitary),
            notes=notes,
            channel_out_dims=out_dims,
        )
        logger.info(
            "Оценка ошибки: аппроксимация %.4g + оценивание %.4g + ν %.4g = %.4g",
            report.approx_bound,
            report.estimation_bound,
            report.training_error,
            report.aggregate,
        )
        return report, channel, unitary

    @staticmethod
    def reference_for(config: ExperimentConfig) -> dict[str, float]:
        return dict(REFERENCE_RESULTS) if config.data.source is DataSource.MNIST else {}

    # ── Запуск ───────────────────────────────────────────

    def _run(self, config: ExperimentConfig, out_dir: Path | None) -> RunOutcome:
        with self._stage("data"):
            bundle = self.load_data(config)
        train = bundle.train
        cache = network.InputCoreCache()

        pl_init: PLInitReport | None = None
        with self._stage("init"):
            build = self.model_builder(config, train)
            if config.screening.enabled:
                screened = optim.screen_initialization(build, train, config.screening, config.seed, cache)
                model, pl_init = screened.model, screened.report
            else:
                model = build(0)

        with self._stage("train"):
            history_test = bundle.conditions[bundle.history_condition][1]
            try:
                state = optim.train(model, train, config.optimizer, test=history_test, cache=cache)
            except TrainingAbortedError as exc:
                if out_dir is not None:
                    self._history_repo.write(exc.state, out_dir / "history.csv")
                raise
            final = network.with_params(model, state.params)
            if pl_init is not None:
                distance, radius, inside = optim.ball_check(
                    state.initial_params, state.params, pl_init.initial_loss, pl_init.mu_target,
                )
                pl_init = pl_init.model_copy(update={"final_distance": distance, "in_ball": inside})
                logger.info("‖θ_T − θ_0‖ = %.4g, радиус шара %.4g, внутри: %s", distance, radius, inside)

        with self._stage("evaluate"):
            conditions = self._evaluate(final, bundle, measurement_mode(config), cache)
            by_label = {c.label: c.test_mae for c in conditions}
            final_test_mae = by_label.get(bundle.conditions[bundle.history_condition][0].label)

        with self._stage("theory"):
            theory_report, channel, unitary = self._theory(
                config, final, train, state.final_train_mae, final_test_mae, cache,
            )
            envelope = None
            if state.history:
                try:
                    envelope = optim.envelope_for_state(state, config.theory.envelope_slack)
                except DomainError as exc:
                    logger.info("Огибающая сходимости не построена: %s", exc)

        norms = network.model_norms(final)
        report = RunReport(
            name=config.name,
            model_kind=final.kind.value,
            qubits=final.num_qubits,
            train_size=len(train),
            test_size=len(bundle.conditions[0][1]),
            epochs=state.epoch,
            final_train_mae=state.final_train_mae,
            final_test_mae=final_test_mae,
            conditions=conditions,
            param_count=norms.param_count,
            param_bytes=norms.param_bytes,
            channel_norms=channel,
            unitary_norm=unitary,
            dataset_power=theory.dataset_power(train.inputs),
            pl_init=pl_init,
            theory=theory_report,
            envelope=envelope,
            history_rows=len(state.history),
            config=config.model_dump(mode="json"),
            reference=self.reference_for(config),
            generated_at=self._clock(),
        )
        if out_dir is not None:
            self._history_repo.write(state, out_dir / "history.csv")
            self._checkpoint_repo.save(
                final, out_dir / "checkpoint.npz", extra={"config": report.config, "seed": config.seed},
            )
            self._report_repo.write_report(report, out_dir / "report.json")
        return RunOutcome(report=report, model=final, state=state, data=bundle)

    def run_experiment(self, config: ExperimentConfig, out_dir: str | Path | None = None) -> RunReport:
        """Полный запуск по конфигурации.

        Args:
            config: Конфигурация эксперимента.
            out_dir: Каталог для history.csv, report.json и checkpoint.npz
                (None — ничего не записывать).

        Returns:
            Итоговый отчёт.

        Raises:
            ExperimentStageError: Сбой стадии; исключение называет стадию.
        """
        logger.info("Эксперимент '%s': модель %s, U = %d", config.name, config.model.kind.value, config.model.qubits)
        return self._run(config, Path(out_dir) if out_dir is not None else None).report

    # ── Оценка и теория по контрольной точке ─────────────

    def evaluate_checkpoint(self, checkpoint: str | Path, config: ExperimentConfig) -> list[ConditionResult]:
        """MAE сохранённой модели на всех тестовых условиях конфигурации."""
        with self._stage("data"):
            model, _ = self._checkpoint_repo.load(checkpoint)
            bundle = self.load_data(config)
        with self._stage("evaluate"):
            return self._evaluate(model, bundle, measurement_mode(config), network.InputCoreCache())

    def theory_from_checkpoint(self, checkpoint: str | Path, config: ExperimentConfig) -> TheoryReport:
        """Агрегированная оценка ошибки для сохранённой модели и данных конфигурации."""
        with self._stage("data"):
            model, _ = self._checkpoint_repo.load(checkpoint)
            bundle = self.load_data(config)
        cache = network.InputCoreCache()
        with self._stage("evaluate"):
            train = bundle.train
            train_mae = network.evaluate(model, train.inputs, train.targets, cache=cache).mae
            test = bundle.conditions[bundle.history_condition][1]
            test_mae = network.evaluate(model, test.inputs, test.targets, cache=cache).mae if len(test) else None
        with self._stage("theory"):
            report, _, _ = self._theory(config, model, train, train_mae, test_mae, cache)
        return report

    # ── Развёртки ────────────────────────────────────────

    def _run_many(self, variants: list[tuple[str, ExperimentConfig]], out_dir: Path) -> list[RunOutcome]:
        with ThreadPoolExecutor(max_workers=self._settings.threads) as pool:
            return list(pool.map(lambda v: self._run(v[1], out_dir / v[0]), variants))

    @staticmethod
    def _row(axis: SweepAxis, value: str, report: RunReport, **fields: Any) -> SweepRow:
        payload: dict[str, Any] = {
            "axis": axis.value,
            "value": value,
            "model_kind": report.model_kind,
            "qubits": report.qubits,
            "train_size": report.train_size,
            "noise": report.config["data"]["train_noise"]["kind"],
            "train_mae": report.final_train_mae,
            "test_mae": report.final_test_mae,
        }
        payload.update(fields)
        return SweepRow(**payload)

    def sweep(self, config: ExperimentConfig, axis: str | SweepAxis, out_dir: str | Path) -> list[SweepRow]:
        """Развёртка по одной оси; пишет sweep.csv и sweep_summary.json.

        qubits и train-size обучают по модели на значение (параллельно,
        не более Settings.threads потоков); snr обучает одну модель и
        оценивает её на всех условиях; shots обучает одну модель и считает
        RMSE оценки ⟨Z⟩ для каждого M.
        """
        try:
            axis = SweepAxis(axis)
        except ValueError as exc:
            raise ConfigError(f"Неизвестная ось развёртки '{axis}'") from exc
        out_dir = Path(out_dir)
        sweep = config.sweep
        rows: list[SweepRow] = []

        if axis is SweepAxis.SHOTS:
            outcome = self._run(config, out_dir / "base")
            states = network.circuit_states(outcome.model, outcome.data.train.inputs[: config.theory.shot_samples])
            results = theory.shot_error_sweep(states, sweep.shots, config.theory.shot_trials, config.measurement.seed)
            rows = [
                self._row(
                    axis, "inf" if m is None else str(m), outcome.report,
                    shots=m, rmse=rmse, train_mae=None, test_mae=None,
                )
                for m, rmse in results
            ]
        elif axis is SweepAxis.SNR:
            outcome = self._run(config.with_updates(data={"test_noises": list(sweep.snr)}), out_dir / "base")
            rows = [
                self._row(axis, c.label, outcome.report, noise=c.noise, test_mae=c.test_mae)
                for c in outcome.report.conditions
                if c.label != "clean"
            ]
        else:
            variants: list[tuple[str, ExperimentConfig]] = []
            if axis is SweepAxis.QUBITS:
                for text in sweep.qubit_factors:
                    factors = parse_factors(text)
                    update = {"factors": factors, "qubits": math.prod(factors)}
                    variants.append((f"qubits-{text}", config.with_updates(model=update)))
            else:
                for n in sweep.train_sizes:
                    variants.append((f"train-{n}", config.with_updates(data={"n_train": n})))
            outcomes = self._run_many(variants, out_dir)
            for (name, _), outcome in zip(variants, outcomes):
                rows.append(self._row(axis, name.split("-", 1)[1], outcome.report))

        self._report_repo.write_sweep(rows, out_dir / "sweep.csv")
        self._report_repo.write_json(summarize_sweep(axis, rows), out_dir / "sweep_summary.json")
        return rows

    # ── Фикстур ──────────────────────────────────────────

    def fixture_check(self) -> dict[str, Any]:
        """Разобрать встроенный IDX-фикстур и сверить контрольную сумму.

        Raises:
            DataError: Число изображений или сумма пикселей не совпали.
        """
        images, labels = fixture_paths()
        dataset = data_service.load_mnist_idx(images, labels)
        pixel_sum = int(np.rint(dataset.inputs * 255.0).astype(np.int64).sum())
        if len(dataset) != FIXTURE_COUNT or pixel_sum != FIXTURE_PIXEL_SUM:
            raise DataError(
                f"Фикстур повреждён: {len(dataset)} изображений, сумма пикселей {pixel_sum}",
            )
        return {
            "images": len(dataset),
            "features": dataset.input_dim,
            "pixel_sum": pixel_sum,
            "power": theory.dataset_power(dataset.inputs),
        }


def summarize_sweep(axis: SweepAxis, rows: list[SweepRow]) -> dict[str, Any]:
    """Сводка, вычисленная из строк развёртки (наклоны, монотонность)."""
    summary: dict[str, Any] = {"axis": axis.value, "rows": len(rows)}
    if axis is SweepAxis.SHOTS:
        points = [(r.qubits, r.shots, r.rmse) for r in rows if r.shots is not None and r.rmse is not None]
        try:
            fit = theory.scaling_fit(points)
        except FitError as exc:
            summary["fit_error"] = exc.detail
        else:
            summary["c2"] = fit.c2
            summary["residual"] = fit.residual
            summary["shot_slopes"] = {str(u): s for u, s in fit.shot_slopes.items()}
        return summary

    maes = [(r.value, r.test_mae) for r in rows if r.test_mae is not None]
    summary["test_mae"] = {value: mae for value, mae in maes}
    if maes:
        summary["best"] = min(maes, key=lambda item: item[1])[0]
    if axis is SweepAxis.TRAIN_SIZE:
        values = [mae for _, mae in maes]
        summary["non_increasing"] = all(b <= a for a, b in zip(values, values[1:]))
    return summary
