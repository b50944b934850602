"""Pydantic-схемы конфигурации и отчётов."""

from qregress.schemas.experiment import (
    DataConfig,
    DataSource,
    ExperimentConfig,
    KernelSpace,
    MeasurementConfig,
    ModelConfig,
    NoiseKind,
    NoiseSpec,
    NuMode,
    OptimizerConfig,
    OptimizerKind,
    PowerScope,
    ReadoutKind,
    ScreeningConfig,
    SweepConfig,
    SyntheticTarget,
    TheoryConfig,
)
from qregress.schemas.report import (
    BoundInputs,
    ConditionResult,
    EmpiricalSummary,
    EnvelopeCheck,
    EnvelopeVerdict,
    EpochRecord,
    PLInitReport,
    RunReport,
    ScalingFit,
    SweepRow,
    TheoryReport,
)

__all__ = [
    "BoundInputs",
    "ConditionResult",
    "DataConfig",
    "DataSource",
    "EmpiricalSummary",
    "EnvelopeCheck",
    "EnvelopeVerdict",
    "EpochRecord",
    "ExperimentConfig",
    "KernelSpace",
    "MeasurementConfig",
    "ModelConfig",
    "NoiseKind",
    "NoiseSpec",
    "NuMode",
    "OptimizerConfig",
    "OptimizerKind",
    "PLInitReport",
    "PowerScope",
    "ReadoutKind",
    "RunReport",
    "ScalingFit",
    "ScreeningConfig",
    "SweepConfig",
    "SweepRow",
    "SyntheticTarget",
    "TheoryConfig",
    "TheoryReport",
]
