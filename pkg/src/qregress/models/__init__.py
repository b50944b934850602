"""Неизменяемые доменные типы."""

from qregress.models.circuit import (
    BlockOrder,
    Gate,
    GateKind,
    ShotResult,
    StateVector,
    Topology,
    VQCParams,
)
from qregress.models.dataset import RegressionDataset
from qregress.models.network import (
    LossReport,
    MeasurementKind,
    MeasurementMode,
    Model,
    ModelKind,
    ModelNorms,
    PCAProjection,
    PCAVQCModel,
    TTNLayer,
    TTNVQCModel,
)
from qregress.models.tensor import DenseTensor, TensorLayout, TTVector

__all__ = [
    "BlockOrder",
    "DenseTensor",
    "Gate",
    "GateKind",
    "LossReport",
    "MeasurementKind",
    "MeasurementMode",
    "Model",
    "ModelKind",
    "ModelNorms",
    "PCAProjection",
    "PCAVQCModel",
    "RegressionDataset",
    "ShotResult",
    "StateVector",
    "TTNLayer",
    "TTNVQCModel",
    "TTVector",
    "TensorLayout",
    "Topology",
    "VQCParams",
]
