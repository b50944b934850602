"""qregress — функциональная регрессия TTN-VQC на симуляторе вектора состояния."""

__version__ = "0.1.0"
