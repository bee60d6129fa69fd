"""Final model training, validation and export."""

from .exporter import FORMAT_VERSION, ModelExporter
from .trainer import FinalModel, ModelTrainer
from .validator import CLASS_LABELS, ModelValidator

__all__ = [
    "FORMAT_VERSION",
    "CLASS_LABELS",
    "FinalModel",
    "ModelTrainer",
    "ModelValidator",
    "ModelExporter"
]
