"""Model export utilities."""

import json
import logging
from pathlib import Path
from typing import Any, Dict

from ..preprocess import FittedTransform
from ..strategies import StrategyModel
from ..utils.artifacts import write_json
from ..utils.errors import ModelFormatError
from .trainer import FinalModel

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class ModelExporter:
    """Writes and reads versioned JSON model artifacts.

    The document is canonical JSON, so identical models serialize to
    identical bytes.
    """

    def __init__(self, format_version: int = FORMAT_VERSION):
        self.format_version = format_version

    def to_document(self, final: FinalModel) -> Dict[str, Any]:
        return {
            "format_version": self.format_version,
            "kind": final.kind.value,
            "config_hash": final.config_hash,
            "seed": final.seed,
            "feature_names": final.feature_names,
            "transform": final.transform.to_dict(),
            "model": final.model.to_dict()
        }

    def from_document(self, document: Any) -> FinalModel:
        if not isinstance(document, dict):
            raise ModelFormatError("Model artifact must be a JSON object")

        version = document.get("format_version")
        if version != self.format_version:
            raise ModelFormatError(f"Unsupported model format version {version!r}, expected {self.format_version}")

        try:
            model = StrategyModel.from_dict(document["model"])
            transform = FittedTransform.from_dict(document["transform"])
            final = FinalModel(
                model=model,
                transform=transform,
                config_hash=str(document.get("config_hash", "")),
                seed=int(document.get("seed", 0))
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"Malformed model artifact: {e}") from e

        if transform.width != model.n_features:
            raise ModelFormatError(
                f"Transform produces {transform.width} features but the model expects {model.n_features}"
            )

        return final

    def export(self, final: FinalModel, path: Path) -> Path:
        """Write the model artifact."""

        path = write_json(self.to_document(final), path)
        logger.info(f"Exported {final.kind.value} model to {path}")
        return path

    def load(self, path: Path) -> FinalModel:
        """Read a model artifact written by `export`."""

        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Model not found: {path}")

        try:
            with open(path, encoding="utf-8") as f:
                document = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"Model artifact {path} is not valid JSON: {e}") from e

        return self.from_document(document)
