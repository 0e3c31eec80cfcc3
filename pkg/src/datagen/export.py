"""Write generated datasets as CSV plus a JSON ground-truth sidecar."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from src.models import GeneratedDataset

logger = logging.getLogger(__name__)

# enough digits for float parsing to recover every value exactly
FLOAT_FORMAT = "%.17g"


def truth_path(csv_path: str | Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.name + ".truth.json")


def write_csv(data: np.ndarray, path: str | Path, names: Sequence[str] | None = None) -> Path:
    path = Path(path)
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(data.shape[1])]
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(data, columns=names).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def export_dataset(dataset: GeneratedDataset, path: str | Path) -> tuple[Path, Path]:
    """Write ``path`` and ``<path>.truth.json``; returns both paths."""
    csv_path = write_csv(dataset.data, path)
    sidecar = truth_path(csv_path)
    sidecar.write_text(
        json.dumps(dataset.truth_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    logger.info("wrote %s and %s", csv_path, sidecar)
    return csv_path, sidecar
