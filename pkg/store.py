# store.py - output directory data layer: CSV tables and the JSON summary
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import orjson
import pandas as pd

from errors import ConfigError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


class OutputStore:
    """
    Writes every artifact of one command under out_dir.
    - CSV: header row, '.' decimal, no index, full-precision floats.
    - summary.json: sorted keys, indent 2; NaN is written as null.
    """

    SUMMARY = "summary.json"

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory '{self.out_dir}': {exc}") from exc
        self._written: List[str] = []

    def path(self, name: str) -> Path:
        return self.out_dir / name

    @property
    def written(self) -> List[str]:
        return list(self._written)

    # ---------------- tables ----------------
    def write_table(self, name: str, frame: pd.DataFrame) -> Path:
        target = self.path(name)
        frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        self._written.append(name)
        logger.debug("wrote %s (%d rows)", target, len(frame))
        return target

    def read_table(self, name: str) -> pd.DataFrame:
        target = self.path(name)
        if not target.exists():
            raise ConfigError(f"no table '{name}' in {self.out_dir}")
        return pd.read_csv(target, float_precision="round_trip")

    # ---------------- summary ----------------
    def write_summary(self, payload: Dict[str, Any]) -> Path:
        target = self.path(self.SUMMARY)
        data = dict(payload)
        data.setdefault("files", sorted(self._written))
        with open(target, "wb") as f:
            f.write(orjson.dumps(
                _plain(data),
                option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY,
            ))
        logger.debug("wrote %s", target)
        return target

    def read_summary(self) -> Optional[Dict[str, Any]]:
        target = self.path(self.SUMMARY)
        if not target.exists():
            return None
        with open(target, "rb") as f:
            return orjson.loads(f.read())


def _plain(value: Any) -> Any:
    """Complex numbers and numpy scalars into JSON-friendly values; orjson maps NaN to null."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return {"re": value.real.tolist(), "im": value.imag.tolist()}
        return value.tolist()
    return value
