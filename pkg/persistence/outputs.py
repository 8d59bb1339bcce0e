"""CSV/JSON output writers; identical inputs give byte-identical files"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from config.settings import VERSION

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_value(value: Any) -> str:
    """Cell text: floats at full precision, None and NaN as empty"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "" if np.isnan(value) else "%.17g" % float(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def to_jsonable(value: Any) -> Any:
    """numpy-free copy of nested data"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if not np.isfinite(value) else float(value)
    return value


def ensure_dir(path: PathLike) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_csv(path: PathLike, rows: Sequence[Union[dict, list]],
              fieldnames: Optional[List[str]] = None) -> Path:
    """Dict rows (header from the first row unless given) or list rows with an explicit header"""
    path = Path(path)
    ensure_dir(path.parent)
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            cells = [row.get(name) for name in fieldnames] if isinstance(row, dict) else row
            writer.writerow([format_value(c) for c in cells])
    logger.info("wrote %s (%d rows)", path, len(rows))
    return path


def write_json(path: PathLike, data: Any) -> Path:
    """Sorted-key JSON with a trailing newline"""
    path = Path(path)
    ensure_dir(path.parent)
    path.write_text(json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def write_rows(out_dir: PathLike, stem: str, rows: Sequence[dict], output_format: str = "csv") -> Path:
    """Rows as stem.csv, or as a JSON list when output_format is json"""
    if output_format == "json":
        return write_json(Path(out_dir) / f"{stem}.json", list(rows))
    return write_csv(Path(out_dir) / f"{stem}.csv", rows)


def write_resolved_config(out_dir: PathLike, config: Dict[str, Any]) -> Path:
    """config.json with the tool version, next to the outputs"""
    data = dict(config)
    data["version"] = VERSION
    return write_json(Path(out_dir) / "config.json", data)


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    """Rows as string dicts"""
    with Path(path).open(encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
