import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from app.api.schemas.experiment_schemas import ReportRow, RunSummary
from app.core.errors import ReportFormatError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COLUMNS = ("run_id", "experiment", "row", "case", "seed", "parameters", "measured", "gap", "status", "witness")


def to_plain(value: Any) -> Any:
    """numpy scalars and arrays (also nested in dicts/lists) as plain Python values."""
    if isinstance(value, dict):
        return {str(key): to_plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def dump_json(value: Any) -> str:
    return json.dumps(to_plain(value), sort_keys=True, separators=(",", ":"))


def format_number(value: Optional[float]) -> str:
    return "" if value is None else format(float(value), ".17g")


def write_atomic(path, text: str) -> Path:
    """Writes through a temp file in the target directory, then renames over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as temp:
            temp.write(text)
        os.replace(temp_name, path)
    except OSError:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    return path


def render_report(rows: List[ReportRow], experiment: str, run_id: str, seed: int) -> str:
    buffer = io.StringIO()
    buffer.write(f"# schema={SCHEMA_VERSION},experiment={experiment},run_id={run_id},seed={seed}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([
            row.run_id,
            row.experiment,
            row.row,
            row.case,
            row.seed,
            dump_json(row.parameters),
            format_number(row.measured),
            format_number(row.gap),
            row.status,
            "" if row.witness is None else dump_json(row.witness),
        ])
    return buffer.getvalue()


def write_report(path, rows: List[ReportRow], experiment: str, run_id: str, seed: int) -> Path:
    return write_atomic(path, render_report(rows, experiment, run_id, seed))


def write_summary(path, summary: RunSummary) -> Path:
    return write_atomic(path, json.dumps(summary.model_dump(by_alias=True), sort_keys=True, indent=2) + "\n")


def _parse_header(line: str, path: str) -> dict:
    if not line.startswith("# "):
        raise ReportFormatError("missing '# schema=...' header", path, 1)
    try:
        header = dict(token.split("=", 1) for token in line[2:].strip().split(","))
    except ValueError:
        raise ReportFormatError(f"malformed header {line.strip()!r}", path, 1)
    if header.get("schema") != str(SCHEMA_VERSION):
        raise ReportFormatError(f"unsupported schema {header.get('schema')!r}", path, 1)
    return header


def _parse_number(text: str) -> Optional[float]:
    return None if text == "" else float(text)


def read_report(path) -> Tuple[dict, List[ReportRow]]:
    """Parses a report CSV; any malformed row raises ReportFormatError naming file and line."""
    path = str(path)
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            lines = handle.read().splitlines()
    except OSError as e:
        logger.error(f"Cannot read report {path}: {e}")
        raise ReportFormatError(f"cannot read report: {e.strerror}", path, 0)
    if not lines:
        raise ReportFormatError("empty report", path, 1)
    header = _parse_header(lines[0], path)
    reader = csv.reader(lines[1:])
    columns = next(reader, None)
    if tuple(columns or ()) != COLUMNS:
        raise ReportFormatError(f"unexpected columns {columns}", path, 2)
    rows = []
    for offset, fields in enumerate(reader):
        line = offset + 3
        if len(fields) != len(COLUMNS):
            raise ReportFormatError(f"expected {len(COLUMNS)} fields, got {len(fields)}", path, line)
        record = dict(zip(COLUMNS, fields))
        try:
            rows.append(ReportRow(
                run_id=record["run_id"],
                experiment=record["experiment"],
                row=int(record["row"]),
                case=record["case"],
                seed=int(record["seed"]),
                parameters=json.loads(record["parameters"]),
                measured=_parse_number(record["measured"]),
                gap=_parse_number(record["gap"]),
                status=record["status"],
                witness=json.loads(record["witness"]) if record["witness"] else None,
            ))
        except (ValueError, ValidationError) as e:
            logger.error(f"Malformed report row {path}:{line}: {e}")
            raise ReportFormatError(str(e).splitlines()[0], path, line)
    return header, rows
