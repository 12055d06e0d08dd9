"""
File formats used by the command-line tools.

Every writer produces canonical output (sorted keys, rows in replicate
order) so identical inputs give byte-identical files.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..models.data_models import (
    CoupledRun,
    CurveRow,
    EstimateReport,
    StageRecord,
    TemperingSchedule,
)
from ..models.error_handling import ConfigurationError, OutputError

logger = logging.getLogger(__name__)


def _prepare(path: str) -> Path:
    file_path = Path(path).expanduser()
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create directory for {file_path}: {e}")
    return file_path


def _dumps(data: Any, indent: Optional[int] = None) -> str:
    return json.dumps(data, sort_keys=True, indent=indent, ensure_ascii=False)


def _read_json(path: str) -> Any:
    file_path = Path(path).expanduser()
    if not file_path.exists():
        raise ConfigurationError(f"file not found: {file_path}")
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"{file_path}: invalid JSON at line {e.lineno}, column {e.colno}: "
            f"{e.msg}",
            data={"line": e.lineno, "column": e.colno},
        )


def write_json(data: Any, path: str) -> Path:
    file_path = _prepare(path)
    with open(file_path, "w", encoding="utf-8") as f:
        f.write(_dumps(data, indent=2))
        f.write("\n")
    logger.info(f"Wrote {file_path}")
    return file_path


def write_schedule(schedule: TemperingSchedule, path: str) -> Path:
    return write_json(schedule.to_dict(), path)


def read_schedule(path: str) -> TemperingSchedule:
    try:
        return TemperingSchedule.from_dict(_read_json(path))
    except (ValueError, TypeError) as e:
        raise ConfigurationError(f"invalid schedule file {path}: {e}")


def write_run_store(runs: Iterable[CoupledRun], path: str) -> Path:
    """JSON lines, one run per line, sorted by replicate index."""
    ordered = sorted(runs, key=lambda run: run.replicate)
    file_path = _prepare(path)
    with open(file_path, "w", encoding="utf-8") as f:
        for run in ordered:
            f.write(_dumps(run.to_dict()))
            f.write("\n")
    logger.info(f"Wrote {len(ordered)} run(s) to {file_path}")
    return file_path


def read_run_store(path: str) -> List[CoupledRun]:
    file_path = Path(path).expanduser()
    if not file_path.exists():
        raise ConfigurationError(f"run store not found: {file_path}")
    runs = []
    with open(file_path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                runs.append(CoupledRun.from_dict(json.loads(line)))
            except json.JSONDecodeError as e:
                raise ConfigurationError(
                    f"{file_path}: invalid JSON at line {line_number}, "
                    f"column {e.colno}: {e.msg}",
                    data={"line": line_number, "column": e.colno},
                )
            except (ValueError, TypeError) as e:
                raise ConfigurationError(
                    f"{file_path}: invalid run record at line {line_number}: {e}",
                    data={"line": line_number},
                )
    return sorted(runs, key=lambda run: run.replicate)


def write_trace(records: Sequence[StageRecord], path: str) -> Path:
    file_path = _prepare(path)
    with open(file_path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(_dumps(record.to_dict()))
            f.write("\n")
    return file_path


def write_report(report: EstimateReport, path: str) -> Path:
    return write_json(report.to_dict(), path)


def write_reports(reports: Sequence[EstimateReport], path: str) -> Path:
    """One report per statistic, keyed by statistic name."""
    return write_json({r.statistic: r.to_dict() for r in reports}, path)


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: str) -> Path:
    file_path = _prepare(path)
    with open(file_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if value is None else value for value in row])
    logger.info(f"Wrote {file_path}")
    return file_path


def write_curve(rows: Sequence[CurveRow], path: str) -> Path:
    return write_csv(CurveRow.header(), (row.to_row() for row in rows), path)


def write_edge_probabilities(
    edges: Sequence[Sequence[int]],
    probabilities: Sequence[float],
    std_errors: Sequence[Optional[float]],
    path: str,
) -> Path:
    rows = (
        [i, j, prob, err]
        for (i, j), prob, err in zip(edges, probabilities, std_errors)
    )
    return write_csv(("node_i", "node_j", "prob", "std_err"), rows, path)


def write_matrix_csv(matrix: np.ndarray, path: str, fmt: str = "%.17g") -> Path:
    file_path = _prepare(path)
    np.savetxt(file_path, np.atleast_2d(matrix), delimiter=",", fmt=fmt)
    logger.info(f"Wrote {file_path}")
    return file_path


def summary_dict(values: Dict[str, Any]) -> str:
    """Human-readable one-line-per-key rendering for stdout."""
    return "\n".join(f"{key}: {values[key]}" for key in sorted(values))
