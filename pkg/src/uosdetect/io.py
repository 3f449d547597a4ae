"""
File formats shared by the library and the CLI.

Matrices are CSV, row-major, one matrix row per line, no header. Training
samples and observations store one sample per column. Result tables are CSV
with a header row, '.' decimals and '\\n' line endings.
"""

import csv
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from uosdetect.errors import ConfigError
from uosdetect.utilities.logging import get_logger

logger = get_logger(__name__)


def read_matrix(path: str | Path) -> np.ndarray:
    """Read a CSV matrix; dimensions are inferred from line and field counts."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read matrix file {path}: {exc}") from exc
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise ConfigError(f"Matrix file {path} is empty")
    widths = {len(row.split(",")) for row in rows}
    if len(widths) != 1:
        raise ConfigError(f"Matrix file {path} has ragged rows {sorted(widths)}")
    try:
        matrix = np.loadtxt(rows, delimiter=",", dtype=float, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"Matrix file {path} is malformed: {exc}") from exc
    logger.debug(f"Read {matrix.shape[0]}x{matrix.shape[1]} matrix from {path}")
    return matrix


def write_matrix(path: str | Path, matrix: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(
        path, np.atleast_2d(matrix), delimiter=",", fmt="%.17g", newline="\n", encoding="utf-8"
    )
    return path


def read_labels(path: str | Path) -> np.ndarray:
    """Read one integer label per line."""
    path = Path(path)
    try:
        lines = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()]
    except OSError as exc:
        raise ConfigError(f"Cannot read label file {path}: {exc}") from exc
    lines = [line for line in lines if line]
    if not lines:
        raise ConfigError(f"Label file {path} is empty")
    try:
        return np.array([int(line) for line in lines], dtype=int)
    except ValueError as exc:
        raise ConfigError(f"Label file {path} is malformed: {exc}") from exc


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(
    path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    """Write a result table with a fixed header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(
                    f"Row has {len(row)} fields but the table has {len(columns)} columns"
                )
            writer.writerow([format_value(value) for value in row])
    logger.debug(f"Wrote {path}")
    return path


def read_table(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))
