"""CSV serialisation for metric tables, sweeps and per-tile Omega breakdowns.

Every file starts with one ``#`` line holding the JSON-encoded configuration.
Floats are written with 17 significant digits; infinite PSNR is ``inf``.
"""
from __future__ import annotations

import csv
import json
import math
from typing import IO, Iterable, Mapping, Sequence

from .errors import ParameterError

PATCH_COLUMNS = ("patch_row", "patch_col", "q_ref", "q_rest", "alpha", "sigma", "p_prime", "omega")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    return str(value)


def config_line(config: Mapping) -> str:
    return "# " + json.dumps(config, sort_keys=True, default=str) + "\n"


def write_table(fh: IO[str], columns: Sequence[str], rows: Iterable[Mapping], config: Mapping) -> None:
    fh.write(config_line(config))
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(col)) for col in columns])


def write_patch_csv(fh: IO[str], result, config: Mapping) -> None:
    """Per-tile Omega breakdown of an ``OmegaResult``."""
    rows = (
        {
            "patch_row": p.row, "patch_col": p.col, "q_ref": p.q_ref, "q_rest": p.q_rest,
            "alpha": p.alpha, "sigma": p.sigma, "p_prime": p.p_prime, "omega": p.omega,
        }
        for p in result.per_patch
    )
    write_table(fh, PATCH_COLUMNS, rows, config)


def read_table(fh: IO[str]) -> tuple[list[str], list[dict[str, str]]]:
    """Parse a table written by ``write_table``; ``#`` lines are skipped."""
    lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(lines)
    rows = list(reader)
    return list(reader.fieldnames or []), rows


def read_column(fh: IO[str], column: str) -> list[float]:
    """Float values of ``column``, skipping rows where it is empty."""
    header, rows = read_table(fh)
    if column not in header:
        raise ParameterError(f"column {column!r} not found; available: {header}")
    out = []
    for row in rows:
        cell = row[column].strip()
        if cell:
            out.append(float(cell))
    return out
