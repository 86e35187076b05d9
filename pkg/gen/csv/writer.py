from __future__ import annotations

import csv
import logging
import math
import numbers
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from flow_types import CsvValue

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_cell(value: CsvValue) -> str:
    """17 significant digits for floats so values round-trip exactly."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def write_csv(path: PathLike, columns: Sequence[str], rows: Iterable[Sequence[CsvValue]]) -> int:
    """Write a header and rows with LF line endings; returns the row count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} cells, header has {len(columns)}")
            writer.writerow([format_cell(v) for v in row])
            count += 1
    logger.debug(f"Wrote {count} rows to {path}")
    return count


def read_csv(path: PathLike) -> Tuple[List[str], List[List[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV file") from None
        return header, [row for row in reader if row]


__all__ = ["format_cell", "write_csv", "read_csv"]
