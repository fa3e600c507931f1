"""Deterministic CSV/JSON writers.

Floats are rendered with repr (shortest round-trip), so re-running a command
with the same config reproduces every output file byte for byte.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence


def fmt_cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (list, tuple)):
        return ";".join(fmt_cell(v) for v in x)
    return str(x)


def _quote(cell: str) -> str:
    if '"' in cell or "," in cell or "\n" in cell:
        return '"' + cell.replace('"', '""') + '"'
    return cell


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(_quote(h) for h in header) + "\n")
        for row in rows:
            fh.write(",".join(_quote(fmt_cell(c)) for c in row) + "\n")


def write_json(path, obj) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
