"""Deterministic report files.

A :class:`Report` is a JSON-shaped payload plus any number of flat tables.
File names are ``<command>_<run id>.json`` and ``<command>_<run id>.csv``
(further tables get a ``_<table>`` suffix), where the run id is a hash of
the canonical configuration.  Nothing time- or host-dependent is written,
so equal configurations give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IoError

__all__ = ["Report", "emit_reports", "format_value"]


@dataclass
class Report:
    command: str
    run_id: str
    payload: dict
    tables: dict = field(default_factory=dict)  # name -> (header, rows); "main" has no suffix

    @property
    def stem(self) -> str:
        return f"{self.command}_{self.run_id}"


def format_value(v) -> str:
    """CSV cell: 17 significant digits for floats, lower-case booleans."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _clean(obj):
    # JSON has no NaN or infinity; write null instead
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def table_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def emit_reports(report: Report, output_dir) -> list[Path]:
    """Write the JSON payload and every table; return the written paths."""
    out = Path(output_dir)
    if not out.is_dir():
        raise IoError(f"output directory does not exist: {out}")
    files = {f"{report.stem}.json": json.dumps(_clean(report.payload), indent=2, sort_keys=True) + "\n"}
    for name, (header, rows) in sorted(report.tables.items()):
        suffix = "" if name == "main" else f"_{name}"
        files[f"{report.stem}{suffix}.csv"] = table_text(header, rows)
    written = []
    for name, text in files.items():
        path = out / name
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc.strerror}") from None
        written.append(path)
    return written
