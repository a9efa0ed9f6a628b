"""Result files: per-sample records plus a summary block, in CSV or JSON.

JSON files hold ``{"records": [...], "summary": {...}, "timing": {...}}``.
CSV files hold one record per row followed by ``#summary`` / ``#timing``
comment lines carrying the same JSON objects. Timing lives in its own block
(never inside the records) so that everything outside it is byte-reproducible
for a fixed seed.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path
from typing import Any, Sequence

from .errors import DatasetError

_INT_RE = re.compile(r"^-?\d+$")
# Inherently textual columns, never auto-coerced: "007" stays a string.
_STRING_COLUMNS = {"sample_id", "final_class", "method"}


def _resolve_format(path: str | Path, format: str | None) -> str:
    if format is not None:
        if format not in ("csv", "json"):
            raise DatasetError(f"unknown format {format!r}; expected 'csv' or 'json'")
        return format
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".json"):
        return suffix[1:]
    raise DatasetError(f"cannot infer format from {path!r}; pass format='csv' or 'json'")


def save_results(
    records: Sequence[dict],
    summary: dict,
    path: str | Path,
    format: str | None = None,
    *,
    timing: dict | None = None,
    columns: Sequence[str] | None = None,
) -> None:
    """Write records + summary (+ optional timing block) to ``path``."""
    fmt = _resolve_format(path, format)
    if fmt == "json":
        payload: dict[str, Any] = {"records": list(records), "summary": summary}
        if timing is not None:
            payload["timing"] = timing
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        return

    fieldnames = list(columns) if columns is not None else (
        list(records[0].keys()) if records else []
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for rec in records:
            writer.writerow([_encode_cell(rec.get(name)) for name in fieldnames])
        fh.write(f"#summary {json.dumps(summary)}\n")
        if timing is not None:
            fh.write(f"#timing {json.dumps(timing)}\n")


def load_results(path: str | Path, format: str | None = None) -> dict:
    """Read a results file back into ``{"records", "summary", "timing"}``."""
    fmt = _resolve_format(path, format)
    if fmt == "json":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        payload.setdefault("timing", None)
        return payload

    records: list[dict] = []
    summary: dict = {}
    timing: dict | None = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header: list[str] | None = None
        for line in fh:
            if line.startswith("#summary "):
                summary = json.loads(line[len("#summary "):])
                continue
            if line.startswith("#timing "):
                timing = json.loads(line[len("#timing "):])
                continue
            row = next(csv.reader([line]))
            if header is None:
                header = row
                continue
            records.append(
                {name: _decode_cell(name, value) for name, value in zip(header, row)}
            )
    if header is None:
        raise DatasetError(f"{path}: empty results file")
    return {"records": records, "summary": summary, "timing": timing}


def _encode_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _decode_cell(name: str, text: str) -> Any:
    if name in _STRING_COLUMNS:
        return text
    if text == "":
        return None
    if text == "true":
        return True
    if text == "false":
        return False
    if _INT_RE.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text
