"""Run artifacts: probe CSV, diagnostics log and summary JSON, written atomically."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable

from .scheme import RunResult

PROBE_HEADER = ("t", "branch", "x", "p", "q")

PROBES_FILE = "probes.csv"
LOG_FILE = "diagnostics.jsonl"
SUMMARY_FILE = "summary.json"


def atomic_write(path: Path, text: str) -> None:
    """Write to a temporary file in the same directory, then rename over path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def probes_csv(rows: Iterable[tuple[float, str, float, float, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PROBE_HEADER)
    for t, branch, x, p, q in rows:
        writer.writerow((repr(float(t)), branch, repr(float(x)), repr(float(p)), repr(float(q))))
    return buf.getvalue()


def summary_json(result: RunResult, extra: dict[str, Any] | None = None) -> str:
    doc = result.summary.to_dict()
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2) + "\n"


def write_run(out_dir: Path, result: RunResult, extra: dict[str, Any] | None = None) -> dict[str, Path]:
    """Write all three artifacts of a run; returns their paths."""
    paths = {
        "probes": out_dir / PROBES_FILE,
        "log": out_dir / LOG_FILE,
        "summary": out_dir / SUMMARY_FILE,
    }
    atomic_write(paths["probes"], probes_csv(result.probe_rows))
    atomic_write(paths["log"], result.log.to_text())
    atomic_write(paths["summary"], summary_json(result, extra))
    return paths


def write_json(path: Path, doc: Any) -> Path:
    atomic_write(path, json.dumps(doc, indent=2) + "\n")
    return path
