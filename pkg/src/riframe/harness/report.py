"""JSON reports and CSV sweep tables."""
from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
from pathlib import Path

import numpy as np

from .. import __version__

REPORT_SCHEMA = "riframe.report/1"
SWEEP_SCHEMA = "riframe.sweep/1"


def artifact_version() -> str:
    """Package version plus a short digest of the installed sources."""
    h = hashlib.sha256()
    root = Path(__file__).resolve().parent.parent
    for f in sorted(root.rglob("*.py")):
        h.update(f.relative_to(root).as_posix().encode())
        h.update(f.read_bytes())
    return f"{__version__}+{h.hexdigest()[:12]}"


def machine_info() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": platform.platform(),
        "processor": platform.processor() or platform.machine(),
        "cpu_count": os.cpu_count(),
    }


def new_report(kind: str, config: dict | None = None, config_hash: str | None = None) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "kind": kind,
        "artifact_version": artifact_version(),
        "config": config or {},
        "config_hash": config_hash,
        "machine": machine_info(),
        "timing": {},
    }


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True, default=_default) + "\n")


def write_sweep_csv(rows: list[dict], path) -> None:
    """Rows share keys; a leading ``schema`` column versions the table."""
    if not rows:
        return
    keys = ["schema"] + [k for k in rows[0] if k != "schema"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({"schema": SWEEP_SCHEMA, **r})
