"""Result files and run manifests.

Every text output carries the config hash: JSON reports in a
``config_hash`` field, CSV files in a leading ``# config_hash=...`` line.
Binary files carry it in their name.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def write_json(path, obj, config_hash=None):
    data = _plain(obj)
    if config_hash is not None and isinstance(data, dict):
        data = {"config_hash": config_hash, **data}
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(path, rows, config_hash=None, fieldnames=None):
    rows = [_plain(r) for r in rows]
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        if config_hash is not None:
            fh.write(f"# config_hash={config_hash}\n")
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return path


def read_csv(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


@dataclass
class Manifest:
    """Run record written as ``manifest.json`` next to the outputs."""

    command: str
    config_hash: str
    seed: int
    out_dir: str
    started: float = field(default_factory=time.time)
    files: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def path(self, name):
        p = os.path.join(self.out_dir, name)
        self.files.append(name)
        return p

    def check(self, name, passed, **detail):
        self.checks[name] = {"passed": bool(passed), **_plain(detail)}

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks.values())

    def write(self, status="ok", message=None):
        rec = {
            "command": self.command,
            "config_hash": self.config_hash,
            "version": __version__,
            "seed": self.seed,
            "wall_clock_seconds": time.time() - self.started,
            "started_unix": self.started,
            "files": self.files,
            "checks": self.checks,
            "passed": self.passed and status == "ok",
            "status": status,
        }
        if message:
            rec["message"] = message
        return write_json(os.path.join(self.out_dir, "manifest.json"), rec)
