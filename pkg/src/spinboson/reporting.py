"""Artifact serialization: canonical JSON, CSV grids, run manifests.

All writes are atomic (temp file in the target directory, then rename) and
deterministic: keys are sorted, floats keep full repr, complex numbers are
[re, im] pairs.  The manifest ties artifacts to the exact configuration
via a content hash.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy


def jsonify(obj):
    """Recursively convert numpy scalars/arrays and complex values."""
    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return [z.real, z.imag]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and (np.isnan(obj) or np.isinf(obj)):
        return repr(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(jsonify(obj), sort_keys=True, indent=1)


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_json(path, obj) -> None:
    _atomic_write(Path(path), canonical_json(obj) + "\n")


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(row)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def config_hash(config_dict: dict) -> str:
    payload = json.dumps(jsonify(config_dict), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def run_manifest(config_dict: dict, wall_time: float, extras: dict | None = None):
    manifest = {
        "schema_version": 1,
        "config_sha256": config_hash(config_dict),
        "wall_time_s": wall_time,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    if extras:
        manifest.update(extras)
    return manifest
