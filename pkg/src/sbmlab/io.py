"""CSV reports, binary field dumps and the run manifest.

CSV files start with ``#`` comment lines naming the config hash and the
generator, followed by a header row; every data row repeats the config hash
so rows from different configs cannot be mixed silently. Floats are written
with ``repr`` so a rerun reproduces files byte for byte.

Field dump layout (little-endian)::

    offset  size  content
    0       8     magic b"SBMFIELD"
    8       4     uint32 schema version (1)
    12      4     uint32 N
    16      8     float64 L
    24      8     float64 t
    32      8*N   float64 values
"""

from __future__ import annotations

import csv
import io as _io
import json
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .noise import GENERATOR_VERSION

__all__ = [
    "write_csv",
    "read_csv",
    "write_field",
    "read_field",
    "write_manifest",
    "FIELD_MAGIC",
    "FIELD_VERSION",
]

FIELD_MAGIC = b"SBMFIELD"
FIELD_VERSION = 1
_HEADER = struct.Struct("<8sIIdd")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], config_hash: str) -> Path:
    """Write rows with a leading ``config_hash`` column and a comment header."""
    buf = _io.StringIO()
    buf.write(f"# config_hash: {config_hash}\n")
    buf.write(f"# generator: {GENERATOR_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config_hash", *columns])
    for row in rows:
        w.writerow([config_hash, *(_fmt(v) for v in row)])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def read_csv(path) -> tuple[dict, list[dict]]:
    """Return ``(meta, rows)``: header comments as a dict, data rows as dicts of strings."""
    meta, body = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


def write_field(path, values, L: float, t: float) -> Path:
    a = np.ascontiguousarray(values, dtype="<f8")
    if a.ndim != 1:
        raise ValueError("field dump expects a 1-D array")
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(FIELD_MAGIC, FIELD_VERSION, a.size, float(L), float(t)))
        fh.write(a.tobytes())
    return path


def read_field(path) -> tuple[np.ndarray, float, float]:
    """Return ``(values, L, t)``."""
    raw = Path(path).read_bytes()
    magic, version, N, L, t = _HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC:
        raise ValueError(f"not a field dump: {path}")
    if version != FIELD_VERSION:
        raise ValueError(f"unsupported field dump version {version}")
    values = np.frombuffer(raw, dtype="<f8", count=N, offset=_HEADER.size)
    if values.size != N:
        raise ValueError("truncated field dump")
    return values.astype(np.float64), L, t


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
