"""Raw snapshot files and CSV emission.

Raw snapshot layout (little-endian): 8-byte magic ``PDOASNAP``, uint32 N,
uint32 M, then N*M complex samples as interleaved float64 (real, imag) pairs
in row-major (antenna-major) order.
"""
from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .model import SnapshotSet

MAGIC = b"PDOASNAP"
_HEADER = struct.Struct("<8sII")


def write_snapshots(path, samples: np.ndarray) -> None:
    x = np.asarray(samples, dtype=np.complex128)
    n, m = x.shape
    body = np.empty((n, m, 2), dtype="<f8")
    body[..., 0] = x.real
    body[..., 1] = x.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, m))
        fh.write(body.tobytes())


def read_snapshots(path, noise_power: float) -> SnapshotSet:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, n, m = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 16 * n * m
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for {n}x{m} samples, got {len(data)}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, m, 2)
    return SnapshotSet(body[..., 0] + 1j * body[..., 1], noise_power)


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    return str(v)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[str], rows: Iterable[Mapping]) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(row.get(k)) for k in header])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Mapping]) -> Path:
    path = Path(path)
    _atomic_write(path, csv_text(header, rows))
    return path


def write_metadata(csv_path, meta: Mapping) -> Path:
    path = Path(str(csv_path) + ".meta.json")
    _atomic_write(path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def resolve_output(path, env_var: str = "POLARDOA_OUTPUT_DIR") -> Optional[Path]:
    """Apply the output-directory override from the environment, if set."""
    if path is None:
        return None
    override = os.environ.get(env_var)
    p = Path(path)
    return Path(override) / p.name if override else p
