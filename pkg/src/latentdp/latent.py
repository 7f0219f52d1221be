"""Latent vector datasets and their on-disk formats.

A latent vector is a 1-D float64 numpy array; a dataset is a 2-D array
with one vector per row. Every boundary into the package rejects NaN
and infinity: quantiles, noise scales, and densities downstream all
assume finite inputs.

Binary format: an 8-byte magic tag, a little-endian u32 version, u64
row count, u64 column count, then rows * cols little-endian f64 values
in row-major order. Round-trips are bit exact. The CSV format is plain
RFC-4180-style text without a header row; values are written with 17
significant digits so they parse back to the identical double.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"LDPLATNT"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<8sIQQ")


class FileFormatError(ValueError):
    """A file does not conform to its declared format."""


def as_vector(values, dim: int | None = None) -> np.ndarray:
    """Validate and return a latent vector as a float64 array.

    Requires a 1-D, nonempty, all-finite input; ``dim``, when given,
    pins the expected length.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"latent vector must be 1-D, got shape {v.shape}")
    if v.size == 0:
        raise ValueError("latent vector must have at least one component")
    if not np.all(np.isfinite(v)):
        raise ValueError("latent vector contains non-finite values")
    if dim is not None and v.size != dim:
        raise ValueError(f"latent vector has dimension {v.size}, expected {dim}")
    return v


def as_matrix(values, dim: int | None = None) -> np.ndarray:
    """Validate and return a latent dataset as an (n, m) float64 array."""
    z = np.asarray(values, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"latent dataset must be 2-D, got shape {z.shape}")
    n, m = z.shape
    if n < 1 or m < 1:
        raise ValueError(f"latent dataset must be nonempty, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("latent dataset contains non-finite values")
    if dim is not None and m != dim:
        raise ValueError(f"latent dataset has dimension {m}, expected {dim}")
    return z


def write_latent_file(path, data) -> None:
    """Write a latent dataset in the binary format (bit-exact round-trip)."""
    z = as_matrix(data)
    n, m = z.shape
    payload = np.ascontiguousarray(z, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, n, m))
        fh.write(payload)


def read_latent_file(path) -> np.ndarray:
    """Read a binary latent file, checking header, size, and finiteness."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FileFormatError(f"{path}: file shorter than header")
    magic, version, n, m = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FileFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FileFormatError(f"{path}: unsupported format version {version}")
    if n < 1 or m < 1:
        raise FileFormatError(f"{path}: header declares empty dataset {n}x{m}")
    expected = _HEADER.size + n * m * 8
    if len(raw) < expected:
        raise FileFormatError(
            f"{path}: truncated payload, expected {expected} bytes, got {len(raw)}"
        )
    if len(raw) > expected:
        raise FileFormatError(
            f"{path}: {len(raw) - expected} trailing bytes after declared payload"
        )
    z = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n, m)
    if not np.all(np.isfinite(z)):
        raise FileFormatError(f"{path}: payload contains non-finite values")
    return z.astype(np.float64)


def format_float(x: float) -> str:
    """Decimal form with 17 significant digits; parses back to the same double."""
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"cannot format non-finite value {x}")
    return format(x, ".17g")


def write_latent_csv(path, data) -> None:
    z = as_matrix(data)
    with open(path, "w", newline="") as fh:
        for row in z:
            fh.write(",".join(format_float(x) for x in row))
            fh.write("\n")


def read_latent_csv(path) -> np.ndarray:
    """Parse a headerless numeric CSV into a latent dataset."""
    rows: list[list[float]] = []
    with open(path, "r", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            cells = line.split(",")
            try:
                parsed = [float(c) for c in cells]
            except ValueError:
                raise FileFormatError(f"{path}:{lineno}: non-numeric cell") from None
            if not all(np.isfinite(parsed)):
                raise FileFormatError(f"{path}:{lineno}: non-finite value")
            if rows and len(parsed) != len(rows[0]):
                raise FileFormatError(
                    f"{path}:{lineno}: ragged row, {len(parsed)} cells vs {len(rows[0])}"
                )
            rows.append(parsed)
    if not rows:
        raise FileFormatError(f"{path}: empty CSV")
    return np.array(rows, dtype=np.float64)


def dumps_json(obj) -> str:
    """Serialize to JSON with floats at 17 significant digits.

    Key order is preserved, so documents built in a fixed order produce
    byte-identical files. Used for bounds, boundaries, sidecars, and
    audit reports.
    """
    return _dump(obj)


def dump_json(path, obj) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dumps_json(obj))
        fh.write("\n")


def load_json(path) -> dict:
    with open(path, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: invalid JSON ({exc})") from None
    return doc


def _dump(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _dump(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dump(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_dump(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")
