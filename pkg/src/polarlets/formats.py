"""Plain file formats: fixed-precision CSV, PGM images, raw float32 volumes."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "fmt",
    "write_csv",
    "read_csv",
    "write_pgm",
    "read_pgm",
    "write_volume",
    "read_volume",
    "write_samples_csv",
    "read_samples_csv",
]


def fmt(v) -> str:
    """Format a number with 17 significant digits (round-trips float64)."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def read_csv(path):
    """Return (header, rows of strings)."""
    text = _read_bytes(path).decode("utf-8", errors="replace")
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise DataError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def write_samples_csv(path, positions, values) -> None:
    positions = np.asarray(positions, dtype=float)
    write_csv(path, ["x", "y", "value"],
              ((p[0], p[1], v) for p, v in zip(positions, np.asarray(values, dtype=float))))


def read_samples_csv(path):
    header, rows = read_csv(path)
    if [h.strip() for h in header] != ["x", "y", "value"]:
        raise DataError(f"{path}: expected header x,y,value", line=1)
    out = np.empty((len(rows), 3))
    for i, row in enumerate(rows):
        try:
            out[i] = [float(v) for v in row]
        except ValueError as exc:
            raise DataError(f"{path}: {exc}", line=i + 2) from None
    return out[:, :2], out[:, 2]


def _to_u16(img, vmax=None):
    img = np.asarray(img, dtype=float)
    top = float(np.max(img)) if vmax is None else float(vmax)
    if top <= 0 or not np.isfinite(top):
        return np.zeros(img.shape, dtype=np.uint16)
    return np.clip(np.rint(img / top * 65535.0), 0, 65535).astype(np.uint16)


def write_pgm(path, img, binary: bool = True, vmax=None) -> None:
    """Write a 16-bit grayscale PGM; values are scaled so ``vmax`` maps to 65535.

    ``img`` is indexed [row, column].
    """
    data = _to_u16(img, vmax)
    h, w = data.shape
    if binary:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n65535\n".encode())
            fh.write(data.astype(">u2").tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(f"P2\n{w} {h}\n65535\n")
            for row in data:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")


def _pgm_tokens(raw: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError("truncated PGM header")
        tokens.append(raw[start:pos].decode("ascii"))
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 PGM (8- or 16-bit) into a float array scaled to [0, 1]."""
    raw = _read_bytes(path)
    (magic, w, h, maxval), pos = _pgm_tokens(raw, 4)
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise DataError(f"{path}: bad PGM header") from None
    if magic == "P5":
        dtype = ">u2" if maxval > 255 else "u1"
        need = w * h * np.dtype(dtype).itemsize
        if len(raw) - pos < need:
            raise DataError(f"{path}: truncated PGM payload")
        data = np.frombuffer(raw[pos:pos + need], dtype=dtype).reshape(h, w)
    elif magic == "P2":
        vals = raw[pos - 1:].split()
        if len(vals) < w * h:
            raise DataError(f"{path}: truncated PGM payload")
        data = np.array([int(v) for v in vals[: w * h]]).reshape(h, w)
    else:
        raise DataError(f"{path}: not a P2/P5 PGM")
    return data.astype(float) / maxval


def write_volume(path, values, spacing, origin, extra=None) -> None:
    """Raw little-endian float32 volume (x fastest) plus ``<path>.json`` sidecar."""
    values = np.asarray(values, dtype="<f4")
    # x is array axis 0; store with x varying fastest
    Path(path).write_bytes(np.ascontiguousarray(values.transpose(2, 1, 0)).tobytes())
    side = {
        "dimensions": list(values.shape),
        "spacing": float(spacing),
        "origin": [float(o) for o in origin],
        "dtype": "float32-le",
        "order": "x-fastest",
    }
    if extra:
        side.update(extra)
    Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True))


def read_volume(path):
    """Inverse of :func:`write_volume`; returns (values[x, y, z], sidecar dict)."""
    side_path = Path(str(path) + ".json")
    try:
        side = json.loads(side_path.read_text())
        dims = [int(d) for d in side["dimensions"]]
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"{side_path}: bad volume sidecar ({exc})") from None
    raw = _read_bytes(path)
    if len(raw) != 4 * int(np.prod(dims)):
        raise DataError(f"{path}: size does not match sidecar dimensions")
    data = np.frombuffer(raw, dtype="<f4").reshape(dims[::-1]).transpose(2, 1, 0)
    return data.astype(float), side
