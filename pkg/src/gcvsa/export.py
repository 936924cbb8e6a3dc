"""Plain-text and raster writers for experiment artifacts."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def to_gray8(image: np.ndarray) -> np.ndarray:
    """Linearly map an array onto 0..255; a constant image maps to 0."""
    a = np.asarray(image, dtype=np.float64)
    lo, hi = float(a.min()), float(a.max())
    if hi - lo <= 0:
        return np.zeros(a.shape, dtype=np.uint8)
    return np.round((a - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(path, image: np.ndarray) -> None:
    """Binary (P5) 8-bit PGM. Row 0 of ``image`` is written last so +y points up."""
    g = to_gray8(image)[::-1]
    h, w = g.shape
    with open(Path(path), "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(g).tobytes())


def read_pgm(path) -> np.ndarray:
    """Inverse of ``write_pgm`` (returns rows indexed by y, bottom row first)."""
    raw = Path(path).read_bytes()
    parts = []
    pos = 0
    while len(parts) < 4:
        while raw[pos : pos + 1].isspace():
            pos += 1
        end = pos
        while not raw[end : end + 1].isspace():
            end += 1
        parts.append(raw[pos:end].decode("ascii"))
        pos = end
    pos += 1
    if parts[0] != "P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = int(parts[1]), int(parts[2])
    data = np.frombuffer(raw[pos : pos + w * h], dtype=np.uint8).reshape(h, w)
    return data[::-1]


def write_grid_csv(path, image: np.ndarray, xs, ys) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for r, y in enumerate(ys):
            for c, x in enumerate(xs):
                w.writerow([_num(x), _num(y), repr(float(image[r, c]))])


def write_rows(path, header, rows) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _num(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v
