"""Labelled collections of vectors with cosine readout and cleanup."""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np

from .core import GcTensor, GcVsaError, GridConfig, _check_same_config

MAGIC = b"GCVSACB1"
TIE_TOL = 1e-12


class Codebook:
    """Ordered key -> vector map.

    Rows are kept raw (so ``superpose`` reproduces entries exactly) next to
    their norms, which turns a readout into one mat-vec and one division.
    """

    def __init__(
        self,
        keys: Sequence[Hashable],
        matrix: np.ndarray,
        config: GridConfig,
        grid_shape: tuple[int, int] | None = None,
    ):
        matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        dim = int(np.prod(config.shape))
        if matrix.ndim != 2 or matrix.shape[1] != dim:
            raise GcVsaError(f"codebook matrix must be (k, {dim}), got {matrix.shape}")
        keys = list(keys)
        if len(keys) != matrix.shape[0]:
            raise GcVsaError(f"{len(keys)} keys for {matrix.shape[0]} rows")
        index = {}
        for i, k in enumerate(keys):
            if k in index:
                raise GcVsaError(f"duplicate codebook key {k!r}")
            index[k] = i
        matrix.setflags(write=False)
        self.keys = keys
        self.matrix = matrix
        self.config = config
        self.norms = np.linalg.norm(matrix, axis=1)
        self.grid_shape = grid_shape
        self._index = index

    @classmethod
    def from_matrix(cls, keys, matrix, config, grid_shape=None) -> "Codebook":
        return cls(keys, matrix, config, grid_shape)

    @classmethod
    def from_items(cls, items: Iterable[tuple[Hashable, GcTensor]]) -> "Codebook":
        items = list(items)
        if not items:
            raise GcVsaError("a codebook needs at least one entry")
        cfg = _check_same_config(*(v for _, v in items))
        return cls([k for k, _ in items], np.stack([v.flat() for _, v in items]), cfg)

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key) -> bool:
        return key in self._index

    def __getitem__(self, key) -> GcTensor:
        return self.entry(self._index[key])

    def index(self, key) -> int:
        return self._index[key]

    def entry(self, i: int) -> GcTensor:
        return GcTensor(self.matrix[i].reshape(self.config.shape), self.config)

    def similarities(self, v: GcTensor) -> np.ndarray:
        if len(self.keys) == 0:
            raise GcVsaError("readout on an empty codebook")
        if v.config != self.config:
            raise GcVsaError("vector and codebook use different GridConfigs")
        nv = v.norm
        if nv == 0.0:
            raise GcVsaError("cosine readout of a zero-norm vector")
        denom = self.norms * nv
        with np.errstate(divide="ignore", invalid="ignore"):
            sims = np.where(denom > 0, (self.matrix @ v.flat()) / denom, 0.0)
        return np.clip(sims, -1.0, 1.0)

    def save(self, path) -> None:
        save_codebook(self, path)

    @classmethod
    def load(cls, path) -> "Codebook":
        return load_codebook(path)


def readout(cb: Codebook, v: GcTensor) -> list[tuple[Hashable, float]]:
    return list(zip(cb.keys, cb.similarities(v).tolist()))


def argmax_first(sims: np.ndarray) -> int:
    """Index of the maximum; near-exact ties go to the lowest index."""
    top = float(np.max(sims))
    return int(np.flatnonzero(sims >= top - TIE_TOL)[0])


def cleanup(cb: Codebook, v: GcTensor) -> tuple[Hashable, float]:
    sims = cb.similarities(v)
    i = argmax_first(sims)
    return cb.keys[i], float(sims[i])


def superpose(cb: Codebook, similarities) -> GcTensor:
    w = np.asarray(similarities, dtype=np.float64)
    if w.shape != (len(cb),):
        raise GcVsaError(f"expected {len(cb)} weights, got shape {w.shape}")
    return GcTensor((w @ cb.matrix).reshape(cb.config.shape), cb.config)


def _encode_key(k):
    if isinstance(k, tuple):
        return {"t": [_encode_key(x) for x in k]}
    if isinstance(k, (np.integer,)):
        return int(k)
    if isinstance(k, (np.floating,)):
        return float(k)
    if isinstance(k, (str, int, float)) or k is None:
        return k
    raise GcVsaError(f"cannot serialize codebook key {k!r}")


def _decode_key(k):
    if isinstance(k, dict):
        return tuple(_decode_key(x) for x in k["t"])
    return k


def save_codebook(cb: Codebook, path) -> None:
    """Write ``MAGIC | u64 header length | JSON header | float64 rows``.

    All integers are little-endian; the payload is the raw row-major matrix.
    """
    header = {
        "config": cb.config.to_dict(),
        "keys": [_encode_key(k) for k in cb.keys],
        "rows": len(cb),
        "cols": int(cb.matrix.shape[1]),
        "dtype": "<f8",
        "grid_shape": list(cb.grid_shape) if cb.grid_shape else None,
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(Path(path), "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        fh.write(cb.matrix.astype("<f8", copy=False).tobytes(order="C"))


def load_codebook(path) -> Codebook:
    with open(Path(path), "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise GcVsaError(f"{path}: not a codebook container")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        rows, cols = header["rows"], header["cols"]
        payload = fh.read()
    if len(payload) != rows * cols * 8:
        raise GcVsaError(f"{path}: payload holds {len(payload)} bytes, expected {rows * cols * 8}")
    matrix = np.frombuffer(payload, dtype="<f8").reshape(rows, cols)
    grid = header.get("grid_shape")
    return Codebook(
        [_decode_key(k) for k in header["keys"]],
        matrix.copy(),
        GridConfig.from_dict(header["config"]),
        tuple(grid) if grid else None,
    )
