"""Encoding of 2D positions through a hexagonal projection per module."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .codebook import Codebook
from .core import (
    GcTensor,
    GcVsaError,
    GridConfig,
    PhaseTensor,
    materialize,
    module_activations,
)

# rows are unit vectors 120 degrees apart; each column sums to zero
HEX_T = np.array(
    [
        [np.sqrt(3.0) / 2.0, -0.5],
        [-np.sqrt(3.0) / 2.0, -0.5],
        [0.0, 1.0],
    ]
)

MAX_CODEBOOK_ENTRIES = 1_000_000


def rotation_matrix(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def hex_project(p, theta: float, s: float) -> np.ndarray:
    """Hexagonal coordinates ``(u, v, w)`` of point ``p`` for one module."""
    if not s > 0:
        raise GcVsaError(f"module scale must be positive, got {s}")
    xy = np.asarray(p, dtype=np.float64)
    return HEX_T @ rotation_matrix(theta) @ xy / s


@dataclass(frozen=True, eq=False)
class ModuleGeometry:
    """Orientation and scale of every module.

    ``orientations[i, l]`` is the angle of ring slot ``l`` at scale ``i``.
    Slots run clockwise (angle decreases with ``l``) from a per-scale random
    offset, so shifting a ring towards higher indices rotates the encoded
    point counter-clockwise.
    """

    config: GridConfig
    orientations: np.ndarray
    scales: np.ndarray
    offsets: np.ndarray

    @classmethod
    def from_config(cls, config: GridConfig) -> "ModuleGeometry":
        rng = np.random.default_rng(config.seed)
        offsets = rng.uniform(0.0, 2.0 * np.pi, size=config.n_s)
        steps = 2.0 * np.pi * np.arange(config.n_theta) / config.n_theta
        orientations = np.mod(offsets[:, None] - steps[None, :], 2.0 * np.pi)
        scales = config.s_min * config.growth ** np.arange(config.n_s, dtype=np.float64)
        return cls(config, orientations, scales, offsets)

    def projection(self) -> np.ndarray:
        """Per-module linear map from (x, y) in pixels to phase in index units.

        Shape ``(n_s, n_theta, 3, 2)``; one pixel of displacement along x moves
        module phases by ``projection[..., 0]``.
        """
        c = np.cos(self.orientations)
        s = np.sin(self.orientations)
        rot = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
        m = np.einsum("ab,ijbc->ijac", HEX_T, rot)
        return self.config.n * m / self.scales[:, None, None, None]

    def to_dict(self) -> dict:
        return {
            "scales": self.scales.tolist(),
            "orientation_offsets": self.offsets.tolist(),
        }


@dataclass(frozen=True)
class GeneratorPair:
    gx: PhaseTensor
    gy: PhaseTensor


def generators(geom: ModuleGeometry) -> GeneratorPair:
    """Unit-step generators. Their fractional powers reproduce ``encode_position``
    only while every per-pixel phase step stays inside ``(-n/2, n/2)``."""
    proj = geom.projection()
    if np.max(np.abs(proj)) >= geom.config.n / 2:
        raise GcVsaError("scales too small: a one-pixel step wraps a module phase")
    return GeneratorPair(
        PhaseTensor(proj[..., 0], geom.config), PhaseTensor(proj[..., 1], geom.config)
    )


def position_phases(points, geom: ModuleGeometry) -> np.ndarray:
    """Phases for a batch of points, shape ``(..., n_s, n_theta, 3)``."""
    pts = np.asarray(points, dtype=np.float64)
    if not np.all(np.isfinite(pts)):
        raise GcVsaError("positions must be finite")
    ph = np.einsum("ijab,...b->...ija", geom.projection(), pts)
    return np.mod(ph, geom.config.n)


def encode_phases(p, geom: ModuleGeometry) -> PhaseTensor:
    return PhaseTensor(position_phases(p, geom), geom.config)


def encode_position(p, geom: ModuleGeometry) -> GcTensor:
    return materialize(encode_phases(p, geom))


def lattice_axes(extent, step: float):
    """Coordinates along x and y for ``extent = (x0, x1, y0, y1)``, inclusive."""
    x0, x1, y0, y1 = (float(e) for e in extent)
    if not step > 0:
        raise GcVsaError(f"step must be positive, got {step}")
    if x1 < x0 or y1 < y0:
        raise GcVsaError(f"degenerate extent {extent}")
    nx = int(np.floor((x1 - x0) / step + 1e-9)) + 1
    ny = int(np.floor((y1 - y0) / step + 1e-9)) + 1
    return x0 + step * np.arange(nx), y0 + step * np.arange(ny)


def _key(v: float):
    r = round(v)
    return int(r) if abs(v - r) < 1e-9 else float(v)


def position_codebook(
    extent, step: float, geom: ModuleGeometry, max_entries: int = MAX_CODEBOOK_ENTRIES
) -> Codebook:
    """Codebook over a lattice, keyed ``(x, y)``, row-major in y then x.

    The key order is ``y`` outer and ``x`` inner, so ``similarity_map`` can
    reshape a readout straight into an image with rows indexed by y.
    """
    xs, ys = lattice_axes(extent, step)
    count = len(xs) * len(ys)
    if count > max_entries:
        raise GcVsaError(f"codebook would hold {count} entries (limit {max_entries})")
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], -1)
    data = module_activations(position_phases(pts, geom), geom.config.n)
    keys = [(_key(x), _key(y)) for x, y in pts]
    return Codebook.from_matrix(
        keys, data.reshape(count, -1), geom.config, grid_shape=(len(ys), len(xs))
    )


def axis_codebook(values, geom: ModuleGeometry, axis: int) -> Codebook:
    """FPE codebook along a single Cartesian axis (0 for x, 1 for y)."""
    values = np.asarray(values, dtype=np.float64)
    pts = np.zeros((len(values), 2))
    pts[:, axis] = values
    data = module_activations(position_phases(pts, geom), geom.config.n)
    return Codebook.from_matrix(
        [_key(v) for v in values], data.reshape(len(values), -1), geom.config
    )


def similarity_map(v: GcTensor, codebook: Codebook) -> np.ndarray:
    if codebook.grid_shape is None:
        raise GcVsaError("codebook was not built over a lattice")
    return codebook.similarities(v).reshape(codebook.grid_shape)


def receptive_field(neuron, extent, step: float, geom: ModuleGeometry) -> np.ndarray:
    """Activation of one neuron at every lattice point, rows indexed by y."""
    cfg = geom.config
    si, ti, i, j, k = (int(q) for q in neuron)
    bounds = (cfg.n_s, cfg.n_theta, cfg.n, cfg.n, cfg.n)
    for q, b in zip((si, ti, i, j, k), bounds):
        if not 0 <= q < b:
            raise GcVsaError(f"neuron index {tuple(neuron)} out of range for {bounds}")
    xs, ys = lattice_axes(extent, step)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx, gy], -1)
    ph = pts @ geom.projection()[si, ti].T
    idx = np.array([i, j, k], dtype=np.float64)
    return (2.0 / cfg.n**3) * np.sum(np.cos(2.0 * np.pi / cfg.n * (idx - ph)), axis=-1)


def lattice_vectors(geom: ModuleGeometry, scale_idx: int, theta_idx: int) -> np.ndarray:
    """Two displacements (rows, pixels) under which a module's code repeats.

    They move the first two hexagonal coordinates by exactly one period each;
    the third follows because the coordinates always sum to zero.
    """
    s = geom.scales[scale_idx]
    theta = geom.orientations[scale_idx, theta_idx]
    a = HEX_T[:2] @ rotation_matrix(theta) / s
    return np.linalg.solve(a, np.eye(2)).T


def autocorrelation(field: np.ndarray) -> np.ndarray:
    """Mean-removed 2D autocorrelation, zero lag at the centre, peak 1."""
    f = np.asarray(field, dtype=np.float64)
    f = f - f.mean()
    h, w = f.shape
    spec = np.fft.rfft2(f, s=(2 * h - 1, 2 * w - 1))
    ac = np.fft.fftshift(np.fft.irfft2(np.abs(spec) ** 2, s=(2 * h - 1, 2 * w - 1)))
    if ac.max() <= 0:
        raise GcVsaError("constant field has no autocorrelation structure")
    return ac / ac.max()


def _refine(ac: np.ndarray, r: int, c: int) -> tuple[float, float]:
    # separable parabola through the 3x3 neighbourhood
    def vertex(m1, m0, p1):
        d = m1 - 2 * m0 + p1
        return 0.0 if d >= 0 else 0.5 * (m1 - p1) / d

    return (
        r + vertex(ac[r - 1, c], ac[r, c], ac[r + 1, c]),
        c + vertex(ac[r, c - 1], ac[r, c], ac[r, c + 1]),
    )


@dataclass
class HexSignature:
    peaks: np.ndarray  # (6, 2) sub-pixel offsets (dy, dx) from the centre
    radii: np.ndarray
    angles: np.ndarray  # radians, ascending
    radial_spread: float  # (max - min) / mean radius

    @property
    def angle_gaps(self) -> np.ndarray:
        return np.diff(np.r_[self.angles, self.angles[0] + 2 * np.pi])


def hexagonal_signature(field: np.ndarray, min_height: float = 0.1) -> HexSignature:
    """Six maxima of the autocorrelation closest to its central peak.

    Local maxima (3x3 neighbourhood, height above ``min_height``) are refined
    to sub-pixel precision; the six nearest to zero lag are returned.
    """
    ac = autocorrelation(field)
    cy, cx = (np.array(ac.shape) - 1) // 2
    is_max = (ac == ndimage.maximum_filter(ac, size=3, mode="constant", cval=-np.inf))
    is_max &= ac > min_height
    is_max[[0, -1], :] = False
    is_max[:, [0, -1]] = False
    is_max[cy, cx] = False
    rows, cols = np.nonzero(is_max)
    if len(rows) < 6:
        raise GcVsaError(f"only {len(rows)} autocorrelation maxima found")
    pts = np.array([_refine(ac, r, c) for r, c in zip(rows, cols)]) - [cy, cx]
    radii = np.hypot(pts[:, 0], pts[:, 1])
    order = np.argsort(radii, kind="stable")[:6]
    pts, radii = pts[order], radii[order]
    angles = np.mod(np.arctan2(pts[:, 0], pts[:, 1]), 2 * np.pi)
    a_order = np.argsort(angles)
    pts, radii, angles = pts[a_order], radii[a_order], angles[a_order]
    spread = float((radii.max() - radii.min()) / radii.mean())
    return HexSignature(pts, radii, angles, spread)
