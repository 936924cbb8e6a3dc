"""Block-structured hypervectors and their algebra.

A vector is a rank-5 real array ``(n_s, n_theta, n, n, n)``: one ``n x n x n``
module per (scale, orientation) pair. Binding is a module-wise 3D circular
convolution, computed in the Fourier domain with numpy's convention
(unnormalized forward DFT, ``1/N`` inverse).

Phases are stored in module-index units, so a phase of 1.0 is a circular shift
by one neuron along that axis.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SPATIAL_AXES = (-3, -2, -1)
# up to this many elements per module the 3D DFT is one dense mat-mul, which
# beats numpy's per-axis FFT passes by a wide margin on tiny modules
DENSE_DFT_MAX = 512
IMAG_TOL = 1e-9
PURE_TOL = 0.01


class GcVsaError(ValueError):
    """Base class for invalid inputs to the algebra."""


class ConfigMismatchError(GcVsaError):
    pass


class NotPureError(GcVsaError):
    pass


@dataclass(frozen=True)
class GridConfig:
    n: int = 3
    n_theta: int = 23
    n_s: int = 5
    s_min: float = 4.0
    growth: float = 1.42
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise GcVsaError(f"n must be an integer >= 3, got {self.n}")
        if int(self.n_theta) != self.n_theta or self.n_theta < 1:
            raise GcVsaError(f"n_theta must be an integer >= 1, got {self.n_theta}")
        if int(self.n_s) != self.n_s or self.n_s < 1:
            raise GcVsaError(f"n_s must be an integer >= 1, got {self.n_s}")
        if not self.s_min > 0:
            raise GcVsaError(f"s_min must be positive, got {self.s_min}")
        if not self.growth > 1:
            raise GcVsaError(f"growth must exceed 1, got {self.growth}")

    @property
    def shape(self) -> tuple[int, int, int, int, int]:
        return (self.n_s, self.n_theta, self.n, self.n, self.n)

    @property
    def n_modules(self) -> int:
        return self.n_s * self.n_theta

    @property
    def sigma(self) -> float:
        # gives unit amplitude at the fundamental bins of the unnormalized DFT
        return 2.0 / self.n**3

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_theta": self.n_theta,
            "n_s": self.n_s,
            "s_min": self.s_min,
            "growth": self.growth,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridConfig":
        return cls(
            n=int(d["n"]),
            n_theta=int(d["n_theta"]),
            n_s=int(d["n_s"]),
            s_min=float(d["s_min"]),
            growth=float(d["growth"]),
            seed=int(d["seed"]),
        )


@dataclass(frozen=True, eq=False)
class GcTensor:
    data: np.ndarray
    config: GridConfig = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != self.config.shape:
            raise GcVsaError(
                f"tensor shape {data.shape} does not match config shape {self.config.shape}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def __neg__(self) -> "GcTensor":
        return GcTensor(-self.data, self.config)

    def __mul__(self, c: float) -> "GcTensor":
        return GcTensor(self.data * float(c), self.config)

    __rmul__ = __mul__

    def __add__(self, other: "GcTensor") -> "GcTensor":
        return bundle([self, other])

    def __sub__(self, other: "GcTensor") -> "GcTensor":
        return bundle([self, other], weights=[1.0, -1.0])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def allclose(self, other: "GcTensor", atol: float = 1e-9) -> bool:
        return self.config == other.config and np.allclose(
            self.data, other.data, rtol=0.0, atol=atol
        )


@dataclass(frozen=True, eq=False)
class PhaseTensor:
    phases: np.ndarray
    config: GridConfig = field(repr=False)

    def __post_init__(self):
        n_s, n_theta, n = self.config.n_s, self.config.n_theta, self.config.n
        phases = np.asarray(self.phases, dtype=np.float64)
        if phases.shape != (n_s, n_theta, 3):
            raise GcVsaError(
                f"phase shape {phases.shape} does not match ({n_s}, {n_theta}, 3)"
            )
        if not np.all(np.isfinite(phases)):
            raise GcVsaError("phases must be finite")
        phases = np.mod(phases, n)
        # np.mod can return n itself for tiny negative inputs
        phases[phases >= n] = 0.0
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)

    def signed(self) -> np.ndarray:
        """Phases mapped to the principal range ``[-n/2, n/2)``."""
        n = self.config.n
        return np.mod(self.phases + n / 2.0, n) - n / 2.0

    def allclose(self, other: "PhaseTensor", atol: float = 1e-9) -> bool:
        """Compare phases on the circle, so 0 and n-epsilon are close."""
        if self.config != other.config:
            return False
        n = self.config.n
        d = np.mod(self.phases - other.phases + n / 2.0, n) - n / 2.0
        return bool(np.max(np.abs(d)) <= atol)


def _check_same_config(*vs) -> GridConfig:
    cfg = vs[0].config
    for v in vs[1:]:
        if v.config != cfg:
            raise ConfigMismatchError("operands were built with different GridConfigs")
    return cfg


def module_activations(phases: np.ndarray, n: int) -> np.ndarray:
    """Outer sum of three phase-shifted cosines for every module.

    ``phases`` has shape ``(..., 3)``; the result has shape ``(..., n, n, n)``.
    Works on any leading batch shape so codebooks can be built in one call.
    """
    phases = np.asarray(phases, dtype=np.float64)
    idx = np.arange(n, dtype=np.float64)
    # (..., 3, n)
    c = np.cos(2.0 * np.pi / n * (idx - phases[..., None]))
    ci = c[..., 0, :, None, None]
    cj = c[..., 1, None, :, None]
    ck = c[..., 2, None, None, :]
    return (2.0 / n**3) * (ci + cj + ck)


def materialize(p: PhaseTensor) -> GcTensor:
    return GcTensor(module_activations(p.phases, p.config.n), p.config)


@functools.lru_cache(maxsize=8)
def _dft_matrix(n: int) -> np.ndarray:
    """Forward 3D DFT on a flattened n*n*n module (row-major), unnormalized."""
    w = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
    m = np.kron(np.kron(w, w), w)
    m.setflags(write=False)
    return m


def module_dft(data: np.ndarray) -> np.ndarray:
    """Unnormalized 3D DFT over the last three axes."""
    n = data.shape[-1]
    if n**3 > DENSE_DFT_MAX:
        return np.fft.fftn(data, axes=SPATIAL_AXES)
    flat = data.reshape(-1, n**3)
    return (flat @ _dft_matrix(n).T).reshape(data.shape)


def module_idft(spectrum: np.ndarray) -> np.ndarray:
    """Inverse of ``module_dft`` (carries the 1/n^3 factor)."""
    n = spectrum.shape[-1]
    if n**3 > DENSE_DFT_MAX:
        return np.fft.ifftn(spectrum, axes=SPATIAL_AXES)
    flat = spectrum.reshape(-1, n**3)
    return (flat @ _dft_matrix(n).conj().T / n**3).reshape(spectrum.shape)


def fundamental_coefficients(data: np.ndarray) -> np.ndarray:
    """DFT coefficients at the +1 bin of each module axis, shape ``(..., 3)``."""
    spectrum = module_dft(data)
    return np.stack(
        [spectrum[..., 1, 0, 0], spectrum[..., 0, 1, 0], spectrum[..., 0, 0, 1]],
        axis=-1,
    )


def coefficients_to_phases(coeffs: np.ndarray, n: int) -> np.ndarray:
    return np.mod(-n / (2.0 * np.pi) * np.angle(coeffs), n)


def extract_phases(v: GcTensor) -> PhaseTensor:
    coeffs = fundamental_coefficients(v.data)
    err = np.max(np.abs(np.abs(coeffs) - 1.0))
    if err > PURE_TOL:
        raise NotPureError(
            f"not a pure vector: fundamental amplitudes deviate from 1 by up to {err:.3g}"
        )
    return PhaseTensor(coefficients_to_phases(coeffs, v.config.n), v.config)


def zero_phases(config: GridConfig) -> PhaseTensor:
    return PhaseTensor(np.zeros((config.n_s, config.n_theta, 3)), config)


def identity(config: GridConfig) -> GcTensor:
    """Binding identity for pure vectors (all phases zero)."""
    return materialize(zero_phases(config))


def random_phases(config: GridConfig, rng: np.random.Generator) -> PhaseTensor:
    return PhaseTensor(
        rng.uniform(0.0, config.n, size=(config.n_s, config.n_theta, 3)), config
    )


def random_symbol(config: GridConfig, rng: np.random.Generator) -> GcTensor:
    return materialize(random_phases(config, rng))


def bundle(vs: Sequence[GcTensor], weights: Sequence[float] | None = None) -> GcTensor:
    if len(vs) == 0:
        raise GcVsaError("cannot bundle an empty list")
    cfg = _check_same_config(*vs)
    if weights is None:
        weights = np.ones(len(vs))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(vs),):
        raise GcVsaError(f"expected {len(vs)} weights, got {weights.shape}")
    stacked = np.stack([v.data for v in vs])
    return GcTensor(np.tensordot(weights, stacked, axes=1), cfg)


def _real_inverse(spectrum: np.ndarray) -> np.ndarray:
    out = module_idft(spectrum)
    residue = np.max(np.abs(out.imag)) if out.size else 0.0
    scale = max(1.0, float(np.max(np.abs(out.real))) if out.size else 1.0)
    if residue > IMAG_TOL * scale:
        raise ArithmeticError(f"inverse DFT left imaginary residue {residue:.3g}")
    return out.real


def bind(u: GcTensor, v: GcTensor) -> GcTensor:
    cfg = _check_same_config(u, v)
    fu = module_dft(u.data)
    fv = module_dft(v.data)
    return GcTensor(_real_inverse(fu * fv), cfg)


def bind_all(vs: Sequence[GcTensor]) -> GcTensor:
    if len(vs) == 0:
        raise GcVsaError("cannot bind an empty list")
    cfg = _check_same_config(*vs)
    spectrum = np.ones(cfg.shape, dtype=np.complex128)
    for v in vs:
        spectrum = spectrum * module_dft(v.data)
    return GcTensor(_real_inverse(spectrum), cfg)


def unbind(u: GcTensor, v: GcTensor) -> GcTensor:
    """Module-wise circular correlation: removes ``v`` from ``u``."""
    cfg = _check_same_config(u, v)
    fu = module_dft(u.data)
    fv = module_dft(v.data)
    return GcTensor(_real_inverse(fu * np.conj(fv)), cfg)


def fractional_power(base: PhaseTensor, exponent: float) -> PhaseTensor:
    """Self-binding of ``base`` raised to a real exponent.

    Phases are taken on the principal branch ``[-n/2, n/2)`` before scaling,
    which is the usual FPE choice: the generator's lowest-frequency
    representative is the one that gets interpolated.
    """
    return PhaseTensor(float(exponent) * base.signed(), base.config)


def cosine_similarity(a: GcTensor, b: GcTensor) -> float:
    _check_same_config(a, b)
    na, nb = a.norm, b.norm
    if na == 0.0 or nb == 0.0:
        raise GcVsaError("cosine similarity is undefined for a zero-norm tensor")
    sim = float(np.dot(a.flat(), b.flat()) / (na * nb))
    return min(1.0, max(-1.0, sim))
