"""Rotation along the orientation axis of the 5D tensor.

Every ring (fixed scale and neuron index, varying orientation) is circularly
convolved with a fractional power of a one-hot kernel at slot 1. Because the
module orientations are spaced evenly around the circle, shifting a ring by
one slot turns the encoded point by ``2*pi/n_theta``.
"""

from __future__ import annotations

import numpy as np

from .core import GcTensor, GcVsaError

ORIENT_AXIS = 1
FLAT_RATIO = 1.2


class AngleUndecodableError(GcVsaError):
    pass


def rotation_base(n_theta: int) -> np.ndarray:
    ring = np.zeros(n_theta)
    ring[1 % n_theta] = 1.0
    return ring


def _signed_freqs(n_theta: int) -> np.ndarray:
    # principal branch for the fractional power; the Nyquist bin of an even
    # ring is zeroed below to keep the output real
    return np.fft.fftfreq(n_theta) * n_theta


def rotation_kernel_spectrum(n_theta: int, slots: float) -> np.ndarray:
    """DFT of the one-hot base raised to the power ``slots``."""
    f = _signed_freqs(n_theta)
    spec = np.exp(-2j * np.pi * f * slots / n_theta)
    if n_theta % 2 == 0 and not float(slots).is_integer():
        spec[n_theta // 2] = np.cos(np.pi * slots)
    return spec


def _ring_convolve(v: GcTensor, spec: np.ndarray) -> GcTensor:
    shape = [1] * v.data.ndim
    shape[ORIENT_AXIS] = len(spec)
    out = np.fft.ifft(
        np.fft.fft(v.data, axis=ORIENT_AXIS) * spec.reshape(shape), axis=ORIENT_AXIS
    )
    return GcTensor(out.real, v.config)


def rotate(v: GcTensor, alpha: float) -> GcTensor:
    """Rotate the encoded content counter-clockwise by ``alpha`` radians.

    Exact in ring-slot space; in Cartesian space it only holds close to the
    origin, because rings are sampled at ``n_theta`` orientations.
    """
    n_theta = v.config.n_theta
    slots = float(alpha) * n_theta / (2.0 * np.pi)
    return _ring_convolve(v, rotation_kernel_spectrum(n_theta, slots))


def permute_orientation(v: GcTensor, steps: int) -> GcTensor:
    return GcTensor(np.roll(v.data, int(steps), axis=ORIENT_AXIS), v.config)


def angle_profile(v_rotated: GcTensor, v_reference: GcTensor) -> np.ndarray:
    """Ring-wise circular correlation summed over every non-orientation axis."""
    if v_rotated.config != v_reference.config:
        raise GcVsaError("operands were built with different GridConfigs")
    fa = np.fft.fft(v_rotated.data, axis=ORIENT_AXIS)
    fb = np.fft.fft(v_reference.data, axis=ORIENT_AXIS)
    corr = np.fft.ifft(fa * np.conj(fb), axis=ORIENT_AXIS).real
    other = tuple(a for a in range(corr.ndim) if a != ORIENT_AXIS)
    return corr.sum(axis=other)


def decode_angle(v_rotated: GcTensor, v_reference: GcTensor) -> float:
    """Angle in ``[0, 2*pi)`` by which ``v_reference`` was turned to get ``v_rotated``."""
    profile = angle_profile(v_rotated, v_reference)
    top = float(profile.max())
    mean = float(profile.mean())
    if top <= 0.0 or (mean > 0.0 and top / mean < FLAT_RATIO):
        raise AngleUndecodableError(
            "angle undecodable: orientation profile is flat "
            f"(max {top:.3g}, mean {mean:.3g})"
        )
    return int(np.argmax(profile)) * 2.0 * np.pi / v_rotated.config.n_theta
