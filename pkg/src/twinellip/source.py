"""Downconversion source models: pair states, spectra, compensation delay.

The two-photon polarization state is either the entangled superposition
(|HV> + |VH>)/sqrt(2) of the non-collinear configuration or the product |HV>
of the collinear one. The spectral envelope Phi(tau) is the Fourier transform
of the normalized power spectrum of the pair; tau is the residual
birefringent delay after compensation (0 = fully compensated).

Immutable values, pure functions.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SourceKind",
    "SpectrumShape",
    "SpdcState",
    "SpectrumModel",
    "CompensatorDelay",
    "envelope",
    "power_spectrum",
    "joint_amplitude",
    "sampled_joint_amplitude",
    "InvalidConfigurationError",
]


class InvalidConfigurationError(ValueError):
    """A physically inconsistent source/grid combination."""


class SourceKind(enum.Enum):
    ENTANGLED = "entangled"
    PRODUCT = "product"


class SpectrumShape(enum.Enum):
    GAUSSIAN = "gaussian"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class SpdcState:
    """Two-photon polarization state emitted by the crystal.

    `relative_phase` is the phase between the |HV> and |VH> branches of the
    entangled state; it defaults to 0 (adjustable at the crystal) and has no
    effect on the product state.
    """

    kind: SourceKind = SourceKind.ENTANGLED
    relative_phase: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.relative_phase):
            raise ValueError("relative_phase must be finite")

    def branch_amplitudes(self) -> tuple[complex, complex]:
        """Normalized amplitudes of the |HV> and |VH> branches."""
        if self.kind is SourceKind.PRODUCT:
            return (1.0 + 0.0j, 0.0 + 0.0j)
        inv = 1.0 / math.sqrt(2.0)
        return (inv + 0.0j, inv * np.exp(1j * self.relative_phase))


@dataclass(frozen=True)
class SpectrumModel:
    """Normalized pair power spectrum.

    `center` is half the pump frequency; `bandwidth` is the standard deviation
    for the Gaussian shape and the full width for the rectangular one (both in
    rad/s). The envelope below is normalized so Phi(0) = 1.
    """

    shape: SpectrumShape = SpectrumShape.GAUSSIAN
    center: float = 2.325e15
    bandwidth: float = 1e13

    def __post_init__(self):
        if not (self.center > 0 and math.isfinite(self.center)):
            raise ValueError(f"center must be positive and finite, got {self.center}")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth}")


@dataclass(frozen=True)
class CompensatorDelay:
    """Residual birefringent delay in seconds; 0 means full compensation."""

    tau: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.tau):
            raise ValueError("tau must be finite")


def envelope(spectrum: SpectrumModel, tau: float) -> float:
    """Phi(tau): Fourier transform of the normalized power spectrum.

    Gaussian (std sigma): exp(-sigma^2 tau^2 / 2). Rectangular (full width W):
    sin(W tau / 2) / (W tau / 2). Phi(0) = 1 and |Phi| <= 1 for both.
    """
    if spectrum.shape is SpectrumShape.GAUSSIAN:
        return float(np.exp(-0.5 * (spectrum.bandwidth * tau) ** 2))
    x = 0.5 * spectrum.bandwidth * tau
    return float(np.sinc(x / np.pi))


def power_spectrum(spectrum: SpectrumModel, omega) -> np.ndarray:
    """Normalized power spectral density S(omega), integral 1 over omega."""
    omega = np.asarray(omega, dtype=float)
    sig = spectrum.bandwidth
    if spectrum.shape is SpectrumShape.GAUSSIAN:
        return np.exp(-0.5 * ((omega - spectrum.center) / sig) ** 2) / (
            sig * math.sqrt(2.0 * math.pi)
        )
    inside = np.abs(omega - spectrum.center) <= 0.5 * sig
    return np.where(inside, 1.0 / sig, 0.0)


def joint_amplitude(spectrum: SpectrumModel, omega: float, pump: float) -> float:
    """Pair amplitude phi(omega, pump - omega), real nonnegative.

    Defined as the square root of the normalized power spectrum (whose
    transform is the envelope above), up to the grid-dependent normalization
    applied in `sampled_joint_amplitude`. Frequency matching requires
    pump = 2 * center.
    """
    if not math.isclose(pump, 2.0 * spectrum.center, rel_tol=1e-12):
        raise InvalidConfigurationError(
            f"pump frequency {pump} does not match twice the spectrum center "
            f"{2.0 * spectrum.center}"
        )
    return float(np.sqrt(power_spectrum(spectrum, omega)))


def sampled_joint_amplitude(spectrum: SpectrumModel, omegas: np.ndarray,
                            step: float) -> np.ndarray:
    """phi sampled on a uniform grid, renormalized so sum |phi|^2 * step = 1."""
    power = power_spectrum(spectrum, omegas)
    total = float(np.sum(power) * step)
    if total <= 0.0:
        raise InvalidConfigurationError(
            "frequency grid does not overlap the spectrum support"
        )
    return np.sqrt(power / total)
