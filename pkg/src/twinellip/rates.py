"""Coincidence-rate forward models.

Closed forms for the three optical configurations plus a generic
field-pipeline evaluator that recomputes rates from first principles of the
twin-photon Jones formalism, used to cross-check the closed forms.

Closed-form brackets (rate / C):

    unentangled:  tan^2(psi) cos^2(t1) sin^2(t2) + sin^2(t1) cos^2(t2)
                    - 2 tan(psi) cos(delta) cos(t1) cos(t2) sin(t1) sin(t2)
    compensated:  same with the cross term multiplied by Phi(tau) cos(w0 tau)
    entangled:    same as unentangled with + on the cross term

The constant C absorbs |r2|^2, detector efficiencies, accumulation time and
post-selection fractions; rates are therefore reported as C times the bracket.

Everything here is pure and operates on immutable values; sweeps may be
evaluated concurrently in chunks with deterministic assembly.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import jones
from ._kernels import bracket_values
from .jones import TwinPhotonField, TwinPhotonJonesMatrix, analyzer_pair, apply_twin_matrix
from .source import CompensatorDelay, SourceKind, SpdcState, SpectrumModel, envelope

__all__ = [
    "Variant",
    "SampleParams",
    "AnalyzerSettings",
    "RateScale",
    "Configuration",
    "UnsupportedTopologyError",
    "beam_splitter_field",
    "entangled_field",
    "cross_factor",
    "rate_unentangled",
    "rate_compensated",
    "rate_entangled",
    "rate_for",
    "rate_general",
    "singles_rate",
    "sweep",
]


class UnsupportedTopologyError(ValueError):
    """An element chain the pipeline cannot model (beam mixing after analyzers)."""


class Variant(enum.Enum):
    UNENTANGLED = "unentangled"
    COMPENSATED = "compensated"
    ENTANGLED = "entangled"


def _wrap_pi(x: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(x + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class SampleParams:
    """The sample's two eigenpolarization reflection coefficients.

    tan(psi) = |r1/r2| and delta = arg(r1) - arg(r2); only (psi, delta) are
    observable — a common phase on (r1, r2) drops out of every rate.
    """

    r1: complex
    r2: complex

    def __post_init__(self):
        r1, r2 = complex(self.r1), complex(self.r2)
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", r2)
        if not (cmath.isfinite(r1) and cmath.isfinite(r2)):
            raise ValueError("reflection coefficients must be finite")
        if abs(r1) > 1.0 + 1e-12 or abs(r2) > 1.0 + 1e-12:
            raise ValueError(
                f"passive sample requires |r| <= 1, got |r1|={abs(r1)}, |r2|={abs(r2)}"
            )
        if r2 == 0:
            raise ValueError("r2 must be nonzero so that tan(psi) is finite")

    @classmethod
    def from_psi_delta(cls, psi: float, delta: float) -> "SampleParams":
        """Build from the ellipsometric angles (radians).

        |r2| is set to min(1, cot(psi)) so both coefficients stay passive over
        the full psi range; for psi <= 45 deg this gives |r2| = 1.
        """
        if not (0.0 <= psi < math.pi / 2):
            raise ValueError(f"psi must be in [0, pi/2), got {psi}")
        t = math.tan(psi)
        r2_mag = min(1.0, 1.0 / t) if t > 0 else 1.0
        return cls(r1=t * r2_mag * cmath.exp(1j * delta), r2=r2_mag)

    @property
    def tan_psi(self) -> float:
        return abs(self.r1) / abs(self.r2)

    @property
    def psi(self) -> float:
        return math.atan2(abs(self.r1), abs(self.r2))

    @property
    def delta(self) -> float:
        return _wrap_pi(cmath.phase(self.r1) - cmath.phase(self.r2))

    @property
    def is_mirror(self) -> bool:
        return self.r1 == self.r2


@dataclass(frozen=True)
class AnalyzerSettings:
    """Analyzer pass-axis angles, radians from horizontal."""

    theta1: float
    theta2: float

    def __post_init__(self):
        if not (math.isfinite(self.theta1) and math.isfinite(self.theta2)):
            raise ValueError("analyzer angles must be finite")


@dataclass(frozen=True)
class RateScale:
    """Overall coincidence scale C in counts/second."""

    c: float

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"rate scale must be positive and finite, got {self.c}")


@dataclass(frozen=True)
class Configuration:
    """One of the three measurement configurations with its sample and scale."""

    variant: Variant
    sample: SampleParams
    scale: RateScale
    compensator: CompensatorDelay | None = None
    spectrum: SpectrumModel | None = None

    def __post_init__(self):
        if self.variant is Variant.COMPENSATED:
            if self.compensator is None or self.spectrum is None:
                raise ValueError(
                    "compensated configuration requires compensator and spectrum"
                )
        elif self.compensator is not None or self.spectrum is not None:
            raise ValueError(
                f"{self.variant.value} configuration forbids compensator/spectrum"
            )

    def source_state(self) -> SpdcState:
        if self.variant is Variant.ENTANGLED:
            return SpdcState(SourceKind.ENTANGLED)
        return SpdcState(SourceKind.PRODUCT)


# --------------------------------------------------------------------------
# Source fields for the pipeline
# --------------------------------------------------------------------------

def beam_splitter_field() -> TwinPhotonField:
    """Twin-photon field of the collinear pair after the beam splitter.

    Beam 1 carries j(-A_s + A_i), beam 2 carries A_s + A_i, with the signal
    horizontally and the idler vertically polarized; the 50% post-selection
    fraction is absorbed into the rate scale.
    """
    return TwinPhotonField(
        beam1=np.array([[-1j, 0.0], [0.0, 1j]]),
        beam2=np.array([[1.0, 0.0], [0.0, 1.0]]),
    )


def entangled_field(relative_phase: float = 0.0) -> TwinPhotonField:
    """Twin-photon field of the non-collinear (entangled) pair.

    Each beam can receive either the H (signal) or V (idler) photon; the
    coincidence pairing of `rate_general` then post-selects the
    (|HV> + e^{j chi} |VH>) structure automatically.
    """
    return TwinPhotonField(
        beam1=np.eye(2, dtype=complex),
        beam2=np.array([[cmath.exp(1j * relative_phase), 0.0], [0.0, 1.0]]),
    )


def source_field(source: SpdcState) -> TwinPhotonField:
    if source.kind is SourceKind.PRODUCT:
        return beam_splitter_field()
    return entangled_field(source.relative_phase)


# --------------------------------------------------------------------------
# Closed forms
# --------------------------------------------------------------------------

def cross_factor(cfg: Configuration) -> float:
    """Interference attenuation Phi(tau) cos(w0 tau); 1 unless compensated."""
    if cfg.variant is not Variant.COMPENSATED:
        return 1.0
    tau = cfg.compensator.tau
    return envelope(cfg.spectrum, tau) * math.cos(cfg.spectrum.center * tau)


def _bracket(cfg: Configuration, a: AnalyzerSettings, cross: float, sign: float) -> float:
    val = bracket_values(
        cfg.sample.tan_psi,
        math.cos(cfg.sample.delta),
        cross,
        sign,
        a.theta1,
        a.theta2,
    )
    return float(val)


def rate_unentangled(cfg: Configuration, a: AnalyzerSettings) -> float:
    """Coincidence rate of the beam-splitter configuration (minus cross sign)."""
    if cfg.variant is not Variant.UNENTANGLED:
        raise ValueError(f"expected unentangled configuration, got {cfg.variant}")
    return cfg.scale.c * _bracket(cfg, a, 1.0, -1.0)


def rate_compensated(cfg: Configuration, a: AnalyzerSettings) -> float:
    """Beam-splitter configuration with residual birefringent delay tau.

    The cross term is attenuated by Phi(tau) cos(w0 tau); tau = 0 recovers
    `rate_unentangled` identically.
    """
    if cfg.variant is not Variant.COMPENSATED:
        raise ValueError(f"expected compensated configuration, got {cfg.variant}")
    return cfg.scale.c * _bracket(cfg, a, cross_factor(cfg), -1.0)


def rate_entangled(cfg: Configuration, a: AnalyzerSettings) -> float:
    """Coincidence rate of the entangled configuration (plus cross sign)."""
    if cfg.variant is not Variant.ENTANGLED:
        raise ValueError(f"expected entangled configuration, got {cfg.variant}")
    return cfg.scale.c * _bracket(cfg, a, 1.0, +1.0)


_RATE_FNS = {
    Variant.UNENTANGLED: rate_unentangled,
    Variant.COMPENSATED: rate_compensated,
    Variant.ENTANGLED: rate_entangled,
}


def rate_for(cfg: Configuration, a: AnalyzerSettings) -> float:
    """Dispatch to the configuration's rate function."""
    return _RATE_FNS[cfg.variant](cfg, a)


# --------------------------------------------------------------------------
# Generic pipeline
# --------------------------------------------------------------------------

def two_photon_amplitudes(field: TwinPhotonField) -> np.ndarray:
    """Two-photon detection amplitudes A[p, q] for polarizations p at D1, q at D2.

    A[p, q] = F1[p, s] F2[q, i] + F1[p, i] F2[q, s]: the signal reaches
    detector 1 and the idler detector 2, plus the swapped pairing.
    """
    f1, f2 = field.beam1, field.beam2
    return np.outer(f1[:, 0], f2[:, 1]) + np.outer(f1[:, 1], f2[:, 0])


def rate_general(
    elements: Sequence[TwinPhotonJonesMatrix],
    source: SpdcState,
    scale: RateScale,
) -> float:
    """Coincidence rate from the full field pipeline.

    Builds the post-source twin-photon field, applies `elements` in physical
    order, and returns scale times the squared two-photon detection amplitude
    summed over output polarizations. When the chain ends in analyzers this
    equals scale * |a1 b2 + a2 b1|^2 with a_k, b_k the per-beam signal/idler
    amplitudes along each pass axis.

    Raises UnsupportedTopologyError for elements that mix the beams after an
    analyzer stage.
    """
    field = source_field(source)
    seen_projector = False
    for element in elements:
        if element.mixes_beams and seen_projector:
            raise UnsupportedTopologyError(
                "beam-mixing element after an analyzer stage is not supported"
            )
        if element.is_projector_pair:
            seen_projector = True
        field = apply_twin_matrix(element, field)
    amps = two_photon_amplitudes(field)
    return scale.c * float(np.sum(np.abs(amps) ** 2))


def pipeline_elements(cfg: Configuration, a: AnalyzerSettings) -> list[TwinPhotonJonesMatrix]:
    """Sample-in-beam-1 followed by the analyzer pair."""
    sample_stage = TwinPhotonJonesMatrix.diagonal(
        jones.sample_matrix(cfg.sample), jones.jones_identity()
    )
    return [sample_stage, analyzer_pair(a.theta1, a.theta2)]


def singles_rate(cfg: Configuration, which_detector: int, theta: float) -> float:
    """Marginal detection rate at one detector behind an analyzer at `theta`.

    Normalized to the photon flux reaching that detector's analyzer, so the
    entangled source gives the analyzer-independent value C * (tan^2 psi
    cos^2 theta + sin^2 theta) / (1 + tan^2 psi) in the sample arm and C/2 in
    the free arm.
    """
    if which_detector not in (1, 2):
        raise ValueError(f"detector must be 1 or 2, got {which_detector}")
    field = source_field(cfg.source_state())
    sample_stage = TwinPhotonJonesMatrix.diagonal(
        jones.sample_matrix(cfg.sample), jones.jones_identity()
    )
    field = apply_twin_matrix(sample_stage, field)
    beam = field.beam1 if which_detector == 1 else field.beam2
    pre_flux = float(np.sum(np.abs(beam) ** 2))
    axis = np.array([math.cos(theta), math.sin(theta)])
    post_flux = float(np.sum(np.abs(axis @ beam) ** 2))
    return cfg.scale.c * post_flux / pre_flux


def sweep(
    cfg: Configuration, theta1: float, theta2_grid: Iterable[float]
) -> list[tuple[AnalyzerSettings, float]]:
    """Rates over a grid of second-analyzer angles at fixed theta1."""
    grid = np.asarray(list(theta2_grid), dtype=float)
    if grid.size == 0:
        raise ValueError("theta2 grid must be nonempty")
    sign = +1.0 if cfg.variant is Variant.ENTANGLED else -1.0
    brackets = bracket_values(
        cfg.sample.tan_psi,
        math.cos(cfg.sample.delta),
        cross_factor(cfg),
        sign,
        np.full_like(grid, theta1),
        grid,
    )
    rates = cfg.scale.c * np.asarray(brackets, dtype=float)
    return [
        (AnalyzerSettings(theta1, float(t2)), float(r))
        for t2, r in zip(grid, rates)
    ]
