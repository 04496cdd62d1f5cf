"""Brute-force verifier: discretized two-photon Fock-state bookkeeping.

Recomputes coincidence rates from explicit amplitude bookkeeping over a
frequency grid — frequency-anticorrelated pair state, lossy beam-splitter
sample model with flagged vacuum-loss paths, analyzer projections, and a
numerically time-averaged fourth-order coherence — with no reliance on the
closed forms in `rates`.

State layout: the pair is stored as amp[m, sp, ip] where m indexes the signal
frequency w0 + q_m (the idler sits at w0 - q_m by energy conservation), sp is
the spatial path of the signal photon (always H-polarized) and ip the path of
the idler (always V). Paths start as ("beam1", "beam2"); every lossy element
application spawns fresh terminal loss paths so the total norm over monitored
plus loss paths stays exactly 1.

Rates are reported relative to the crossed reference setting
(theta1, theta2) = (90 deg, 0 deg), where every variant's closed-form bracket
equals 1; this reproduces the C convention of the closed forms (which absorb
|r2|^2 and all post-selection fractions) without consulting them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import time_average_intensity
from .rates import AnalyzerSettings, Configuration, RateScale, Variant
from .source import (
    InvalidConfigurationError,
    SourceKind,
    SpdcState,
    SpectrumModel,
    sampled_joint_amplitude,
)

__all__ = [
    "FrequencyGrid",
    "TwoPhotonStateVector",
    "LossyElement",
    "build_state",
    "apply_sample",
    "fourth_order_coherence",
    "time_averaged_rate",
    "oracle_rate",
    "default_grid",
]

BEAM1, BEAM2 = "beam1", "beam2"

N_TIME_SAMPLES = 512


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid symmetric about the spectrum center.

    Signal modes sit at center + q with q = (k + 1/2 - n/2) * step for
    k = 0..n-1, so each signal frequency's energy-conserving idler partner
    center - q is also on the grid (the mirrored mode).
    """

    n_modes: int
    center: float
    span: float

    def __post_init__(self):
        if self.n_modes < 2 or self.n_modes % 2 != 0:
            raise ValueError(f"n_modes must be even and >= 2, got {self.n_modes}")
        if not (self.center > 0 and math.isfinite(self.center)):
            raise ValueError("center must be positive and finite")
        if not (0 < self.span < 2 * self.center):
            raise ValueError("span must be positive and below twice the center")

    @property
    def step(self) -> float:
        return self.span / self.n_modes

    def detunings(self) -> np.ndarray:
        """Signal-mode offsets q_m from the center, ascending."""
        k = np.arange(self.n_modes)
        return (k + 0.5 - self.n_modes / 2) * self.step

    def signal_frequencies(self) -> np.ndarray:
        return self.center + self.detunings()

    def idler_frequencies(self) -> np.ndarray:
        return self.center - self.detunings()

    def mirror_indices(self) -> np.ndarray:
        """Index of the mode at -q_m for each m (reversal on this layout)."""
        return np.arange(self.n_modes)[::-1]

    def period(self) -> float:
        """Time span over which the discrete spectrum's beats are periodic."""
        return 2.0 * math.pi / self.step


@dataclass(frozen=True)
class TwoPhotonStateVector:
    """Exactly-two-photon amplitude map over (frequency, paths)."""

    grid: FrequencyGrid
    signal_paths: tuple[str, ...]
    idler_paths: tuple[str, ...]
    amp: np.ndarray  # (n_modes, n_signal_paths, n_idler_paths) complex

    def __post_init__(self):
        a = np.asarray(self.amp, dtype=complex)
        expected = (self.grid.n_modes, len(self.signal_paths), len(self.idler_paths))
        if a.shape != expected:
            raise ValueError(f"amplitude shape {a.shape} != {expected}")
        if not np.all(np.isfinite(a.view(float))):
            raise ValueError("amplitudes must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "amp", a)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amp) ** 2)))

    def path_index(self, which: str, path: str) -> int:
        paths = self.signal_paths if which == "signal" else self.idler_paths
        try:
            return paths.index(path)
        except ValueError:
            raise KeyError(f"{which} path {path!r} not present in state") from None

    def coincidence_branches(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-mode amplitudes of the (signal@D1, idler@D2) and swapped branches."""
        s1, s2 = self.path_index("signal", BEAM1), self.path_index("signal", BEAM2)
        i1, i2 = self.path_index("idler", BEAM1), self.path_index("idler", BEAM2)
        return self.amp[:, s1, i2].copy(), self.amp[:, s2, i1].copy()


@dataclass(frozen=True)
class LossyElement:
    """Lossless-beam-splitter model of one reflection coefficient.

    Transforms the monitored mode as b = j*r*a + t*a_vac with |r|^2 + |t|^2
    = 1, so commutation relations (and hence the state norm over monitored
    plus loss ports) are preserved. The phase of t is physically irrelevant to
    coincidences; it is kept free so that claim is testable.
    """

    r: complex
    t: complex

    def __post_init__(self):
        budget = abs(self.r) ** 2 + abs(self.t) ** 2
        if not math.isclose(budget, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"|r|^2 + |t|^2 must be 1, got {budget}")

    @classmethod
    def from_reflection(cls, r: complex, t_phase: float = 0.0) -> "LossyElement":
        mag = abs(r)
        if mag > 1.0 + 1e-12:
            raise ValueError(f"|r| must be <= 1, got {mag}")
        t = math.sqrt(max(0.0, 1.0 - mag * mag)) * np.exp(1j * t_phase)
        return cls(r=complex(r), t=complex(t))


def build_state(
    grid: FrequencyGrid,
    spectrum: SpectrumModel,
    source: SpdcState,
    tau: float = 0.0,
) -> TwoPhotonStateVector:
    """Normalized discrete pair state with residual birefringent delay tau.

    The product source is taken at the beam-splitter output (the layout that
    defines the unentangled configuration); the entangled source puts the
    H photon in either beam with the V photon opposite. tau enters as the
    per-mode phase e^{j w tau} on the vertically polarized (idler) photon when
    it sits in beam 1; tau = 0 is the fully compensated state.
    """
    if not math.isclose(grid.center, spectrum.center, rel_tol=1e-12):
        raise InvalidConfigurationError(
            f"grid center {grid.center} does not match spectrum center {spectrum.center}"
        )
    phi = sampled_joint_amplitude(spectrum, grid.signal_frequencies(), grid.step)
    phi = phi * math.sqrt(grid.step)  # unit discrete norm: sum |phi|^2 = 1

    paths = (BEAM1, BEAM2)
    amp = np.zeros((grid.n_modes, 2, 2), dtype=complex)
    if source.kind is SourceKind.PRODUCT:
        u_signal = np.array([-1j, 1.0]) / math.sqrt(2.0)  # beam amplitudes of H
        u_idler = np.array([+1j, 1.0]) / math.sqrt(2.0)  # beam amplitudes of V
        amp = phi[:, None, None] * np.einsum("p,q->pq", u_signal, u_idler)[None, :, :]
    else:
        hv, vh = source.branch_amplitudes()
        amp[:, 0, 1] = phi * hv  # H in beam 1, V in beam 2
        amp[:, 1, 0] = phi * vh  # H in beam 2, V in beam 1
    if tau != 0.0:
        amp = amp.copy()
        amp[:, :, 0] *= np.exp(1j * grid.idler_frequencies() * tau)[:, None]
    return TwoPhotonStateVector(grid, paths, paths, amp)


def apply_sample(
    state: TwoPhotonStateVector,
    element_h: LossyElement,
    element_v: LossyElement,
    path: str = BEAM1,
) -> TwoPhotonStateVector:
    """Reflect the photons in `path` off the sample.

    The H (signal) photon transforms by element_h, the V (idler) photon by
    element_v: the j*r-weighted part stays in `path`, the t-weighted part is
    routed to a fresh terminal loss path, keeping the total norm at 1.
    """
    s_idx = state.path_index("signal", path)
    i_idx = state.path_index("idler", path)
    tag = len(state.signal_paths) + len(state.idler_paths)

    signal_paths = state.signal_paths + (f"loss{tag}:H",)
    idler_paths = state.idler_paths + (f"loss{tag}:V",)
    amp = np.zeros(
        (state.grid.n_modes, len(signal_paths), len(idler_paths)), dtype=complex
    )
    amp[:, : len(state.signal_paths), : len(state.idler_paths)] = state.amp

    # Signal (H) photon in `path`: split between the monitored and loss ports.
    monitored = amp[:, s_idx, :].copy()
    amp[:, s_idx, :] = monitored * (1j * element_h.r)
    amp[:, -1, :] = monitored * element_h.t
    # Idler (V) photon likewise (acts after the signal split on all columns).
    monitored = amp[:, :, i_idx].copy()
    amp[:, :, i_idx] = monitored * (1j * element_v.r)
    amp[:, :, -1] = monitored * element_v.t
    return TwoPhotonStateVector(state.grid, signal_paths, idler_paths, amp)


def _branch_amplitudes(
    state: TwoPhotonStateVector, analyzers: AnalyzerSettings
) -> tuple[np.ndarray, np.ndarray]:
    """Analyzer-projected per-mode amplitudes of the two coincidence branches.

    Only the (beam1, beam2) and (beam2, beam1) path sectors can produce a
    coincidence; projecting the vacuum-detection bra kills every loss-path and
    same-beam term, which is the single surviving term of the Fock-basis
    identity-resolution of the coherence function.
    """
    fwd, rev = state.coincidence_branches()
    c1, s1 = math.cos(analyzers.theta1), math.sin(analyzers.theta1)
    c2, s2 = math.cos(analyzers.theta2), math.sin(analyzers.theta2)
    # forward: H photon at D1 (cos t1), V photon at D2 (sin t2)
    # reverse: H photon at D2 (cos t2), V photon at D1 (sin t1)
    return fwd * (c1 * s2), rev * (s1 * c2)


def fourth_order_coherence(
    state: TwoPhotonStateVector,
    analyzers: AnalyzerSettings,
    t1: float,
    t2: float,
) -> float:
    """G(t1, t2): squared two-photon detection amplitude at the two detectors.

    For the frequency-anticorrelated pair the dependence is on t1 - t2 only
    (the sum-time phase is global).
    """
    fwd, rev = _branch_amplitudes(state, analyzers)
    w_s = state.grid.signal_frequencies()
    w_i = state.grid.idler_frequencies()
    total = np.sum(
        fwd * np.exp(-1j * (w_s * t1 + w_i * t2))
        + rev * np.exp(-1j * (w_s * t2 + w_i * t1))
    )
    return float(abs(total) ** 2)


def _mean_coincidence(
    state: TwoPhotonStateVector, analyzers: AnalyzerSettings
) -> float:
    """G averaged over one beat period of the detection-time difference."""
    fwd, rev = _branch_amplitudes(state, analyzers)
    q = state.grid.detunings()
    period = state.grid.period()
    d_grid = (np.arange(N_TIME_SAMPLES) + 0.5) * (period / N_TIME_SAMPLES)
    return time_average_intensity(fwd, rev, q, d_grid)


_REFERENCE = AnalyzerSettings(math.pi / 2, 0.0)


def time_averaged_rate(
    state: TwoPhotonStateVector,
    analyzers: AnalyzerSettings,
    scale: RateScale,
) -> float:
    """Detector-averaged coincidence rate, in the closed forms' C convention.

    Integrates G over a detection window long compared to the inverse
    bandwidth (one full beat period of the discrete spectrum, 512 samples) and
    normalizes to the crossed reference setting (90 deg, 0 deg).
    """
    reference = _mean_coincidence(state, _REFERENCE)
    if reference <= 0.0:
        raise InvalidConfigurationError(
            "reference setting has zero coincidence flux; cannot normalize"
        )
    return scale.c * _mean_coincidence(state, analyzers) / reference


def default_grid(spectrum: SpectrumModel, n_modes: int = 64,
                 span_sigmas: float = 12.0) -> FrequencyGrid:
    """Grid covering the spectrum: 12 sigma for Gaussian, the full width for
    rectangular."""
    from .source import SpectrumShape

    if spectrum.shape is SpectrumShape.GAUSSIAN:
        span = span_sigmas * spectrum.bandwidth
    else:
        span = spectrum.bandwidth
    return FrequencyGrid(n_modes=n_modes, center=spectrum.center, span=span)


def oracle_rate(
    cfg: Configuration,
    analyzers: AnalyzerSettings,
    grid: FrequencyGrid | None = None,
    spectrum: SpectrumModel | None = None,
    t_phase_h: float = 0.0,
    t_phase_v: float = 0.0,
) -> float:
    """First-principles rate for a configuration, comparable to the closed forms.

    The compensated configuration is evaluated as the average of the +tau and
    -tau states (the delay sign is dithered between accumulation halves),
    which realizes the separable Phi(tau) cos(w0 tau) attenuation of the cross
    term. `t_phase_h`/`t_phase_v` set the (physically irrelevant) transmission
    phases of the sample's loss model.
    """
    if spectrum is None:
        spectrum = cfg.spectrum if cfg.spectrum is not None else SpectrumModel()
    if grid is None:
        grid = default_grid(spectrum)
    element_h = LossyElement.from_reflection(cfg.sample.r1, t_phase_h)
    element_v = LossyElement.from_reflection(cfg.sample.r2, t_phase_v)
    tau = cfg.compensator.tau if cfg.variant is Variant.COMPENSATED else 0.0
    source = cfg.source_state()

    taus = (tau,) if tau == 0.0 else (tau, -tau)
    total = 0.0
    for t in taus:
        state = build_state(grid, spectrum, source, tau=t)
        state = apply_sample(state, element_h, element_v, BEAM1)
        total += time_averaged_rate(state, analyzers, cfg.scale)
    return total / len(taus)
