"""twinellip: twin-photon ellipsometry simulation and parameter estimation.

Forward models for the coincidence rates of the beam-splitter (with and
without residual birefringent delay) and entangled configurations, a
Fock-space brute-force oracle that recomputes those rates from explicit
amplitude bookkeeping, and estimators recovering (C, psi, delta) from counts
with Poisson shot-noise Monte Carlo analysis.
"""
from ._kernels import KERNEL_BACKEND
from .estimate import (
    EstimationResult,
    MeasurementRecord,
    PrecisionReport,
    SweepDesign,
    fit_sweep,
    invert_three_point,
    monte_carlo_precision,
    poisson_counts,
)
from .fock import (
    FrequencyGrid,
    LossyElement,
    TwoPhotonStateVector,
    apply_sample,
    build_state,
    fourth_order_coherence,
    oracle_rate,
    time_averaged_rate,
)
from .jones import (
    TwinPhotonField,
    TwinPhotonJonesMatrix,
    analyzer_pair,
    apply_twin_matrix,
    compose,
    polarizer_matrix,
    sample_matrix,
)
from .rates import (
    AnalyzerSettings,
    Configuration,
    RateScale,
    SampleParams,
    Variant,
    rate_compensated,
    rate_entangled,
    rate_general,
    rate_unentangled,
    singles_rate,
    sweep,
)
from .source import (
    CompensatorDelay,
    SpdcState,
    SpectrumModel,
    SpectrumShape,
    SourceKind,
    envelope,
    joint_amplitude,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "__version__",
    # polarization core
    "polarizer_matrix",
    "sample_matrix",
    "TwinPhotonField",
    "TwinPhotonJonesMatrix",
    "analyzer_pair",
    "apply_twin_matrix",
    "compose",
    # source models
    "SpdcState",
    "SourceKind",
    "SpectrumModel",
    "SpectrumShape",
    "CompensatorDelay",
    "envelope",
    "joint_amplitude",
    # coincidence engine
    "Variant",
    "SampleParams",
    "AnalyzerSettings",
    "RateScale",
    "Configuration",
    "rate_unentangled",
    "rate_compensated",
    "rate_entangled",
    "rate_general",
    "singles_rate",
    "sweep",
    # fock oracle
    "FrequencyGrid",
    "TwoPhotonStateVector",
    "LossyElement",
    "build_state",
    "apply_sample",
    "fourth_order_coherence",
    "time_averaged_rate",
    "oracle_rate",
    # estimation
    "MeasurementRecord",
    "EstimationResult",
    "SweepDesign",
    "PrecisionReport",
    "invert_three_point",
    "fit_sweep",
    "poisson_counts",
    "monte_carlo_precision",
]
