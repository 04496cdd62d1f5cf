"""Inverse problem: recover (C, psi, delta) from coincidence measurements.

Two estimators are provided: the closed-form three-point inversion (analyzer 2
at 0, 90 and 45 degrees with analyzer 1 fixed away from 0/90) and a damped
Gauss-Newton weighted least-squares fit over arbitrary sweeps, seeded from the
three-point inversion. Shot noise is modeled as pure Poisson counting; the
Monte Carlo harness checks the resulting 1/sqrt(counts) precision scaling.

Internally everything works in the bracket's natural coordinates
(C, tan psi, cos delta); angles appear only at the boundary. Since the rates
contain delta only through cos(delta), just |delta| in [0, pi] is estimable
and that is what `delta_hat` reports.

Monte Carlo trials draw their generators from per-trial seed sequences spawned
deterministically from the master seed, so results do not depend on execution
order or worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._kernels import bracket_values
from .rates import Configuration, Variant, cross_factor as _config_cross_factor, sweep as _sweep
from .source import CompensatorDelay, SpectrumModel, envelope

__all__ = [
    "MeasurementRecord",
    "EstimationResult",
    "SweepDesign",
    "PrecisionRow",
    "PrecisionReport",
    "EstimationError",
    "DegenerateSettingsError",
    "UnidentifiableError",
    "FitConvergenceError",
    "FLAG_CLAMPED_COSDELTA",
    "FLAG_DELTA_UNIDENTIFIABLE",
    "FLAG_DEGENERATE_THETA1",
    "invert_three_point",
    "invert_three_point_rates",
    "fit_sweep",
    "fit_sweep_rates",
    "poisson_counts",
    "poisson_counts_array",
    "monte_carlo_precision",
]

FLAG_CLAMPED_COSDELTA = "clamped_cosdelta"
FLAG_DELTA_UNIDENTIFIABLE = "delta_unidentifiable"
FLAG_DEGENERATE_THETA1 = "degenerate_theta1"

_THETA1_TOL = 1e-6
_MAX_ITERATIONS = 200
_STEP_TOL = 1e-12
_JACOBIAN_FLOOR = 1e-6


class EstimationError(ValueError):
    """Base class for estimator failures."""


class DegenerateSettingsError(EstimationError):
    """theta1 at 0 or 90 degrees: the three-point system is singular."""

    flag = FLAG_DEGENERATE_THETA1


class UnidentifiableError(EstimationError):
    """A required rate is zero; C or tan(psi) cannot be determined."""


class FitConvergenceError(EstimationError):
    """Gauss-Newton failed to converge within the iteration budget."""

    def __init__(self, message: str, iterations: int, last_params=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_params = last_params


@dataclass(frozen=True)
class MeasurementRecord:
    """One coincidence accumulation at fixed analyzer settings."""

    theta1: float
    theta2: float
    duration: float
    counts: int

    def __post_init__(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.counts < 0 or self.counts != int(self.counts):
            raise ValueError(f"counts must be a nonnegative integer, got {self.counts}")
        object.__setattr__(self, "counts", int(self.counts))

    @property
    def rate(self) -> float:
        return self.counts / self.duration

    @property
    def rate_variance(self) -> float:
        """Poisson variance of the rate estimate; floored at one count."""
        return max(self.counts, 1) / self.duration**2


@dataclass(frozen=True)
class EstimationResult:
    """Recovered parameters with uncertainties and quality flags.

    psi_hat is in [0, pi/2]; delta_hat is the magnitude |delta| in [0, pi].
    """

    c_hat: float
    psi_hat: float
    delta_hat: float
    std_psi: float = 0.0
    std_delta: float = 0.0
    flags: frozenset[str] = field(default_factory=frozenset)
    residual: float = 0.0
    iterations: int = 0

    @property
    def tan_psi(self) -> float:
        return math.tan(self.psi_hat)

    @property
    def cos_delta(self) -> float:
        return math.cos(self.delta_hat)


def _variant_sign(variant: Variant) -> float:
    return +1.0 if variant is Variant.ENTANGLED else -1.0


def _check_theta1(theta1: float) -> None:
    for bad in (0.0, math.pi / 2):
        if abs(math.remainder(theta1 - bad, math.pi)) < _THETA1_TOL:
            raise DegenerateSettingsError(
                "theta1 must stay away from 0 and 90 degrees "
                f"(got {math.degrees(theta1):.6f} deg)"
            )


def _angles_from_internal(c, t, x, cov=None):
    """Map (C, tan psi, cos delta) and covariance to angles and stds."""
    psi = math.atan(t)
    delta = math.acos(min(1.0, max(-1.0, x)))
    std_psi = std_delta = 0.0
    if cov is not None:
        var_t = max(cov[1, 1], 0.0)
        var_x = max(cov[2, 2], 0.0)
        std_psi = math.sqrt(var_t) / (1.0 + t * t)
        guard = 1.0 - x * x
        std_delta = math.sqrt(var_x / guard) if guard > 1e-12 else math.inf
    return psi, delta, std_psi, std_delta


def invert_three_point_rates(
    theta1: float,
    rate0: float,
    rate90: float,
    rate45: float,
    variant: Variant,
    variances: tuple[float, float, float] | None = None,
    cross: float = 1.0,
) -> EstimationResult:
    """Closed-form inversion from rates at theta2 = 0, 90 and 45 degrees.

        C        = R0 / sin^2(theta1)
        tan(psi) = sqrt(R90 / (C cos^2 theta1))
        cos(delta) = -+ [2 R45/C - tan^2 psi cos^2 t1 - sin^2 t1]
                        / (2 tan psi cos t1 sin t1 * cross)

    `cross` is the known interference attenuation of the data (1 unless the
    sweep was taken with residual delay). Noise can push |cos delta| beyond 1;
    the value is clamped and flagged rather than propagated as a NaN.
    """
    _check_theta1(theta1)
    c1, s1 = math.cos(theta1), math.sin(theta1)
    if rate0 <= 0.0:
        raise UnidentifiableError("rate at theta2=0 is zero; C is unidentifiable")
    if rate90 < 0.0:
        raise UnidentifiableError("negative rate at theta2=90")
    c_hat = rate0 / (s1 * s1)
    t_hat = math.sqrt(rate90 / (c_hat * c1 * c1))
    flags = set()
    if rate90 == 0.0:
        raise UnidentifiableError("rate at theta2=90 is zero; psi is unidentifiable")

    sign = _variant_sign(variant)
    denom = 2.0 * t_hat * c1 * s1 * cross
    if abs(denom) < 1e-300:
        raise UnidentifiableError("vanishing cross term; delta is unidentifiable")
    x_hat = sign * (2.0 * rate45 / c_hat - t_hat * t_hat * c1 * c1 - s1 * s1) / denom
    if abs(x_hat) > 1.0:
        flags.add(FLAG_CLAMPED_COSDELTA)
        x_hat = math.copysign(1.0, x_hat)
    if abs(cross) < _JACOBIAN_FLOOR:
        flags.add(FLAG_DELTA_UNIDENTIFIABLE)

    cov = None
    if variances is not None:
        cov = _three_point_covariance(
            theta1, (rate0, rate90, rate45), variances, variant, cross
        )
    psi, delta, std_psi, std_delta = _angles_from_internal(c_hat, t_hat, x_hat, cov)
    return EstimationResult(
        c_hat=c_hat,
        psi_hat=psi,
        delta_hat=delta,
        std_psi=std_psi,
        std_delta=std_delta,
        flags=frozenset(flags),
    )


def _three_point_covariance(theta1, rates, variances, variant, cross):
    """Covariance of (C, tan psi, cos delta) by finite-difference propagation."""
    base = np.array(rates, dtype=float)

    def solve(r):
        res = invert_three_point_rates(theta1, r[0], r[1], r[2], variant, None, cross)
        return np.array([res.c_hat, res.tan_psi, res.cos_delta])

    jac = np.zeros((3, 3))
    for k in range(3):
        h = 1e-6 * max(base[k], 1.0)
        plus, minus = base.copy(), base.copy()
        plus[k] += h
        minus[k] = max(minus[k] - h, 1e-12)
        jac[:, k] = (solve(plus) - solve(minus)) / (plus[k] - minus[k])
    return jac @ np.diag(variances) @ jac.T


def invert_three_point(
    n0: MeasurementRecord,
    n90: MeasurementRecord,
    n45: MeasurementRecord,
    variant: Variant,
    cross: float = 1.0,
) -> EstimationResult:
    """Three-point inversion from count records sharing theta1.

    The records must be at theta2 = 0, pi/2 and pi/4 (within 1e-6 rad).
    """
    theta1 = n0.theta1
    for rec, expect in ((n0, 0.0), (n90, math.pi / 2), (n45, math.pi / 4)):
        if abs(rec.theta1 - theta1) > _THETA1_TOL:
            raise EstimationError("all three records must share theta1")
        if abs(rec.theta2 - expect) > _THETA1_TOL:
            raise EstimationError(
                f"expected theta2 = {math.degrees(expect):g} deg, "
                f"got {math.degrees(rec.theta2):.6f}"
            )
    return invert_three_point_rates(
        theta1,
        n0.rate,
        n90.rate,
        n45.rate,
        variant,
        variances=(n0.rate_variance, n90.rate_variance, n45.rate_variance),
        cross=cross,
    )


# --------------------------------------------------------------------------
# Weighted least squares over sweeps
# --------------------------------------------------------------------------

def _model_rates(params, theta1, theta2, sign, cross):
    c, t, x = params
    return c * bracket_values(t, x, cross, sign, theta1, theta2)


def _seed_from_data(theta1, theta2, rates, variant, cross):
    """Three-point seed from the rows nearest theta2 = 0, 90, 45 degrees."""
    t1 = float(np.median(theta1))
    picks = []
    for target in (0.0, math.pi / 2, math.pi / 4):
        picks.append(int(np.argmin(np.abs(theta2 - target))))
    try:
        res = invert_three_point_rates(
            t1, rates[picks[0]], rates[picks[1]], rates[picks[2]],
            variant, None, cross if abs(cross) > _JACOBIAN_FLOOR else 1.0,
        )
        return np.array([res.c_hat, res.tan_psi, res.cos_delta])
    except EstimationError:
        c0 = max(float(np.max(rates)), 1e-9)
        return np.array([c0, 1.0, 0.0])


def fit_sweep_rates(
    theta1: np.ndarray,
    theta2: np.ndarray,
    rates: np.ndarray,
    variant: Variant,
    variances: np.ndarray | None = None,
    init: EstimationResult | None = None,
    cross: float = 1.0,
) -> EstimationResult:
    """Damped Gauss-Newton weighted least squares on rate data.

    Minimizes sum w_i (R_i - model_i)^2 over (C, tan psi, cos delta) with
    Poisson weights, using a numerically differenced Jacobian, at most 200
    iterations and a relative step tolerance of 1e-12. The delta direction is
    flagged unidentifiable when its weighted Jacobian column drops below 1e-6
    of the model's weighted magnitude (washed-out interference or psi ~ 0).
    """
    theta1 = np.asarray(theta1, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    rates = np.asarray(rates, dtype=float)
    n_points = rates.size
    settings = {(round(a, 12), round(b, 12)) for a, b in zip(theta1, theta2)}
    if len(settings) < 3:
        raise EstimationError("need at least 3 distinct analyzer settings")
    weights = (
        np.ones(n_points) if variances is None else 1.0 / np.asarray(variances, dtype=float)
    )
    sqrt_w = np.sqrt(weights)
    sign = _variant_sign(variant)

    if init is not None:
        params = np.array([init.c_hat, init.tan_psi, init.cos_delta])
    else:
        params = _seed_from_data(theta1, theta2, rates, variant, cross)

    def residuals(p):
        return sqrt_w * (rates - _model_rates(p, theta1, theta2, sign, cross))

    def ssr(p):
        r = residuals(p)
        return float(r @ r)

    current = ssr(params)
    converged = False
    iterations = 0
    for iterations in range(1, _MAX_ITERATIONS + 1):
        jac = np.empty((n_points, 3))
        for k in range(3):
            h = 1e-7 * max(abs(params[k]), 1.0)
            stepped = params.copy()
            stepped[k] += h
            jac[:, k] = (residuals(stepped) - residuals(params)) / h
        grad = jac.T @ residuals(params)
        hess = jac.T @ jac
        try:
            delta_p = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            delta_p = np.linalg.lstsq(hess, -grad, rcond=None)[0]

        lam = 1.0
        improved = False
        for _ in range(30):
            trial = params + lam * delta_p
            trial_ssr = ssr(trial)
            if trial_ssr <= current + 1e-15:
                improved = True
                break
            lam *= 0.5
        if not improved:
            converged = True  # no downhill direction left: at a minimum
            break
        step = lam * delta_p
        params, current = trial, trial_ssr
        if np.max(np.abs(step) / np.maximum(np.abs(params), 1.0)) < _STEP_TOL:
            converged = True
            break
    if not converged:
        raise FitConvergenceError(
            f"no convergence after {iterations} iterations (ssr={current:.6g})",
            iterations,
            params,
        )

    flags = set()
    c_hat, t_hat, x_hat = params
    if c_hat <= 0:
        raise UnidentifiableError("fit collapsed to a nonpositive rate scale")
    t_hat = abs(t_hat)
    if abs(x_hat) > 1.0:
        flags.add(FLAG_CLAMPED_COSDELTA)
        x_hat = math.copysign(1.0, x_hat)

    jac = np.empty((n_points, 3))
    pfinal = np.array([c_hat, t_hat, x_hat])
    for k in range(3):
        h = 1e-7 * max(abs(pfinal[k]), 1.0)
        stepped = pfinal.copy()
        stepped[k] += h
        jac[:, k] = (residuals(stepped) - residuals(pfinal)) / h
    model_scale = float(np.linalg.norm(sqrt_w * _model_rates(pfinal, theta1, theta2, sign, cross)))
    delta_sensitivity = float(np.linalg.norm(jac[:, 2]))
    if delta_sensitivity < _JACOBIAN_FLOOR * max(model_scale, 1e-300):
        flags.add(FLAG_DELTA_UNIDENTIFIABLE)

    cov = None
    try:
        cov = np.linalg.inv(jac.T @ jac)
        if variances is None:
            # unit weights carry no noise scale; use the residual variance
            cov = cov * (current / max(n_points - 3, 1))
    except np.linalg.LinAlgError:
        pass
    psi, delta, std_psi, std_delta = _angles_from_internal(c_hat, t_hat, x_hat, cov)
    if FLAG_DELTA_UNIDENTIFIABLE in flags:
        std_delta = math.inf
    return EstimationResult(
        c_hat=float(c_hat),
        psi_hat=psi,
        delta_hat=delta,
        std_psi=std_psi,
        std_delta=std_delta,
        flags=frozenset(flags),
        residual=current,
        iterations=iterations,
    )


def fit_sweep(
    data: Sequence[MeasurementRecord],
    variant: Variant,
    init: EstimationResult | None = None,
    spectrum: SpectrumModel | None = None,
    compensator: CompensatorDelay | None = None,
) -> EstimationResult:
    """Weighted least squares on count records.

    For compensated data pass the spectrum and residual delay so the model
    carries the known Phi(tau) cos(w0 tau) cross-term attenuation; that is
    what makes the washed-out-delta regime detectable.
    """
    if len(data) < 3:
        raise EstimationError("need at least 3 measurements")
    cross = 1.0
    if variant is Variant.COMPENSATED:
        if spectrum is None or compensator is None:
            raise EstimationError(
                "compensated variant requires spectrum and compensator"
            )
        cross = envelope(spectrum, compensator.tau) * math.cos(
            spectrum.center * compensator.tau
        )
    theta1 = np.array([rec.theta1 for rec in data])
    theta2 = np.array([rec.theta2 for rec in data])
    rates = np.array([rec.rate for rec in data])
    variances = np.array([rec.rate_variance for rec in data])
    return fit_sweep_rates(theta1, theta2, rates, variant, variances, init, cross)


# --------------------------------------------------------------------------
# Shot noise and Monte Carlo precision
# --------------------------------------------------------------------------

def poisson_counts(rate: float, duration: float, seed: int) -> int:
    """One Poisson draw with mean rate * duration; deterministic per seed."""
    if rate < 0:
        raise ValueError(f"rate must be nonnegative, got {rate}")
    if rate == 0.0:
        return 0
    rng = np.random.default_rng(seed)
    return int(rng.poisson(rate * duration))


def poisson_counts_array(rates, duration: float, seed) -> np.ndarray:
    """Vector of Poisson draws from one generator (for bulk simulation)."""
    rates = np.asarray(rates, dtype=float)
    if np.any(rates < 0):
        raise ValueError("rates must be nonnegative")
    rng = np.random.default_rng(seed)
    return rng.poisson(rates * duration)


@dataclass(frozen=True)
class SweepDesign:
    """Analyzer sweep and count budget for a Monte Carlo study."""

    theta1: float = math.pi / 4
    theta2_grid: tuple[float, ...] = tuple(np.linspace(0.0, math.pi, 37))
    counts_levels: tuple[int, ...] = (10**3, 10**4, 10**5, 10**6)


@dataclass(frozen=True)
class PrecisionRow:
    total_counts: float
    bias_psi: float
    std_psi: float
    bias_delta: float
    std_delta: float
    trials_ok: int


@dataclass(frozen=True)
class PrecisionReport:
    rows: tuple[PrecisionRow, ...]
    slope_std_psi: float
    slope_stderr: float


def _loglog_slope(x, y):
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    lx = lx - lx.mean()
    slope = float((lx @ (ly - ly.mean())) / (lx @ lx))
    resid = (ly - ly.mean()) - slope * lx
    dof = max(len(lx) - 2, 1)
    stderr = float(np.sqrt((resid @ resid) / dof / (lx @ lx)))
    return slope, stderr


def monte_carlo_precision(
    truth: Configuration,
    design: SweepDesign,
    trials: int,
    seed: int,
    zero_noise: bool = False,
) -> PrecisionReport:
    """Simulate-and-estimate study of the estimator's precision.

    For each total-count level, `trials` sweeps are drawn with Poisson noise
    (durations scaled so the expected total equals the level), fitted, and the
    bias and standard deviation of psi-hat and delta-hat recorded. The
    returned slope is the log-log slope of std(psi-hat) versus total counts;
    pure shot noise gives -1/2.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = np.asarray(design.theta2_grid, dtype=float)
    pairs = _sweep(truth, design.theta1, grid)
    exact_rates = np.array([r for _, r in pairs])
    total_rate = float(np.sum(exact_rates))
    sign_cross = _config_cross_factor(truth)
    truth_psi = truth.sample.psi
    truth_delta = abs(truth.sample.delta)

    master = np.random.SeedSequence(seed)
    rows = []
    for level_idx, level in enumerate(design.counts_levels):
        duration = level / total_rate
        if zero_noise:
            # every trial sees the exact rates, so one fit represents them all
            result = fit_sweep_rates(
                np.full_like(grid, design.theta1), grid, exact_rates.copy(),
                truth.variant, np.ones_like(exact_rates), cross=sign_cross,
            )
            rows.append(
                PrecisionRow(
                    total_counts=float(level),
                    bias_psi=result.psi_hat - truth_psi,
                    std_psi=0.0,
                    bias_delta=result.delta_hat - truth_delta,
                    std_delta=0.0,
                    trials_ok=trials,
                )
            )
            continue
        psi_hats, delta_hats = [], []
        for trial in range(trials):
            child = np.random.SeedSequence(
                entropy=master.entropy, spawn_key=(level_idx, trial)
            )
            rng = np.random.default_rng(child)
            counts = rng.poisson(exact_rates * duration)
            rates = counts / duration
            variances = np.maximum(counts, 1) / duration**2
            try:
                result = fit_sweep_rates(
                    np.full_like(grid, design.theta1),
                    grid,
                    rates,
                    truth.variant,
                    variances,
                    cross=sign_cross,
                )
            except EstimationError:
                continue
            psi_hats.append(result.psi_hat)
            delta_hats.append(result.delta_hat)
        psi_arr, delta_arr = np.array(psi_hats), np.array(delta_hats)
        rows.append(
            PrecisionRow(
                total_counts=float(level),
                bias_psi=float(np.mean(psi_arr) - truth_psi),
                std_psi=float(np.std(psi_arr, ddof=1)) if len(psi_arr) > 1 else 0.0,
                bias_delta=float(np.mean(delta_arr) - truth_delta),
                std_delta=float(np.std(delta_arr, ddof=1)) if len(delta_arr) > 1 else 0.0,
                trials_ok=len(psi_arr),
            )
        )
    stds = [row.std_psi for row in rows]
    if zero_noise or any(s == 0.0 for s in stds) or len(rows) < 2:
        slope, stderr = 0.0, 0.0
    else:
        slope, stderr = _loglog_slope([row.total_counts for row in rows], stds)
    return PrecisionReport(rows=tuple(rows), slope_std_psi=slope, slope_stderr=stderr)
