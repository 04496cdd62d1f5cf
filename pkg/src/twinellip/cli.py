"""Command-line front end.

Subcommands: `simulate` (analyzer sweep to CSV), `estimate` (parameter
recovery from a sweep CSV), `oracle` (first-principles verification of the
closed forms), `montecarlo` (shot-noise precision report CSV).

Conventions: angles are degrees in files and flags, radians inside; runs are
deterministic under (config, seed); file numerics carry 9 significant digits.
Exit codes: 0 success, 2 config/parse error, 3 degenerate estimation,
4 oracle mismatch.

Configs are plain `key = value` files (# comments) whose keys are exactly the
RunConfig field names; command-line flags override file values.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from dataclasses import dataclass

import numpy as np

from .estimate import (
    DegenerateSettingsError,
    EstimationError,
    MeasurementRecord,
    SweepDesign,
    fit_sweep,
    fit_sweep_rates,
    invert_three_point_rates,
    monte_carlo_precision,
)
from .fock import default_grid, oracle_rate
from .rates import (
    AnalyzerSettings,
    Configuration,
    RateScale,
    SampleParams,
    Variant,
    rate_for,
    sweep,
)
from .source import CompensatorDelay, SpectrumModel, SpectrumShape, envelope

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_ORACLE_MISMATCH = 4

_ANGLE_TOL_DEG = 1e-4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Full run description; field names are the config-file keys."""

    variant: str = "entangled"
    psi_deg: float = 30.0
    delta_deg: float = 60.0
    r1: str = ""
    r2: str = ""
    c: float = 1000.0
    theta1_deg: float = 45.0
    theta2_start_deg: float = 0.0
    theta2_stop_deg: float = 180.0
    steps: int = 37
    tau_s: float = 0.0
    bandwidth_rad_s: float = 1e13
    center_rad_s: float = 2.325e15
    shape: str = "gaussian"
    duration_s: float = 1.0
    seed: int = 12345
    noise: bool = False
    out: str = ""
    mode: str = "fit"
    trials: int = 300
    n_modes: int = 64
    tolerance: float = 1e-6
    zero_noise: bool = False

    def spectrum(self) -> SpectrumModel:
        try:
            shape = SpectrumShape(self.shape.lower())
        except ValueError:
            raise ConfigError(f"unknown spectrum shape {self.shape!r}") from None
        return SpectrumModel(shape=shape, center=self.center_rad_s,
                             bandwidth=self.bandwidth_rad_s)

    def sample(self) -> SampleParams:
        if self.r1 or self.r2:
            if not (self.r1 and self.r2):
                raise ConfigError("r1 and r2 must be given together")
            try:
                return SampleParams(complex(self.r1), complex(self.r2))
            except ValueError as exc:
                raise ConfigError(f"bad reflection coefficients: {exc}") from None
        try:
            return SampleParams.from_psi_delta(
                math.radians(self.psi_deg), math.radians(self.delta_deg)
            )
        except ValueError as exc:
            raise ConfigError(f"bad sample angles: {exc}") from None

    def configuration(self) -> Configuration:
        try:
            variant = Variant(self.variant.lower())
        except ValueError:
            raise ConfigError(f"unknown variant {self.variant!r}") from None
        kwargs = {}
        if variant is Variant.COMPENSATED:
            kwargs["compensator"] = CompensatorDelay(self.tau_s)
            kwargs["spectrum"] = self.spectrum()
        try:
            return Configuration(
                variant=variant, sample=self.sample(),
                scale=RateScale(self.c), **kwargs,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def theta2_grid_deg(self) -> np.ndarray:
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        return np.linspace(self.theta2_start_deg, self.theta2_stop_deg, self.steps)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if kind == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"bad boolean for {key}: {raw!r}")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config_file(path: str) -> dict:
    """Read a `key = value` config file into a field dict."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{path}:{lineno}: field {key}: {exc}") from None
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for key in _FIELD_TYPES:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    return RunConfig(**values)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _config_header(cfg: RunConfig) -> list[str]:
    return [
        f"# {f.name} = {_fmt(getattr(cfg, f.name))}"
        for f in dataclasses.fields(RunConfig)
    ]


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> int:
    configuration = cfg.configuration()
    grid_deg = cfg.theta2_grid_deg()
    pairs = sweep(configuration, math.radians(cfg.theta1_deg), np.radians(grid_deg))
    rates = np.array([r for _, r in pairs])

    lines = _config_header(cfg)
    if cfg.noise:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        counts = rng.poisson(rates * cfg.duration_s)
        lines.append("theta1_deg,theta2_deg,duration_s,counts")
        for t2, n in zip(grid_deg, counts):
            lines.append(
                f"{_fmt(cfg.theta1_deg)},{_fmt(float(t2))},{_fmt(cfg.duration_s)},{int(n)}"
            )
    else:
        lines.append("theta1_deg,theta2_deg,duration_s,rate_cps")
        for t2, rate in zip(grid_deg, rates):
            lines.append(
                f"{_fmt(cfg.theta1_deg)},{_fmt(float(t2))},{_fmt(cfg.duration_s)},{_fmt(float(rate))}"
            )
    _write_lines(cfg.out, lines)
    return EXIT_OK


def _write_lines(out: str, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# estimate
# --------------------------------------------------------------------------

def read_sweep_file(path: str):
    """Parse a simulate CSV: returns (header config dict, rows, has_counts)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    header = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            content = line[1:].strip()
            if "=" in content:
                key, _, raw = content.partition("=")
                key = key.strip()
                if key in _FIELD_TYPES:
                    try:
                        header[key] = _coerce(key, raw)
                    except ConfigError:
                        pass
            continue
        if line.strip():
            body.append(line)
    if not body:
        raise ConfigError(f"{path}: no data rows")
    columns = body[0].split(",")
    expected_counts = ["theta1_deg", "theta2_deg", "duration_s", "counts"]
    expected_rates = ["theta1_deg", "theta2_deg", "duration_s", "rate_cps"]
    if columns == expected_counts:
        has_counts = True
    elif columns == expected_rates:
        has_counts = False
    else:
        raise ConfigError(f"{path}: unexpected columns {columns}")
    rows = []
    for lineno, line in enumerate(body[1:], 2):
        parts = line.split(",")
        if len(parts) != 4:
            raise ConfigError(f"{path}: row {lineno}: expected 4 fields")
        try:
            t1, t2, dur = float(parts[0]), float(parts[1]), float(parts[2])
            value = int(parts[3]) if has_counts else float(parts[3])
        except ValueError as exc:
            raise ConfigError(f"{path}: row {lineno}: {exc}") from None
        rows.append((t1, t2, dur, value))
    return header, rows, has_counts


def _pick_row(rows, theta2_target_deg):
    for row in rows:
        if abs(row[1] - theta2_target_deg) < _ANGLE_TOL_DEG:
            return row
    return None


def cmd_estimate(cfg: RunConfig, path: str) -> int:
    header, rows, has_counts = read_sweep_file(path)
    merged = dict(header)
    merged["mode"] = cfg.mode
    for key in ("variant", "tau_s", "bandwidth_rad_s", "center_rad_s", "shape"):
        if getattr(cfg, key) != getattr(RunConfig(), key) or key not in merged:
            merged[key] = getattr(cfg, key)
    try:
        variant = Variant(str(merged["variant"]).lower())
    except ValueError:
        raise ConfigError(f"unknown variant {merged['variant']!r}") from None

    cross = 1.0
    spectrum = compensator = None
    if variant is Variant.COMPENSATED:
        spectrum = SpectrumModel(
            shape=SpectrumShape(str(merged.get("shape", "gaussian")).lower()),
            center=float(merged.get("center_rad_s", RunConfig().center_rad_s)),
            bandwidth=float(merged.get("bandwidth_rad_s", RunConfig().bandwidth_rad_s)),
        )
        compensator = CompensatorDelay(float(merged.get("tau_s", 0.0)))
        cross = envelope(spectrum, compensator.tau) * math.cos(
            spectrum.center * compensator.tau
        )

    if cfg.mode == "three-point":
        picks = [_pick_row(rows, target) for target in (0.0, 90.0, 45.0)]
        if any(p is None for p in picks):
            raise ConfigError(
                "three-point mode requires rows at theta2 = 0, 45 and 90 degrees"
            )
        theta1 = math.radians(picks[0][0])
        rates = [
            (p[3] / p[2]) if has_counts else p[3] for p in picks
        ]
        variances = (
            tuple(max(p[3], 1) / p[2] ** 2 for p in picks) if has_counts else None
        )
        result = invert_three_point_rates(
            theta1, rates[0], rates[1], rates[2], variant,
            variances=variances, cross=cross,
        )
    elif cfg.mode == "fit":
        if has_counts:
            records = [
                MeasurementRecord(
                    math.radians(t1), math.radians(t2), dur, int(value)
                )
                for t1, t2, dur, value in rows
            ]
            result = fit_sweep(records, variant, spectrum=spectrum,
                               compensator=compensator)
        else:
            theta1 = np.radians([row[0] for row in rows])
            theta2 = np.radians([row[1] for row in rows])
            rates = np.array([row[3] for row in rows])
            result = fit_sweep_rates(theta1, theta2, rates, variant, cross=cross)
    else:
        raise ConfigError(f"unknown estimate mode {cfg.mode!r}")

    flags = ",".join(sorted(result.flags)) if result.flags else "none"
    print(f"c_hat = {_fmt(result.c_hat)}")
    print(f"psi_deg = {_fmt(math.degrees(result.psi_hat))}")
    print(f"delta_deg = {_fmt(math.degrees(result.delta_hat))}")
    print(f"std_psi_deg = {_fmt(math.degrees(result.std_psi))}")
    print(
        "std_delta_deg = "
        + (_fmt(math.degrees(result.std_delta)) if math.isfinite(result.std_delta) else "inf")
    )
    print(f"flags = {flags}")
    return EXIT_OK


# --------------------------------------------------------------------------
# oracle
# --------------------------------------------------------------------------

def cmd_oracle(cfg: RunConfig) -> int:
    n = cfg.n_modes
    if n < 2 or n > 1024 or (n & (n - 1)) != 0:
        raise ConfigError(f"n_modes must be a power of two in [2, 1024], got {n}")
    configuration = cfg.configuration()
    spectrum = configuration.spectrum if configuration.spectrum else cfg.spectrum()
    grid = default_grid(spectrum, n_modes=n)

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    draws = 20
    worst = 0.0
    for index in range(draws):
        if index == 0:
            sample = configuration.sample  # the configured sample is always probed
        else:
            psi = rng.uniform(math.radians(2.0), math.radians(88.0))
            delta = rng.uniform(-math.pi, math.pi)
            sample = SampleParams.from_psi_delta(psi, delta)
        theta1, theta2 = rng.uniform(0.0, math.pi, size=2)
        trial = dataclasses.replace(configuration, sample=sample)
        a = AnalyzerSettings(theta1, theta2)
        got = oracle_rate(trial, a, grid=grid, spectrum=spectrum)
        want = rate_for(trial, a)
        deviation = abs(got - want) / max(abs(want), 1e-12 * cfg.c)
        worst = max(worst, deviation)

    status = "ok" if worst <= cfg.tolerance else "mismatch"
    print(f"variant = {configuration.variant.value}")
    print(f"n_modes = {n}")
    print(f"draws = {draws}")
    print(f"max_rel_deviation = {_fmt(worst)}")
    print(f"tolerance = {_fmt(cfg.tolerance)}")
    print(f"status = {status}")
    return EXIT_OK if worst <= cfg.tolerance else EXIT_ORACLE_MISMATCH


# --------------------------------------------------------------------------
# montecarlo
# --------------------------------------------------------------------------

def cmd_montecarlo(cfg: RunConfig) -> int:
    if cfg.trials < 1:
        raise ConfigError(f"trials must be >= 1, got {cfg.trials}")
    configuration = cfg.configuration()
    design = SweepDesign(
        theta1=math.radians(cfg.theta1_deg),
        theta2_grid=tuple(np.radians(cfg.theta2_grid_deg())),
    )
    report = monte_carlo_precision(
        configuration, design, cfg.trials, cfg.seed, zero_noise=cfg.zero_noise
    )
    lines = _config_header(cfg)
    lines.append("total_counts,bias_psi_deg,std_psi_deg,bias_delta_deg,std_delta_deg,trials_ok")
    for row in report.rows:
        lines.append(
            ",".join(
                [
                    _fmt(row.total_counts),
                    _fmt(math.degrees(row.bias_psi)),
                    _fmt(math.degrees(row.std_psi)),
                    _fmt(math.degrees(row.bias_delta)),
                    _fmt(math.degrees(row.std_delta)),
                    str(row.trials_ok),
                ]
            )
        )
    lines.append(f"# slope_std_psi = {_fmt(report.slope_std_psi)}")
    lines.append(f"# slope_stderr = {_fmt(report.slope_stderr)}")
    _write_lines(cfg.out, lines)
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--variant", choices=[v.value for v in Variant], dest="variant")
    p.add_argument("--psi-deg", type=float, dest="psi_deg")
    p.add_argument("--delta-deg", type=float, dest="delta_deg")
    p.add_argument("--r1", dest="r1", help="complex reflection coefficient, e.g. 0.5+0.2j")
    p.add_argument("--r2", dest="r2")
    p.add_argument("--c", type=float, dest="c", help="rate scale, counts/s")
    p.add_argument("--theta1-deg", type=float, dest="theta1_deg")
    p.add_argument("--theta2-start", type=float, dest="theta2_start_deg")
    p.add_argument("--theta2-stop", type=float, dest="theta2_stop_deg")
    p.add_argument("--steps", type=int, dest="steps")
    p.add_argument("--tau", type=float, dest="tau_s", help="residual delay, seconds")
    p.add_argument("--bandwidth", type=float, dest="bandwidth_rad_s")
    p.add_argument("--center", type=float, dest="center_rad_s")
    p.add_argument("--shape", choices=["gaussian", "rectangular"], dest="shape")
    p.add_argument("--duration", type=float, dest="duration_s")
    p.add_argument("--seed", type=int, dest="seed")
    p.add_argument("--out", dest="out")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinellip",
        description="Twin-photon ellipsometry simulation and estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write an analyzer sweep CSV")
    _add_common_flags(p_sim)
    p_sim.add_argument("--noise", action="store_const", const=True, dest="noise",
                       help="Poisson counts instead of exact rates")

    p_est = sub.add_parser("estimate", help="recover (C, psi, delta) from a sweep CSV")
    p_est.add_argument("input", help="CSV produced by simulate")
    _add_common_flags(p_est)
    p_est.add_argument("--mode", choices=["three-point", "fit"], dest="mode")

    p_orc = sub.add_parser("oracle", help="verify closed forms against the Fock oracle")
    _add_common_flags(p_orc)
    p_orc.add_argument("--grid", type=int, dest="n_modes",
                       help="frequency modes (power of two, 2..1024)")
    p_orc.add_argument("--tolerance", type=float, dest="tolerance")

    p_mc = sub.add_parser("montecarlo", help="shot-noise precision report CSV")
    _add_common_flags(p_mc)
    p_mc.add_argument("--trials", type=int, dest="trials")
    p_mc.add_argument("--zero-noise", action="store_const", const=True,
                      dest="zero_noise")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "estimate":
            return cmd_estimate(cfg, args.input)
        if args.command == "oracle":
            return cmd_oracle(cfg)
        if args.command == "montecarlo":
            return cmd_montecarlo(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        if isinstance(exc, DegenerateSettingsError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DEGENERATE
        if isinstance(exc, EstimationError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DEGENERATE
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
