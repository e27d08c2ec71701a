"""Flat key-value experiment configuration.

The on-disk format is one ``key = value`` per line, ``#`` comments and
blank lines allowed.  Unknown and duplicate keys are errors, so a
written config echo always round-trips to the identical experiment.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .cp import AnalyticCpSurface, CpSurface, GridCpSurface, default_grid_surface
from .errors import ConfigError
from .plant import ScenarioPreset, rews_step_std
from .turbine import TurbineParameters

SCENARIO_MEAN_WIND = {"below": 8.0, "above": 15.0}

# auto q_wind_std = this factor times the REWS per-step increment std;
# sits at the empirical crossover where neither offset mode is
# structurally favoured by the likelihoods
WIND_NOISE_MATCH_FACTOR = 0.7


@dataclass(frozen=True)
class ExperimentConfig:
    """Every effective parameter of one experiment, flat and writable."""

    scenario: str = "below"
    v_op: float | None = None  # None = use the scenario default
    turbulence_intensity: float = 0.10
    duration_s: float = 600.0
    dt: float = 0.05
    seeds: tuple[int, ...] = (1,)
    schedule: str = "regime"
    schedule_delta_max: float = 0.04
    delta_cp: float = 0.04
    pi_stay: float = 0.999
    mu0: tuple[float, float, float] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    q_omega_std: float = 1e-4
    q_wind_std: float | None = None  # None = match the wind generator's step std
    r_std: float = 1e-5
    meas_noise_std: float = 1e-5
    p0_omega_std: float = 0.1
    p0_wind_std: float = 0.5
    settle_s: float = 30.0
    hist_bins: int = 41
    out_dir: str = "out"
    cp_table: str = "builtin-grid"
    inertia: float = 1.6e8
    radius: float = 89.2
    air_density: float = 1.225
    omega_rated: float = 1.005
    tau_rated: float = 9.8e6

    # -- derived objects ------------------------------------------------

    def effective_v_op(self) -> float:
        if self.v_op is not None:
            return self.v_op
        try:
            return SCENARIO_MEAN_WIND[self.scenario]
        except KeyError:
            raise ConfigError(
                f"scenario must be one of {sorted(SCENARIO_MEAN_WIND)}, got {self.scenario!r}"
            ) from None

    def effective_q_wind_std(self) -> float:
        if self.q_wind_std is not None:
            return self.q_wind_std
        matched = WIND_NOISE_MATCH_FACTOR * rews_step_std(
            self.effective_v_op(), self.turbulence_intensity, self.dt
        )
        return max(matched, 1e-6)  # keep the random-walk model alive at TI = 0

    def turbine_params(self) -> TurbineParameters:
        return TurbineParameters(
            inertia=self.inertia,
            radius=self.radius,
            air_density=self.air_density,
            omega_rated=self.omega_rated,
            tau_rated=self.tau_rated,
            dt=self.dt,
            sigma_n=self.effective_q_wind_std(),
        )

    def preset(self, seed: int) -> ScenarioPreset:
        return ScenarioPreset(
            mean_wind=self.effective_v_op(),
            turbulence_intensity=self.turbulence_intensity,
            duration=self.duration_s,
            seed=seed,
            dt=self.dt,
        )

    def surface(self) -> CpSurface:
        if self.cp_table == "builtin-grid":
            return default_grid_surface()
        if self.cp_table == "builtin-analytic":
            return AnalyticCpSurface()
        path = Path(self.cp_table)
        if not path.exists():
            raise ConfigError(f"cp_table file not found: {path}")
        try:
            return GridCpSurface.from_csv(path)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def transition(self) -> np.ndarray:
        from .imm import symmetric_transition

        return symmetric_transition(3, self.pi_stay)

    def validate(self) -> None:
        """Raise ConfigError listing every violated invariant."""
        problems: list[str] = []
        if self.scenario not in SCENARIO_MEAN_WIND:
            problems.append(f"scenario must be 'below' or 'above', got {self.scenario!r}")
        elif self.effective_v_op() <= 0.0:
            problems.append("v_op must be positive")
        if not 0.0 <= self.turbulence_intensity <= 0.5:
            problems.append("turbulence_intensity must be within [0, 0.5]")
        if self.duration_s <= 0.0:
            problems.append("duration_s must be positive")
        if not 0.0 < self.dt <= 0.1:
            problems.append("dt must be in (0, 0.1] s")
        if len(self.seeds) < 1:
            problems.append("at least one seed is required")
        if self.schedule not in ("regime", "walk"):
            problems.append(f"schedule must be 'regime' or 'walk', got {self.schedule!r}")
        if self.schedule_delta_max < 0.0:
            problems.append("schedule_delta_max must be nonnegative")
        if self.delta_cp < 0.0:
            problems.append("delta_cp must be nonnegative")
        if not 0.0 < self.pi_stay <= 1.0:
            problems.append("pi_stay must be in (0, 1]")
        if any(w < 0.0 for w in self.mu0):
            problems.append("mu0 entries must be nonnegative")
        elif abs(sum(self.mu0) - 1.0) > 1e-6:
            problems.append(f"mu0 must sum to 1 (got {sum(self.mu0)!r})")
        if self.q_wind_std is not None and self.q_wind_std <= 0.0:
            problems.append("q_wind_std must be positive (or auto)")
        for name in ("r_std", "p0_omega_std", "p0_wind_std"):
            if getattr(self, name) <= 0.0:
                problems.append(f"{name} must be positive")
        if self.q_omega_std < 0.0:
            problems.append("q_omega_std must be nonnegative")
        if self.meas_noise_std < 0.0:
            problems.append("meas_noise_std must be nonnegative")
        if not 0.0 <= self.settle_s < self.duration_s:
            problems.append("settle_s must be within [0, duration_s)")
        if self.hist_bins < 1:
            problems.append("hist_bins must be at least 1")
        for name in ("inertia", "radius", "air_density", "omega_rated", "tau_rated"):
            if getattr(self, name) <= 0.0:
                problems.append(f"{name} must be positive")
        if problems:
            raise ConfigError("; ".join(problems))


def _parse_float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}") from None


def _parse_optional_float(raw: str) -> float | None:
    if raw == "auto":
        return None
    return _parse_float(raw)


def _parse_int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}") from None


def _parse_seeds(raw: str) -> tuple[int, ...]:
    return tuple(_parse_int(part.strip()) for part in raw.split(",") if part.strip())


def _parse_mu0(raw: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if len(parts) != 3:
        raise ConfigError(f"mu0 needs exactly 3 comma-separated values, got {raw!r}")
    a, b, c = (_parse_float(p) for p in parts)
    return (a, b, c)


def _fmt_float(value: float) -> str:
    return repr(float(value))


def _fmt_optional_float(value: float | None) -> str:
    return "auto" if value is None else _fmt_float(value)


def _fmt_seeds(value: tuple[int, ...]) -> str:
    return ",".join(str(v) for v in value)


def _fmt_mu0(value: tuple[float, float, float]) -> str:
    return ",".join(_fmt_float(v) for v in value)


_KEY_CODECS = {
    "scenario": (str, str),
    "v_op": (_parse_optional_float, _fmt_optional_float),
    "turbulence_intensity": (_parse_float, _fmt_float),
    "duration_s": (_parse_float, _fmt_float),
    "dt": (_parse_float, _fmt_float),
    "seeds": (_parse_seeds, _fmt_seeds),
    "schedule": (str, str),
    "schedule_delta_max": (_parse_float, _fmt_float),
    "delta_cp": (_parse_float, _fmt_float),
    "pi_stay": (_parse_float, _fmt_float),
    "mu0": (_parse_mu0, _fmt_mu0),
    "q_omega_std": (_parse_float, _fmt_float),
    "q_wind_std": (_parse_optional_float, _fmt_optional_float),
    "r_std": (_parse_float, _fmt_float),
    "meas_noise_std": (_parse_float, _fmt_float),
    "p0_omega_std": (_parse_float, _fmt_float),
    "p0_wind_std": (_parse_float, _fmt_float),
    "settle_s": (_parse_float, _fmt_float),
    "hist_bins": (_parse_int, str),
    "out_dir": (str, str),
    "cp_table": (str, str),
    "inertia": (_parse_float, _fmt_float),
    "radius": (_parse_float, _fmt_float),
    "air_density": (_parse_float, _fmt_float),
    "omega_rated": (_parse_float, _fmt_float),
    "tau_rated": (_parse_float, _fmt_float),
}

assert set(_KEY_CODECS) == {f.name for f in fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text; unknown or repeated keys raise ConfigError."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEY_CODECS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parser, _ = _KEY_CODECS[key]
        try:
            values[key] = parser(raw)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: key {key!r}: {exc}") from None
    return ExperimentConfig(**values)


def format_config(config: ExperimentConfig) -> str:
    """Render every effective parameter; output parses back identically."""
    lines = []
    for f in fields(ExperimentConfig):
        _, fmt = _KEY_CODECS[f.name]
        lines.append(f"{f.name} = {fmt(getattr(config, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(format_config(config), encoding="utf-8")


def with_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Functional update used by the CLI flags."""
    return replace(config, **overrides)
