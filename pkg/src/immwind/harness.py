"""Experiment orchestration: run both estimators, score them, write CSVs.

For every seed the harness simulates the plant once, feeds the same
measurement/input stream to the 3-mode bank and to a single EKF on the
nominal surface, and scores both against the rotor-effective wind speed
and the 0.1 Hz low-passed true power coefficient.  Errors are relative
percentages of the true value; the first ``settle_s`` seconds are
discarded from the statistics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ekf, imm
from .config import ExperimentConfig, format_config
from .errors import NumericalError
from .plant import (
    PlantTrajectory,
    TrueCpSchedule,
    generate_cp_schedule,
    simulate_plant,
)
from .turbine import OMEGA_FLOOR, V_FLOOR, ControlInput, TurbineModel

CP_REFERENCE_CUTOFF_HZ = 0.1
CP_REFERENCE_FLOOR = 1e-3


def low_pass(series: np.ndarray, cutoff_hz: float, dt: float) -> np.ndarray:
    """Single-pole low-pass y_k = a y_{k-1} + (1-a) x_k, y_0 = x_0."""
    if not cutoff_hz * dt < 0.5:
        raise ValueError(f"cutoff*dt must be < 0.5, got {cutoff_hz * dt}")
    x = np.asarray(series, dtype=float)
    a = math.exp(-2.0 * math.pi * cutoff_hz * dt)
    out = np.empty_like(x)
    out[0] = x[0]
    for k in range(1, x.size):
        out[k] = a * out[k - 1] + (1.0 - a) * x[k]
    return out


def wind_error_series(v_hat: np.ndarray, v_true: np.ndarray) -> np.ndarray:
    """Relative wind error in percent; NaN marks excluded samples."""
    v_hat = np.asarray(v_hat, dtype=float)
    v_true = np.asarray(v_true, dtype=float)
    if v_hat.shape != v_true.shape:
        raise ValueError("estimate and truth series must have equal length")
    err = np.full(v_true.shape, np.nan)
    ok = v_true >= V_FLOOR
    err[ok] = 100.0 * (v_hat[ok] - v_true[ok]) / v_true[ok]
    return err


def cp_error_series(
    cp_hat: np.ndarray, cp_true: np.ndarray, dt: float
) -> np.ndarray:
    """Percent error against the low-passed Cp reference; NaN = excluded."""
    cp_hat = np.asarray(cp_hat, dtype=float)
    cp_true = np.asarray(cp_true, dtype=float)
    if cp_hat.shape != cp_true.shape:
        raise ValueError("estimate and truth series must have equal length")
    ref = low_pass(cp_true, CP_REFERENCE_CUTOFF_HZ, dt)
    err = np.full(ref.shape, np.nan)
    ok = ref >= CP_REFERENCE_FLOOR
    err[ok] = 100.0 * (cp_hat[ok] - ref[ok]) / ref[ok]
    return err


@dataclass(frozen=True)
class ErrorStats:
    """Mean/std of a scored percent-error series plus bookkeeping counts."""

    mean_pct: float
    std_pct: float
    n_scored: int
    n_excluded: int


def _score(err: np.ndarray, settle_idx: int) -> ErrorStats:
    tail = err[settle_idx:]
    scored = tail[~np.isnan(tail)]
    n_excluded = int(np.isnan(tail).sum())
    if scored.size == 0:
        return ErrorStats(math.nan, math.nan, 0, n_excluded)
    return ErrorStats(
        float(scored.mean()), float(scored.std()), int(scored.size), n_excluded
    )


@dataclass(frozen=True)
class EstimatorMetrics:
    wind: ErrorStats
    cp: ErrorStats
    wind_hist: np.ndarray  # counts over the shared scenario bin edges


@dataclass(frozen=True)
class RunMetrics:
    seed: int
    imm: EstimatorMetrics
    kf: EstimatorMetrics
    settle_excluded_s: float


@dataclass(frozen=True)
class SeedRun:
    """Everything recorded for one seed: truth, estimates and scores."""

    seed: int
    trajectory: PlantTrajectory
    schedule: TrueCpSchedule
    v_imm: np.ndarray
    cp_imm: np.ndarray
    mu: np.ndarray  # (n, 3) posterior mode probabilities
    v_kf: np.ndarray
    cp_kf: np.ndarray
    wind_err_imm: np.ndarray
    wind_err_kf: np.ndarray
    cp_err_imm: np.ndarray
    cp_err_kf: np.ndarray
    settle_idx: int
    metrics: RunMetrics


@dataclass(frozen=True)
class AggregateMetrics:
    """Seed-averaged statistics (aggregation order is seed-sorted)."""

    imm_wind: ErrorStats
    kf_wind: ErrorStats
    imm_cp: ErrorStats
    kf_cp: ErrorStats
    n_seeds: int
    n_failed: int


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    runs: tuple[SeedRun, ...]
    failed: tuple[tuple[int, str], ...]
    hist_edges: np.ndarray
    aggregate: AggregateMetrics


def _aggregate_stats(per_seed: list[ErrorStats]) -> ErrorStats:
    return ErrorStats(
        mean_pct=float(np.mean([s.mean_pct for s in per_seed])),
        std_pct=float(np.mean([s.std_pct for s in per_seed])),
        n_scored=int(sum(s.n_scored for s in per_seed)),
        n_excluded=int(sum(s.n_excluded for s in per_seed)),
    )


def _hist_edges(pooled: np.ndarray, bins: int) -> np.ndarray:
    center = float(pooled.mean()) if pooled.size else 0.0
    half = 5.0 * float(pooled.std()) if pooled.size else 1.0
    half = max(half, 1e-9)
    return np.linspace(center - half, center + half, bins + 1)


def _hist_counts(err: np.ndarray, settle_idx: int, edges: np.ndarray) -> np.ndarray:
    tail = err[settle_idx:]
    scored = tail[~np.isnan(tail)]
    # clip outliers into the edge bins so counts always sum to n_scored
    clipped = np.clip(scored, edges[0], edges[-1])
    counts, _ = np.histogram(clipped, bins=edges)
    return counts


@dataclass(frozen=True)
class _RawRun:
    seed: int
    trajectory: PlantTrajectory
    schedule: TrueCpSchedule
    v_imm: np.ndarray
    cp_imm: np.ndarray
    mu: np.ndarray
    v_kf: np.ndarray
    cp_kf: np.ndarray


def _run_estimators(config: ExperimentConfig, seed: int) -> _RawRun:
    params = config.turbine_params()
    cp0 = config.surface()
    preset = config.preset(seed)
    schedule = generate_cp_schedule(
        config.schedule, config.schedule_delta_max, preset.n_steps, config.dt, seed
    )
    traj = simulate_plant(preset, schedule, params, cp0, config.meas_noise_std)
    n = traj.t.size

    noise = ekf.NoiseModel(
        Q=np.diag([config.q_omega_std**2, params.sigma_n**2]),
        R=np.array([[config.r_std**2]]),
    )
    x0 = np.array([traj.y_meas[0], preset.mean_wind])
    P0 = np.diag([config.p0_omega_std**2, config.p0_wind_std**2])
    bank = imm.build_cp_mode_bank(
        params, cp0, config.delta_cp, noise, x0, P0,
        config.transition(), np.asarray(config.mu0),
    )
    nominal = TurbineModel(params, cp0)
    kf_state = ekf.EstimatorState(x0, P0)

    v_imm = np.empty(n)
    cp_imm = np.empty(n)
    mu = np.empty((n, len(bank.models)))
    v_kf = np.empty(n)
    cp_kf = np.empty(n)

    v_imm[0] = v_kf[0] = x0[1]
    mu[0] = bank.mu
    cp_imm[0] = imm.estimate_cp(bank, x0, float(traj.pitch[0]))
    cp_kf[0] = _nominal_cp(nominal, x0, float(traj.pitch[0]))

    for k in range(1, n):
        u_prev = ControlInput(float(traj.pitch[k - 1]), float(traj.tau_g[k - 1]))
        y_k = float(traj.y_meas[k])
        bank, out = imm.imm_step(bank, y_k, u_prev)
        pred = ekf.predict(kf_state, u_prev, nominal, noise)
        kf_state, _ = ekf.update(pred, y_k, u_prev, nominal, noise)
        v_imm[k] = out.x[1]
        cp_imm[k] = out.cp_estimate
        mu[k] = out.mu
        v_kf[k] = kf_state.x[1]
        cp_kf[k] = _nominal_cp(nominal, kf_state.x, u_prev.pitch)
    return _RawRun(seed, traj, schedule, v_imm, cp_imm, mu, v_kf, cp_kf)


def _nominal_cp(model: TurbineModel, x: np.ndarray, pitch: float) -> float:
    omega = max(float(x[0]), OMEGA_FLOOR)
    v = max(float(x[1]), V_FLOOR)
    return model.cp.evaluate(omega * model.params.radius / v, pitch)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every seed, score both estimators, aggregate over seeds.

    A seed whose estimators fail numerically is recorded under
    ``failed`` and skipped by the aggregation; remaining seeds proceed.
    """
    config.validate()
    settle_idx = int(round(config.settle_s / config.dt))
    raws: list[_RawRun] = []
    failed: list[tuple[int, str]] = []
    for seed in sorted(config.seeds):
        try:
            raws.append(_run_estimators(config, seed))
        except NumericalError as exc:
            failed.append((seed, str(exc)))
    if not raws and failed:
        raise NumericalError(
            "every seed failed: " + "; ".join(f"{s}: {m}" for s, m in failed)
        )

    scored_pool: list[np.ndarray] = []
    errors: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
    for raw in raws:
        we_imm = wind_error_series(raw.v_imm, raw.trajectory.v_rews)
        we_kf = wind_error_series(raw.v_kf, raw.trajectory.v_rews)
        ce_imm = cp_error_series(raw.cp_imm, raw.trajectory.cp_true, config.dt)
        ce_kf = cp_error_series(raw.cp_kf, raw.trajectory.cp_true, config.dt)
        errors.append((we_imm, we_kf, ce_imm, ce_kf))
        for err in (we_imm, we_kf):
            tail = err[settle_idx:]
            scored_pool.append(tail[~np.isnan(tail)])
    edges = _hist_edges(
        np.concatenate(scored_pool) if scored_pool else np.array([]), config.hist_bins
    )

    runs: list[SeedRun] = []
    for raw, (we_imm, we_kf, ce_imm, ce_kf) in zip(raws, errors):
        metrics = RunMetrics(
            seed=raw.seed,
            imm=EstimatorMetrics(
                wind=_score(we_imm, settle_idx),
                cp=_score(ce_imm, settle_idx),
                wind_hist=_hist_counts(we_imm, settle_idx, edges),
            ),
            kf=EstimatorMetrics(
                wind=_score(we_kf, settle_idx),
                cp=_score(ce_kf, settle_idx),
                wind_hist=_hist_counts(we_kf, settle_idx, edges),
            ),
            settle_excluded_s=config.settle_s,
        )
        runs.append(
            SeedRun(
                seed=raw.seed,
                trajectory=raw.trajectory,
                schedule=raw.schedule,
                v_imm=raw.v_imm,
                cp_imm=raw.cp_imm,
                mu=raw.mu,
                v_kf=raw.v_kf,
                cp_kf=raw.cp_kf,
                wind_err_imm=we_imm,
                wind_err_kf=we_kf,
                cp_err_imm=ce_imm,
                cp_err_kf=ce_kf,
                settle_idx=settle_idx,
                metrics=metrics,
            )
        )

    aggregate = AggregateMetrics(
        imm_wind=_aggregate_stats([r.metrics.imm.wind for r in runs]),
        kf_wind=_aggregate_stats([r.metrics.kf.wind for r in runs]),
        imm_cp=_aggregate_stats([r.metrics.imm.cp for r in runs]),
        kf_cp=_aggregate_stats([r.metrics.kf.cp for r in runs]),
        n_seeds=len(runs),
        n_failed=len(failed),
    )
    return ExperimentResult(
        config=config,
        runs=tuple(runs),
        failed=tuple(failed),
        hist_edges=edges,
        aggregate=aggregate,
    )


# -- output files -------------------------------------------------------


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """Write summary, per-seed time series and histograms, config echo.

    Identical results produce byte-identical files.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written: list[Path] = []

    summary = out / "summary.csv"
    agg = result.aggregate
    with summary.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "scenario",
                "estimator",
                "wind_mean_pct",
                "wind_std_pct",
                "cp_mean_pct",
                "cp_std_pct",
                "n_scored_wind",
                "n_excluded_wind",
                "n_scored_cp",
                "n_excluded_cp",
                "n_seeds",
                "n_failed",
            ]
        )
        for name, wind, cp in (
            ("imm", agg.imm_wind, agg.imm_cp),
            ("kf", agg.kf_wind, agg.kf_cp),
        ):
            writer.writerow(
                [
                    result.config.scenario,
                    name,
                    repr(wind.mean_pct),
                    repr(wind.std_pct),
                    repr(cp.mean_pct),
                    repr(cp.std_pct),
                    wind.n_scored,
                    wind.n_excluded,
                    cp.n_scored,
                    cp.n_excluded,
                    agg.n_seeds,
                    agg.n_failed,
                ]
            )
    written.append(summary)

    for run in result.runs:
        ts_path = out / f"timeseries_{run.seed}.csv"
        with ts_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["t", "v_rews", "v_imm", "v_kf", "cp_true", "cp_imm", "cp_kf",
                 "mu1", "mu2", "mu3"]
            )
            traj = run.trajectory
            for k in range(traj.t.size):
                writer.writerow(
                    [
                        repr(float(traj.t[k])),
                        repr(float(traj.v_rews[k])),
                        repr(float(run.v_imm[k])),
                        repr(float(run.v_kf[k])),
                        repr(float(traj.cp_true[k])),
                        repr(float(run.cp_imm[k])),
                        repr(float(run.cp_kf[k])),
                        repr(float(run.mu[k, 0])),
                        repr(float(run.mu[k, 1])),
                        repr(float(run.mu[k, 2])),
                    ]
                )
        written.append(ts_path)

        hist_path = out / f"hist_{run.seed}.csv"
        with hist_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_left", "bin_right", "count_imm", "count_kf"])
            edges = result.hist_edges
            for b in range(edges.size - 1):
                writer.writerow(
                    [
                        repr(float(edges[b])),
                        repr(float(edges[b + 1])),
                        int(run.metrics.imm.wind_hist[b]),
                        int(run.metrics.kf.wind_hist[b]),
                    ]
                )
        written.append(hist_path)

    if result.failed:
        failed_path = out / "failed.csv"
        with failed_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed", "error"])
            for seed, msg in result.failed:
                writer.writerow([seed, msg])
        written.append(failed_path)

    echo = out / "config_echo.txt"
    echo.write_text(format_config(result.config), encoding="utf-8")
    written.append(echo)
    return written
