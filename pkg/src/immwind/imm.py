"""Interacting multiple-model estimator over a bank of EKFs.

Each cycle runs four stages: per-filter EKF predict/update, Bayesian
mode-probability update from the Gaussian residual likelihoods,
probability-weighted output combination, and Markov-chain interaction
(mixing).  Mixing executes at the end of a cycle and seeds every
filter's starting state for the next one, so the bank stored between
calls always holds mixed states together with the predicted (prior)
mode probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import ekf
from .cp import CpSurface
from .errors import NumericalError
from .turbine import OMEGA_FLOOR, V_FLOOR, TurbineModel, TurbineParameters

MU_FLOOR = 1e-12  # keeps every mode alive and mixing denominators positive


@dataclass(frozen=True)
class ModeBank:
    """Parallel filters plus the Markov machinery tying them together.

    ``mu`` holds the prior mode probabilities for the next measurement;
    ``offsets`` records each mode's Cp offset for reporting.
    ``underflow_count`` counts cycles whose likelihoods all underflowed
    to zero (the probabilities are then carried through unchanged).
    """

    models: tuple
    states: tuple[ekf.EstimatorState, ...]
    mu: np.ndarray
    transition: np.ndarray
    noise: ekf.NoiseModel
    offsets: tuple[float, ...] = ()
    underflow_count: int = 0

    def __post_init__(self) -> None:
        mu = np.array(self.mu, dtype=float).reshape(-1)
        pi = np.array(self.transition, dtype=float)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "transition", pi)
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "models", tuple(self.models))
        m = len(self.models)
        if m == 0 or len(self.states) != m or mu.size != m:
            raise ValueError("models, states and mu must have matching length >= 1")
        if np.any(mu < 0.0) or abs(float(mu.sum()) - 1.0) > 1e-12:
            raise ValueError(f"mode probabilities must lie on the simplex, got {mu}")
        if pi.shape != (m, m) or np.any(pi < 0.0):
            raise ValueError("transition matrix must be m x m with nonnegative entries")
        if np.any(np.abs(pi.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError(f"every transition-matrix row must sum to 1, got {pi}")


@dataclass(frozen=True)
class ImmOutput:
    """Combined estimate, covariance, posterior mode probabilities, Cp."""

    x: np.ndarray
    P: np.ndarray
    mu: np.ndarray
    cp_estimate: float


def likelihood(z, S) -> float:
    """Gaussian residual likelihood (2 pi det S)^(-1/2) exp(-z' S^-1 z / 2).

    The normalisation is written for a single measurement channel; the
    general n-dimensional constant would be (2 pi)^(n/2) det(S)^(1/2),
    which collapses to this form at n = 1.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if z.size == 1:
        s = float(S[0, 0])
        if not s > 0.0:
            raise NumericalError(f"innovation covariance S={s} is not positive")
        return math.exp(-0.5 * float(z[0]) ** 2 / s) / math.sqrt(2.0 * math.pi * s)
    det = float(np.linalg.det(S))
    if not det > 0.0:
        raise NumericalError(f"innovation covariance has det={det}")
    quad = float(z @ np.linalg.solve(S, z))
    return math.exp(-0.5 * quad) / math.sqrt(2.0 * math.pi * det)


def update_mode_probs(mu: np.ndarray, likelihoods: np.ndarray) -> np.ndarray:
    """Bayes update of the mode probabilities, floored and renormalised.

    If every weighted likelihood underflows to zero the prior is
    returned unchanged (the caller counts these events).
    """
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(likelihoods, dtype=float)
    weighted = mu * lam
    total = float(weighted.sum())
    if not total > 0.0:
        return mu.copy()
    post = weighted / total
    post = np.maximum(post, MU_FLOOR)
    return post / post.sum()


def _combine_arrays(
    xs: np.ndarray, Ps: np.ndarray, mu: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    x = mu @ xs
    d = x[None, :] - xs
    P = np.einsum("i,ijk->jk", mu, Ps) + np.einsum("i,ij,ik->jk", mu, d, d)
    return x, 0.5 * (P + P.T)


def combine(
    states: tuple[ekf.EstimatorState, ...] | list[ekf.EstimatorState], mu: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Probability-weighted mean and spread-corrected covariance."""
    mu = np.asarray(mu, dtype=float)
    xs = np.stack([s.x for s in states])  # (m, n)
    Ps = np.stack([s.P for s in states])  # (m, n, n)
    return _combine_arrays(xs, Ps, mu)


def predict_mode_probs(transition: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Prior mode probabilities for the next cycle: mu'_j = sum_i pi_ij mu_i."""
    return np.asarray(transition, dtype=float).T @ np.asarray(mu, dtype=float)


def mixing_weights(
    transition: np.ndarray, mu: np.ndarray, mu_prior_next: np.ndarray
) -> np.ndarray:
    """W[i, j] = pi_ij mu_i / mu'_j; every column sums to one."""
    pi = np.asarray(transition, dtype=float)
    mu = np.asarray(mu, dtype=float)
    denom = np.asarray(mu_prior_next, dtype=float)
    if np.any(denom <= 0.0):
        raise NumericalError(f"predicted mode probabilities contain zeros: {denom}")
    return pi * mu[:, None] / denom[None, :]


def _mix_arrays(xs: np.ndarray, Ps: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xm = w.T @ xs  # (m, n), row j = mixed state of filter j
    d = xm[None, :, :] - xs[:, None, :]  # d[i, j] = x_mixed_j - x_i
    Pm = np.einsum("ij,ikl->jkl", w, Ps) + np.einsum("ij,ijk,ijl->jkl", w, d, d)
    return xm, 0.5 * (Pm + Pm.transpose(0, 2, 1))


def mix(
    states: tuple[ekf.EstimatorState, ...] | list[ekf.EstimatorState],
    weights: np.ndarray,
) -> tuple[ekf.EstimatorState, ...]:
    """Re-seed every filter with the weight-mixed state and covariance."""
    w = np.asarray(weights, dtype=float)
    xs = np.stack([s.x for s in states])  # (m, n)
    Ps = np.stack([s.P for s in states])  # (m, n, n)
    xm, Pm = _mix_arrays(xs, Ps, w)
    return tuple(ekf.EstimatorState(xm[j], Pm[j]) for j in range(len(states)))


def estimate_cp(bank: ModeBank, x: np.ndarray, pitch: float, mu=None) -> float:
    """Probability-weighted Cp of the mode surfaces at the combined state.

    Uses the bank's stored probabilities unless ``mu`` is supplied
    (``imm_step`` passes the posterior of the current cycle).  Values
    below the domain floors are clamped before forming the tip-speed
    ratio.  Returns NaN when the bank's models carry no Cp surface.
    """
    if mu is None:
        mu = bank.mu
    if not all(isinstance(getattr(m, "cp", None), CpSurface) for m in bank.models):
        return math.nan
    omega = max(float(x[0]), OMEGA_FLOOR)
    v = max(float(x[1]), V_FLOOR)
    total = 0.0
    for w, model in zip(mu, bank.models):
        lam = omega * model.params.radius / v
        total += float(w) * model.cp.evaluate(lam, pitch)
    return total


def imm_step(bank: ModeBank, y: float, u) -> tuple[ModeBank, ImmOutput]:
    """One full IMM cycle; returns the next bank and the combined output.

    On any filter failure the exception propagates and the caller's
    bank value is untouched.
    """
    posts = []
    lams = np.empty(len(bank.models))
    for j, (model, state) in enumerate(zip(bank.models, bank.states)):
        pred = ekf.predict(state, u, model, bank.noise)
        post, report = ekf.update(pred, y, u, model, bank.noise)
        posts.append(post)
        lams[j] = likelihood(report.residual, report.innovation_cov)
    underflow = not float(np.dot(bank.mu, lams)) > 0.0
    mu_post = update_mode_probs(bank.mu, lams)
    xs = np.stack([p.x for p in posts])
    Ps = np.stack([p.P for p in posts])
    x, P = _combine_arrays(xs, Ps, mu_post)
    cp_hat = estimate_cp(bank, x, getattr(u, "pitch", 0.0), mu=mu_post)
    mu_prior = predict_mode_probs(bank.transition, mu_post)
    weights = mixing_weights(bank.transition, mu_post, mu_prior)
    xm, Pm = _mix_arrays(xs, Ps, weights)
    mixed = tuple(ekf.EstimatorState(xm[j], Pm[j]) for j in range(len(posts)))
    new_bank = replace(
        bank,
        states=mixed,
        mu=mu_prior,
        underflow_count=bank.underflow_count + (1 if underflow else 0),
    )
    return new_bank, ImmOutput(x, P, mu_post, cp_hat)


def build_cp_mode_bank(
    params: TurbineParameters,
    cp_nominal: CpSurface,
    delta_cp: float,
    noise: ekf.NoiseModel,
    x0: np.ndarray,
    P0: np.ndarray,
    transition: np.ndarray,
    mu0: np.ndarray,
) -> ModeBank:
    """Three turbine filters with Cp offsets (0, +delta_cp, -delta_cp)."""
    offsets = (0.0, +float(delta_cp), -float(delta_cp))
    models = tuple(TurbineModel(params, cp_nominal.with_offset(d)) for d in offsets)
    state0 = ekf.EstimatorState(x0, P0)
    mu0 = np.asarray(mu0, dtype=float)
    return ModeBank(
        models=models,
        states=(state0,) * len(offsets),
        mu=mu0 / mu0.sum(),
        transition=np.asarray(transition, dtype=float),
        noise=noise,
        offsets=offsets,
    )


def symmetric_transition(m: int, stay: float) -> np.ndarray:
    """m x m transition matrix with ``stay`` on the diagonal."""
    if not 0.0 < stay <= 1.0:
        raise ValueError(f"stay probability must be in (0, 1], got {stay}")
    if m == 1:
        return np.array([[1.0]])
    off = (1.0 - stay) / (m - 1)
    pi = np.full((m, m), off)
    np.fill_diagonal(pi, stay)
    return pi
