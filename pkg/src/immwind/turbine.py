"""Simplified rigid-drivetrain turbine model shared by plant and filters.

State is the pair (rotor speed, wind speed).  The rotor integrates the
imbalance between aerodynamic and generator torque; the wind component
is a random walk whose deterministic part is the identity.  The same
discrete step and analytic Jacobian are used by the simulator and by
every Kalman filter, so model mismatch in experiments comes only from
the power-coefficient surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cp import CpSurface
from .errors import DomainError

OMEGA_FLOOR = 0.05  # rad/s, guards the 1/omega singularity of the torque
V_FLOOR = 0.5  # m/s, guards 1/v in the tip-speed ratio


@dataclass(frozen=True)
class TurbineParameters:
    """Physical constants of the lumped turbine.

    Defaults are representative of a 10 MW class reference machine
    (they are package defaults, not measured values).  ``sigma_n`` is
    the per-step standard deviation of the random-walk wind model used
    by the estimators.
    """

    inertia: float = 1.6e8  # kg m^2
    radius: float = 89.2  # m
    air_density: float = 1.225  # kg/m^3
    omega_rated: float = 1.005  # rad/s
    tau_rated: float = 9.8e6  # N m
    dt: float = 0.05  # s
    sigma_n: float = 0.1  # m/s per step

    def __post_init__(self) -> None:
        for name in (
            "inertia",
            "radius",
            "air_density",
            "omega_rated",
            "tau_rated",
            "dt",
            "sigma_n",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"TurbineParameters.{name} must be strictly positive")
        # explicit-Euler stability margin for the slow drivetrain mode
        if self.dt > 0.1:
            raise ValueError("TurbineParameters.dt must be <= 0.1 s")


@dataclass(frozen=True)
class StateVector:
    """(rotor speed, wind speed); both must sit above the domain floors."""

    omega: float  # rad/s
    v: float  # m/s

    def as_array(self) -> np.ndarray:
        return np.array([self.omega, self.v])

    @classmethod
    def from_array(cls, x: np.ndarray) -> StateVector:
        return cls(float(x[0]), float(x[1]))


@dataclass(frozen=True)
class ControlInput:
    """Collective pitch (rad) and generator torque (N m).

    The controller keeps pitch within its actuation range and torque
    within [0, 1.2 * tau_rated]; the type itself does not re-validate.
    """

    pitch: float
    torque: float


def _check_floors(omega: float | None, v: float | None) -> None:
    if omega is not None and omega < OMEGA_FLOOR:
        raise DomainError(f"rotor speed {omega} rad/s is below the floor {OMEGA_FLOOR}")
    if v is not None and v < V_FLOOR:
        raise DomainError(f"wind speed {v} m/s is below the floor {V_FLOOR}")


def tip_speed_ratio(omega: float, v: float, radius: float) -> float:
    """lambda = omega * R / v."""
    _check_floors(None, v)
    return omega * radius / v


def aero_torque(
    omega: float,
    v: float,
    pitch: float,
    params: TurbineParameters,
    cp: CpSurface,
    extra_cp_offset: float = 0.0,
) -> float:
    """Aerodynamic torque 0.5 rho pi R^2 Cp(lambda, theta) v^3 / omega.

    ``extra_cp_offset`` shifts the surface without constructing a new
    one; the plant uses it to apply its true-Cp deviation schedule.
    """
    _check_floors(omega, v)
    lam = omega * params.radius / v
    cp_val = cp.evaluate(lam, pitch, extra_cp_offset)
    k = 0.5 * params.air_density * math.pi * params.radius**2
    return k * cp_val * v**3 / omega


def step_dynamics(
    x: StateVector, u: ControlInput, params: TurbineParameters, cp: CpSurface
) -> StateVector:
    """One explicit-Euler step of the drivetrain; wind passes through."""
    omega, v = _step_core(x.omega, x.v, u.pitch, u.torque, params, cp)
    return StateVector(omega, v)


def _step_core(
    omega: float,
    v: float,
    pitch: float,
    torque: float,
    params: TurbineParameters,
    cp: CpSurface,
    extra_cp_offset: float = 0.0,
) -> tuple[float, float]:
    tau_a = aero_torque(omega, v, pitch, params, cp, extra_cp_offset)
    omega_next = omega + params.dt / params.inertia * (tau_a - torque)
    if omega_next < OMEGA_FLOOR:
        omega_next = OMEGA_FLOOR
    return omega_next, v


def jacobian_f(
    x: StateVector, u: ControlInput, params: TurbineParameters, cp: CpSurface
) -> np.ndarray:
    """Jacobian of ``step_dynamics`` with respect to the state.

    [[1 + dt/J * dtau/domega, dt/J * dtau/dv], [0, 1]], using the Cp
    surface partials (taken before the value clamp).
    """
    omega, v = x.omega, x.v
    _check_floors(omega, v)
    lam = omega * params.radius / v
    cp_val, dcp_dlam, _ = cp.eval_with_partials(lam, u.pitch)
    k = 0.5 * params.air_density * math.pi * params.radius**2
    dtau_domega = k * v**2 * params.radius * dcp_dlam / omega - k * cp_val * v**3 / omega**2
    dtau_dv = 3.0 * k * cp_val * v**2 / omega - k * params.radius * v * dcp_dlam
    a = params.dt / params.inertia
    return np.array([[1.0 + a * dtau_domega, a * dtau_dv], [0.0, 1.0]])


def measure(x: StateVector) -> float:
    """The single measured output: rotor speed."""
    return x.omega


MEASUREMENT_JACOBIAN = np.array([[1.0, 0.0]])


@dataclass(frozen=True)
class TurbineModel:
    """Adapter exposing the turbine as an (f, h, jac_f, jac_h) model.

    Filter estimates may transiently wander below the domain floors;
    the adapter clamps them back before evaluating, which is exactly
    what the floors exist for.
    """

    params: TurbineParameters
    cp: CpSurface

    def _clamped(self, x: np.ndarray) -> StateVector:
        omega = float(x[0])
        v = float(x[1])
        return StateVector(max(omega, OMEGA_FLOOR), max(v, V_FLOOR))

    def f(self, x: np.ndarray, u: ControlInput) -> np.ndarray:
        s = self._clamped(x)
        omega, v = _step_core(s.omega, s.v, u.pitch, u.torque, self.params, self.cp)
        return np.array([omega, v])

    def jac_f(self, x: np.ndarray, u: ControlInput) -> np.ndarray:
        return jacobian_f(self._clamped(x), u, self.params, self.cp)

    def h(self, x: np.ndarray, u: ControlInput) -> np.ndarray:
        return np.array([float(x[0])])

    def jac_h(self, x: np.ndarray, u: ControlInput) -> np.ndarray:
        return MEASUREMENT_JACOBIAN
