"""Power-coefficient surfaces Cp(lambda, theta).

Two interchangeable representations are provided: an analytic surrogate
with exact partial derivatives, and a rectangular-grid lookup with
bilinear interpolation.  Both carry an additive scalar offset and clamp
their inputs to the surface bounds; evaluated values are clamped to
[0, CP_CEILING].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

CP_CEILING = 0.593  # Betz limit

_DEG_PER_RAD = 180.0 / math.pi

# Surrogate coefficients c1..c6 of the widely used exponential Cp fit.
_C1 = 0.5176
_C2 = 116.0
_C3 = 0.4
_C4 = 5.0
_C5 = 21.0
_C6 = 0.0068


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


class CpSurface:
    """Common evaluation contract for Cp surfaces.

    Subclasses implement ``_base_value`` and ``_base_partials`` on the
    un-offset, un-clamped base map.  ``evaluate`` adds the offset and
    clamps to [0, CP_CEILING]; ``partials`` are taken before the value
    clamp and forced to zero in any direction whose input clamp engaged.
    """

    offset: float
    lam_bounds: tuple[float, float]
    theta_bounds: tuple[float, float]

    def _base_value(self, lam: float, theta: float) -> float:
        raise NotImplementedError

    def _base_partials(self, lam: float, theta: float) -> tuple[float, float]:
        raise NotImplementedError

    def evaluate(self, lam: float, theta: float, extra_offset: float = 0.0) -> float:
        """Cp at (lam, theta) after input clamping, offset and value clamp.

        ``extra_offset`` is added on top of the surface's own offset; it
        lets a caller probe a shifted surface without constructing one.
        """
        lam_c = _clamp(lam, *self.lam_bounds)
        theta_c = _clamp(theta, *self.theta_bounds)
        val = self._base_value(lam_c, theta_c) + self.offset + extra_offset
        return _clamp(val, 0.0, CP_CEILING)

    def partials(self, lam: float, theta: float) -> tuple[float, float]:
        """(dCp/dlam, dCp/dtheta) with theta in radians.

        Evaluated before the [0, CP_CEILING] value clamp; zero in a
        direction whose input lies outside the bounds.
        """
        lam_lo, lam_hi = self.lam_bounds
        th_lo, th_hi = self.theta_bounds
        lam_c = _clamp(lam, lam_lo, lam_hi)
        theta_c = _clamp(theta, th_lo, th_hi)
        d_lam, d_theta = self._base_partials(lam_c, theta_c)
        if lam < lam_lo or lam > lam_hi:
            d_lam = 0.0
        if theta < th_lo or theta > th_hi:
            d_theta = 0.0
        return d_lam, d_theta

    def eval_with_partials(self, lam: float, theta: float) -> tuple[float, float, float]:
        """(value, dCp/dlam, dCp/dtheta) with the same clamp semantics as
        ``evaluate`` and ``partials``; one fused lookup for Jacobians."""
        return (self.evaluate(lam, theta), *self.partials(lam, theta))

    def with_offset(self, delta: float) -> CpSurface:
        """Copy of this surface with ``delta`` added to its offset."""
        return replace(self, offset=self.offset + delta)


@dataclass(frozen=True)
class AnalyticCpSurface(CpSurface):
    """Exponential Cp surrogate with analytic partial derivatives.

    Cp0(lam, theta) = c1*(c2/li - c3*theta_deg - c4)*exp(-c5/li) + c6*lam
    with 1/li = 1/(lam + 0.08*theta_deg) - 0.035/(theta_deg^3 + 1) and
    theta supplied in radians.
    """

    offset: float = 0.0
    lam_bounds: tuple[float, float] = (0.5, 20.0)
    theta_bounds: tuple[float, float] = (0.0, math.radians(35.0))

    def __post_init__(self) -> None:
        lam_lo, lam_hi = self.lam_bounds
        th_lo, th_hi = self.theta_bounds
        if not (lam_lo < lam_hi and th_lo < th_hi):
            raise ValueError("surface bounds must be non-empty intervals")
        # guard the 1/(lam + 0.08*theta_deg) pole over the whole domain
        if lam_lo + 0.08 * th_lo * _DEG_PER_RAD <= 1e-9:
            raise ValueError("lambda lower bound too close to the surrogate pole")

    def _terms(self, lam: float, theta: float) -> tuple[float, float, float, float]:
        theta_deg = theta * _DEG_PER_RAD
        denom = lam + 0.08 * theta_deg
        g = 1.0 / denom - 0.035 / (theta_deg**3 + 1.0)  # g = 1/lambda_i
        a = _C2 * g - _C3 * theta_deg - _C4
        e = math.exp(-_C5 * g)
        return theta_deg, denom, g, a * e

    def _base_value(self, lam: float, theta: float) -> float:
        _, _, _, ae = self._terms(lam, theta)
        return _C1 * ae + _C6 * lam

    def _base_partials(self, lam: float, theta: float) -> tuple[float, float]:
        theta_deg, denom, g, _ = self._terms(lam, theta)
        a = _C2 * g - _C3 * theta_deg - _C4
        e = math.exp(-_C5 * g)
        dg_dlam = -1.0 / denom**2
        dg_dtheta_deg = -0.08 / denom**2 + 0.105 * theta_deg**2 / (theta_deg**3 + 1.0) ** 2
        common = _C2 - _C5 * a  # d/dg of a*exp(-c5 g) divided by exp(-c5 g)
        d_lam = _C1 * e * dg_dlam * common + _C6
        d_theta_deg = _C1 * e * (dg_dtheta_deg * common - _C3)
        return d_lam, d_theta_deg * _DEG_PER_RAD

    def to_grid(self, lam_axis: np.ndarray, theta_axis: np.ndarray) -> GridCpSurface:
        """Sample the base map onto a grid (offset is carried over)."""
        lam_axis = np.asarray(lam_axis, dtype=float)
        theta_axis = np.asarray(theta_axis, dtype=float)
        values = np.array(
            [[self._base_value(l, t) for t in theta_axis] for l in lam_axis]
        )
        return GridCpSurface(lam_axis, theta_axis, values, offset=self.offset)


@dataclass(frozen=True)
class GridCpSurface(CpSurface):
    """Bilinear interpolation on a rectangular (lambda, theta) grid.

    ``theta_axis`` is stored in radians.  Partials interpolate nodal
    derivative grids obtained by central differences (one-sided at the
    edges), so they agree with plain grid differences at the nodes and
    vary continuously in between.
    """

    lam_axis: np.ndarray
    theta_axis: np.ndarray
    values: np.ndarray
    offset: float = 0.0

    def __post_init__(self) -> None:
        lam = np.asarray(self.lam_axis, dtype=float)
        theta = np.asarray(self.theta_axis, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "lam_axis", lam)
        object.__setattr__(self, "theta_axis", theta)
        object.__setattr__(self, "values", vals)
        if lam.ndim != 1 or theta.ndim != 1 or lam.size < 2 or theta.size < 2:
            raise ValueError("grid axes must be 1-D with at least two points")
        if not (np.all(np.diff(lam) > 0) and np.all(np.diff(theta) > 0)):
            raise ValueError("grid axes must be strictly increasing")
        if vals.shape != (lam.size, theta.size):
            raise ValueError(
                f"value matrix shape {vals.shape} does not match axes "
                f"({lam.size}, {theta.size})"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        # uniform axes admit O(1) cell lookup; fall back to bisection otherwise
        dl = np.diff(lam)
        dt = np.diff(theta)
        uniform = bool(
            np.allclose(dl, dl[0], rtol=1e-9, atol=0.0)
            and np.allclose(dt, dt[0], rtol=1e-9, atol=0.0)
        )
        object.__setattr__(self, "_uniform", uniform)
        object.__setattr__(self, "_lam_list", lam.tolist())
        object.__setattr__(self, "_theta_list", theta.tolist())
        object.__setattr__(self, "_vals_list", vals.tolist())

    @property
    def lam_bounds(self) -> tuple[float, float]:
        return float(self.lam_axis[0]), float(self.lam_axis[-1])

    @property
    def theta_bounds(self) -> tuple[float, float]:
        return float(self.theta_axis[0]), float(self.theta_axis[-1])

    @cached_property
    def _deriv_grids(self) -> tuple[list, list]:
        d_lam = np.gradient(self.values, self.lam_axis, axis=0)
        d_theta = np.gradient(self.values, self.theta_axis, axis=1)
        return d_lam.tolist(), d_theta.tolist()

    def _cell(self, axis: list, x: float) -> int:
        n = len(axis)
        if self._uniform:
            i = int((x - axis[0]) * (n - 1) / (axis[-1] - axis[0]))
        else:
            i = int(np.searchsorted(axis, x, side="right")) - 1
        return 0 if i < 0 else n - 2 if i > n - 2 else i

    def _locate(self, lam: float, theta: float) -> tuple[int, int, float, float]:
        la, ta = self._lam_list, self._theta_list
        i = self._cell(la, lam)
        j = self._cell(ta, theta)
        t = (lam - la[i]) / (la[i + 1] - la[i])
        u = (theta - ta[j]) / (ta[j + 1] - ta[j])
        return i, j, t, u

    @staticmethod
    def _interp_at(grid: list, i: int, j: int, t: float, u: float) -> float:
        row0 = grid[i]
        row1 = grid[i + 1]
        a = row0[j] + t * (row1[j] - row0[j])
        b = row0[j + 1] + t * (row1[j + 1] - row0[j + 1])
        return a + u * (b - a)

    def _base_value(self, lam: float, theta: float) -> float:
        i, j, t, u = self._locate(lam, theta)
        return self._interp_at(self._vals_list, i, j, t, u)

    def _base_partials(self, lam: float, theta: float) -> tuple[float, float]:
        d_lam, d_theta = self._deriv_grids
        i, j, t, u = self._locate(lam, theta)
        return (
            self._interp_at(d_lam, i, j, t, u),
            self._interp_at(d_theta, i, j, t, u),
        )

    def eval_with_partials(self, lam: float, theta: float) -> tuple[float, float, float]:
        lam_lo, lam_hi = self.lam_bounds
        th_lo, th_hi = self.theta_bounds
        lam_c = _clamp(lam, lam_lo, lam_hi)
        theta_c = _clamp(theta, th_lo, th_hi)
        i, j, t, u = self._locate(lam_c, theta_c)
        val = _clamp(
            self._interp_at(self._vals_list, i, j, t, u) + self.offset, 0.0, CP_CEILING
        )
        d_lam_grid, d_theta_grid = self._deriv_grids
        d_lam = 0.0 if (lam < lam_lo or lam > lam_hi) else self._interp_at(d_lam_grid, i, j, t, u)
        d_theta = 0.0 if (theta < th_lo or theta > th_hi) else self._interp_at(d_theta_grid, i, j, t, u)
        return val, d_lam, d_theta

    @classmethod
    def constant(
        cls,
        value: float,
        lam_bounds: tuple[float, float] = (0.0, 30.0),
        theta_bounds: tuple[float, float] = (0.0, math.radians(45.0)),
    ) -> GridCpSurface:
        """Flat surface Cp == value over the given bounds (handy in tests)."""
        lam_axis = np.array(lam_bounds, dtype=float)
        theta_axis = np.array(theta_bounds, dtype=float)
        return cls(lam_axis, theta_axis, np.full((2, 2), float(value)))

    @classmethod
    def from_csv(cls, path: str | Path, offset: float = 0.0) -> GridCpSurface:
        """Load a grid from CSV.

        Layout: first row is the pitch axis in degrees (its first cell is
        ignored), first column of subsequent rows is the tip-speed-ratio
        axis, the body holds Cp values.
        """
        path = Path(path)
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
        if len(rows) < 3 or len(rows[0]) < 3:
            raise ValueError(f"{path}: need at least a 2x2 grid plus axes")
        try:
            theta_deg = np.array([float(c) for c in rows[0][1:]])
            lam_axis = np.array([float(row[0]) for row in rows[1:]])
            values = np.array([[float(c) for c in row[1:]] for row in rows[1:]])
        except ValueError as exc:
            raise ValueError(f"{path}: non-numeric cell in Cp table: {exc}") from exc
        return cls(lam_axis, np.radians(theta_deg), values, offset=offset)

    def to_csv(self, path: str | Path) -> None:
        """Write the grid in the layout accepted by ``from_csv``."""
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([""] + [repr(float(v)) for v in np.degrees(self.theta_axis)])
            for lam, row in zip(self.lam_axis, self.values):
                writer.writerow([repr(float(lam))] + [repr(float(v)) for v in row])


def default_grid_surface(
    lam_step: float = 0.25, theta_step_deg: float = 0.5
) -> GridCpSurface:
    """The analytic surrogate sampled onto the default working grid."""
    lam_axis = np.arange(1.0, 15.0 + 1e-9, lam_step)
    theta_axis = np.radians(np.arange(0.0, 30.0 + 1e-9, theta_step_deg))
    return AnalyticCpSurface().to_grid(lam_axis, theta_axis)
