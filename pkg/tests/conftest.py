import numpy as np
import pytest

from immwind import AnalyticCpSurface, GridCpSurface, TurbineParameters


class LinearModel:
    """Constant-matrix model exposing the (f, h, jac_f, jac_h) interface."""

    def __init__(self, F, H):
        self.F = np.atleast_2d(np.asarray(F, dtype=float))
        self.H = np.atleast_2d(np.asarray(H, dtype=float))

    def f(self, x, u):
        return self.F @ x

    def jac_f(self, x, u):
        return self.F

    def h(self, x, u):
        return self.H @ x

    def jac_h(self, x, u):
        return self.H


def random_psd(rng, n, scale=1.0):
    a = rng.normal(size=(n, n))
    return scale * (a @ a.T) + 1e-12 * np.eye(n)


@pytest.fixture(scope="session")
def params():
    return TurbineParameters()


@pytest.fixture(scope="session")
def analytic_surface():
    return AnalyticCpSurface()


@pytest.fixture(scope="session")
def grid_surface(analytic_surface):
    lam_axis = np.arange(1.0, 15.0 + 1e-9, 0.25)
    theta_axis = np.radians(np.arange(0.0, 30.0 + 1e-9, 0.5))
    return analytic_surface.to_grid(lam_axis, theta_axis)


@pytest.fixture
def flat_surface():
    return GridCpSurface.constant(0.48)
