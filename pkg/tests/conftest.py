import numpy as np
import pytest

from faddeev_ep.geometry import make_circle, sample
from faddeev_ep.dtn_maps import (
    PerturbedFamily,
    absorbing_potential,
    omega_poly_cos,
    omega_radial_poly,
    standard_conductive,
    zero_potential,
)


@pytest.fixture(scope="session")
def nodes128():
    return sample(make_circle(1.0), 128)


@pytest.fixture(scope="session")
def nodes256():
    return sample(make_circle(1.0), 256)


@pytest.fixture(scope="session")
def conductive():
    return standard_conductive()


@pytest.fixture(scope="session")
def absorbing():
    return absorbing_potential(1.0)


@pytest.fixture(scope="session")
def zero_pot():
    return zero_potential()


@pytest.fixture(scope="session")
def radial_family(conductive):
    return PerturbedFamily(conductive, *omega_radial_poly())


@pytest.fixture(scope="session")
def cos_family(conductive):
    return PerturbedFamily(conductive, *omega_poly_cos())


def dtn_mode_oracle(m, n_radial_fn, rtol=1e-11):
    """Radial-ODE oracle for the Dirichlet-to-Neumann eigenvalue of mode m.

    Shoots the regular solution u ~ r^{|m|} of -u'' - u'/r + (m^2/r^2 - n) u = 0
    from near the origin to r = 1 with an adaptive integrator and returns
    u'(1)/u(1).  Entirely independent of the collocation solver.
    """
    from scipy.integrate import solve_ivp

    m = abs(int(m))
    r0 = 1e-8 if m == 0 else 1e-3

    def rhs(r, y):
        u, up = y
        return [up, -up / r + (m * m / r**2 - complex(n_radial_fn(np.array([r]))[0])) * u]

    y0 = [1.0 + 0j, (m / r0) + 0j] if m else [1.0 + 0j, 0.0 + 0j]
    sol = solve_ivp(rhs, [r0, 1.0], y0, rtol=rtol, atol=1e-14)
    return complex(sol.y[1, -1] / sol.y[0, -1])
