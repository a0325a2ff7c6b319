import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from faddeev_ep.green import (
    EULER_GAMMA,
    KPoint,
    TOL_G,
    dump_remainder_csv,
    epsilon,
    faddeev_g,
    g0,
    green_g,
    green_remainder,
    log_abs_k_from_eps,
)


def test_g0_values():
    assert g0(1.0, 1.0) == pytest.approx(-EULER_GAMMA / (2 * np.pi), abs=1e-12)
    assert abs(g0(1.0, 1.0) - (-0.091867)) < 1e-5
    assert g0(np.exp(-EULER_GAMMA), 1.0) == pytest.approx(0.0, abs=1e-14)
    assert g0(1.0, np.e) == pytest.approx(-(1 + EULER_GAMMA) / (2 * np.pi), abs=1e-12)
    assert abs(g0(1.0, np.e) - (-0.251022)) < 1e-5


def test_g0_domain_errors():
    with pytest.raises(ValueError):
        g0(1.0, 0.0)
    with pytest.raises(ValueError):
        KPoint.from_k(0.0)


def test_epsilon_values():
    assert epsilon(np.exp(-EULER_GAMMA - 1), 2 * np.pi) == pytest.approx(1.0, rel=1e-12)
    assert epsilon(np.exp(-EULER_GAMMA - 10), 2 * np.pi) == pytest.approx(0.1, rel=1e-12)
    assert epsilon(np.exp(-EULER_GAMMA - 1), 4 * np.pi) == pytest.approx(0.5, rel=1e-12)


def test_epsilon_pole_and_regime():
    with pytest.raises(ValueError):
        epsilon(np.exp(-EULER_GAMMA), 2 * np.pi)
    with pytest.warns(UserWarning):
        epsilon(1.0, 2 * np.pi)


def test_epsilon_monotone_in_abs_k():
    eps = [epsilon(a, 2 * np.pi) for a in np.geomspace(1e-8, 0.3, 20)]
    assert np.all(np.diff(eps) > 0)
    assert np.all(np.array(eps) > 0)


def test_kpoint_from_eps_roundtrip():
    kp = KPoint.from_eps(0.05, 1.2, 2 * np.pi)
    assert kp.eps(2 * np.pi) == pytest.approx(0.05, rel=1e-12)
    assert kp.phi == pytest.approx(1.2)
    # deep below the underflow threshold of k itself
    kp2 = KPoint.from_eps(0.002, 0.0, 2 * np.pi)
    assert np.isfinite(kp2.log_abs)
    assert kp2.eps(2 * np.pi) == pytest.approx(0.002, rel=1e-12)
    assert log_abs_k_from_eps(0.002, 2 * np.pi) < -400


def test_remainder_vanishes_at_zero():
    assert green_remainder(0.0) == 0.0
    vals = np.abs(green_remainder(1e-6 * np.exp(1j * np.linspace(0, 2 * np.pi, 16))))
    assert np.max(vals) < 1e-5


def test_remainder_depends_on_kz_only():
    rng = np.random.default_rng(11)
    for _ in range(50):
        k = rng.uniform(0.1, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        z = rng.uniform(0.1, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        a = green_remainder(np.array([k * z]))[0]
        b = green_remainder(np.array([(k / 2) * (2 * z)]))[0]
        assert abs(a - b) <= TOL_G


def test_series_exp1_branches_agree():
    """The Taylor-series and exp1 evaluations coincide at the crossover radius."""
    from scipy.special import exp1

    from faddeev_ep.green import _ein

    ws = 4.0 * np.exp(1j * np.linspace(0, 2 * np.pi, 64, endpoint=False))
    zeta = -1j * ws
    series = _ein(zeta).real / (2 * np.pi)
    via_exp1 = (EULER_GAMMA + np.log(np.abs(zeta)) + exp1(zeta).real) / (2 * np.pi)
    assert np.max(np.abs(series - via_exp1)) < 1e-12


def test_realness_at_random_points():
    rng = np.random.default_rng(5)
    for _ in range(100):
        k = rng.uniform(0.1, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        z = rng.uniform(0.1, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        val = faddeev_g(k, z)  # raises if the conjugate branches fail to cancel
        assert np.isfinite(val.g) and np.isfinite(val.g0)
        assert val.remainder == pytest.approx(val.g - val.g0)


def _bump(x, y, x0=0.0, y0=0.0, radius=0.8):
    r2 = ((x - x0) ** 2 + (y - y0) ** 2) / radius**2
    out = np.zeros_like(r2)
    m = r2 < 1
    out[m] = np.exp(-1.0 / (1.0 - r2[m]))
    return out


def _lap(f, x, y, h=1e-4):
    return (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4 * f(x, y)) / h**2


def _disk_quadrature(f, radius, center, nr=400, nth=400):
    """2-D polar quadrature oracle around ``center`` (integrable ln-singularity)."""
    xg, wg = leggauss(nr)
    r = 0.5 * radius * (xg + 1)
    wr = 0.5 * radius * wg
    th = 2 * np.pi * np.arange(nth) / nth
    rg, tg = np.meshgrid(r, th, indexing="ij")
    x = center[0] + rg * np.cos(tg)
    y = center[1] + rg * np.sin(tg)
    return np.sum(f(x, y) * rg * wr[:, None] * (2 * np.pi / nth))


@pytest.mark.parametrize("center", [(0.0, 0.0), (0.6, -0.3)])
def test_weak_laplace_identity(center):
    """-Lap G_k = delta_0, tested weakly against a smooth bump."""
    k = KPoint.from_k(1.3 + 0.4j)
    radius = 0.5

    def psi(x, y):
        return _bump(x, y, *center, radius=radius)

    def integrand(x, y):
        z = x + 1j * y
        g = np.zeros_like(x)
        ok = np.abs(z) > 0
        g[ok] = green_g(k, z[ok])
        return g * _lap(psi, x, y)

    # integrate over the bump support (the Green log-singularity, when the
    # bump covers the origin, is integrable for the polar rule)
    val = _disk_quadrature(integrand, radius, center)
    expected = -psi(np.array([0.0]), np.array([0.0]))[0]
    assert abs(val - expected) < 1e-5


def test_decay_ratio_bounded():
    """|G_k(z) e^{-i zeta.z}| sqrt(|k||z|) stays below a single constant."""
    worst = 0.0
    for ka in np.geomspace(0.5, 50, 10):
        for za in np.geomspace(0.1, 5, 10):
            for ph in np.linspace(0, 2 * np.pi, 6, endpoint=False):
                for phz in np.linspace(0, 2 * np.pi, 6, endpoint=False):
                    k = ka * np.exp(1j * ph)
                    z = za * np.exp(1j * phz)
                    w = k * z
                    g = green_g(KPoint.from_k(k), np.array([z]))[0]
                    worst = max(worst, abs(g) * np.exp(w.imag) * np.sqrt(ka * za))
    assert worst < 0.5  # measured 0.151 on this grid


def test_remainder_smoothness_proxy():
    """Finite-difference second derivatives of N stay bounded on |w| <= 1."""
    h = 1e-4
    worst = 0.0
    for theta in np.linspace(0, np.pi, 8):
        d = np.exp(1j * theta)
        s = np.linspace(-1, 1, 41)
        w = s * d
        second = (green_remainder(w + h * d) - 2 * green_remainder(w) + green_remainder(w - h * d)) / h**2
        worst = max(worst, float(np.max(np.abs(second))))
    assert worst < 1.0


def test_split_consistency():
    v = faddeev_g(1.0, 1.0)
    assert v.g == pytest.approx(green_g(1.0, np.array([1.0 + 0j]))[0], abs=1e-13)
    assert v.g0 == pytest.approx(g0(1.0, 1.0), abs=1e-15)


def test_dump_remainder_csv(tmp_path):
    path = tmp_path / "remainder.csv"
    ws = np.array([0.5 + 0.1j, 1.0 - 2.0j, 3.0j])
    dump_remainder_csv(path, ws)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "w_re,w_im,N"
    got = np.array([float(r.split(",")[2]) for r in rows[1:]])
    np.testing.assert_allclose(got, green_remainder(ws), rtol=1e-15)
