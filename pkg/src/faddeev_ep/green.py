"""Zero-energy Faddeev Green function and the spectral parameter k.

For the exponentially growing incident waves e^{i zeta . z} with
zeta = (k, ik), zeta . z = k(x+iy), the Green function depends on z and k
only through the complex product w = k z and splits as

    G_k(z) = G_k^0(z) + N(kz),
    G_k^0(z) = -(1/2pi) ln|z| - gamma/2pi - (1/2pi) ln|k|,

with N entire, real-valued and N(0) = 0.  The closed form used here is

    G_k(z) = (1/2pi) Re E1(-i k z),      N(w) = (1/2pi) Re Ein(-i w),

where E1 is the exponential integral and Ein its entire part
(Ein(s) = gamma + ln s + E1(s)).  Re E1 is continuous across the E1 branch
cut, and e^{-i zeta . z} G_k(z) decays in every direction of w, which is the
radiation condition that singles this branch out.  Everything is validated
against independent oracles in the test suite (weak Laplace identity,
kz-scaling, realness, decay of the ratio |G_k e^{-i zeta.z}| sqrt(|k||z|)).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1

__all__ = [
    "EULER_GAMMA",
    "TOL_G",
    "KPoint",
    "GreenValue",
    "epsilon",
    "epsilon_from_log",
    "log_abs_k_from_eps",
    "g0",
    "green_remainder",
    "green_g",
    "faddeev_g",
    "dump_remainder_csv",
]

EULER_GAMMA = float(np.euler_gamma)

#: default evaluation tolerance for the Green function
TOL_G = 1e-8

# series/E1 crossover for the entire part Ein(-iw); the series avoids the
# ln|w| cancellation near w = 0
_SERIES_RADIUS = 4.0
_SERIES_TERMS = 48


def epsilon_from_log(log_abs_k: float, nu: float) -> float:
    """eps = [-nu (gamma/2pi + ln|k|/2pi)]^{-1} from ln|k| directly."""
    if nu <= 0:
        raise ValueError(f"boundary length must be positive, got {nu}")
    bracket = -nu * (EULER_GAMMA + log_abs_k) / (2 * np.pi)
    if abs(bracket) < 1e-14:
        raise ValueError(f"epsilon pole: |k| = e^-gamma makes the bracket vanish (ln|k| = {log_abs_k})")
    if log_abs_k > -EULER_GAMMA:
        warnings.warn(
            f"epsilon evaluated outside its regime |k| < e^-gamma (ln|k| = {log_abs_k:.4g}); value is negative",
            stacklevel=2,
        )
    return 1.0 / bracket


def epsilon(abs_k: float, nu: float) -> float:
    """Small parameter eps(k) for a boundary of length nu.

    eps = [-nu (gamma/2pi + (1/2pi) ln|k|)]^{-1}; positive and strictly
    increasing in |k| on 0 < |k| < e^{-gamma}.
    """
    if abs_k <= 0:
        raise ValueError(f"|k| must be positive, got {abs_k}")
    return epsilon_from_log(float(np.log(abs_k)), nu)


def log_abs_k_from_eps(eps: float, nu: float) -> float:
    """Invert eps(|k|): ln|k| = -gamma - 2pi/(nu*eps)."""
    if eps <= 0 or nu <= 0:
        raise ValueError(f"need eps > 0 and nu > 0, got eps={eps}, nu={nu}")
    return -EULER_GAMMA - 2 * np.pi / (nu * eps)


@dataclass(frozen=True)
class KPoint:
    """Nonzero complex spectral parameter k, stored in log-polar form.

    Storing ln|k| keeps eps-parametrized scans meaningful down to
    eps ~ 1e-3, where |k| = e^{-gamma - 2pi/(nu eps)} underflows double
    precision; the ``k`` property may then round to 0.0 while ``log_abs``
    and all Green-function formulas stay exact.
    """

    log_abs: float
    phi: float

    def __post_init__(self):
        if not np.isfinite(self.log_abs):
            raise ValueError(f"ln|k| must be finite, got {self.log_abs}")
        object.__setattr__(self, "phi", float(np.mod(self.phi, 2 * np.pi)))

    @classmethod
    def from_k(cls, k: complex) -> "KPoint":
        k = complex(k)
        if k == 0:
            raise ValueError("k = 0 is not a valid spectral parameter")
        return cls(float(np.log(abs(k))), float(np.angle(k)))

    @classmethod
    def from_polar_log(cls, log_abs: float, phi: float) -> "KPoint":
        return cls(float(log_abs), float(phi))

    @classmethod
    def from_eps(cls, eps: float, phi: float, nu: float) -> "KPoint":
        """The k with eps(k) = eps on a boundary of length nu, arg k = phi."""
        return cls(log_abs_k_from_eps(eps, nu), float(phi))

    @property
    def abs(self) -> float:
        return float(np.exp(self.log_abs))

    @property
    def k(self) -> complex:
        return self.abs * complex(np.cos(self.phi), np.sin(self.phi))

    def eps(self, nu: float) -> float:
        return epsilon_from_log(self.log_abs, nu)

    def kz(self, z) -> np.ndarray:
        """Complex product k*z (w-variable of the Green function)."""
        return self.k * np.asarray(z, dtype=complex)

    def __repr__(self):
        return f"KPoint(|k|=e^{self.log_abs:.6g}, arg={self.phi:.6g})"


def _as_kpoint(k) -> KPoint:
    return k if isinstance(k, KPoint) else KPoint.from_k(k)


@dataclass(frozen=True)
class GreenValue:
    """One evaluation of the Faddeev Green function, split g = g0 + N(kz)."""

    g: float
    g0: float

    @property
    def remainder(self) -> float:
        return self.g - self.g0


def g0(k, z) -> float:
    """Logarithmic part G_k^0(z) = -(1/2pi) ln|z| - gamma/2pi - (1/2pi) ln|k|."""
    kp = _as_kpoint(k)
    az = np.abs(np.asarray(z, dtype=complex))
    if np.any(az == 0):
        raise ValueError("G_k^0 is singular at z = 0")
    val = -(np.log(az) + EULER_GAMMA + kp.log_abs) / (2 * np.pi)
    return float(val) if np.isscalar(z) or np.ndim(z) == 0 else val


def _ein(zeta: np.ndarray) -> np.ndarray:
    """Entire part of the exponential integral, by its Taylor series.

    Ein(s) = sum_{n>=1} (-1)^{n+1} s^n / (n n!); accurate to machine
    precision for |s| <= _SERIES_RADIUS with _SERIES_TERMS terms.
    """
    zeta = np.asarray(zeta, dtype=complex)
    total = np.zeros_like(zeta)
    term = zeta.copy()
    total += term
    for n in range(1, _SERIES_TERMS):
        term = term * (-zeta) * (n / (n + 1) ** 2)
        total += term
    return total


def green_remainder(w) -> np.ndarray:
    """Smooth remainder N(w) = G_k(z) - G_k^0(z) as a function of w = kz.

    Entire, real-valued, N(0) = 0.  Vectorized over w.
    """
    w = np.asarray(w, dtype=complex)
    out = np.empty(w.shape, dtype=float)
    zeta = -1j * w
    small = np.abs(w) <= _SERIES_RADIUS
    if np.any(small):
        out[small] = _ein(zeta[small]).real / (2 * np.pi)
    if np.any(~small):
        zl = zeta[~small]
        # Ein = gamma + ln s + E1(s); Re is continuous across the E1 cut
        out[~small] = (EULER_GAMMA + np.log(np.abs(zl)) + exp1(zl).real) / (2 * np.pi)
    return out


def green_g(k, z) -> np.ndarray:
    """G_k(z) for array z.

    Small |kz| goes through the g0 + N(kz) split (exact for |k| far below
    the underflow threshold of ``k`` itself, since the log part uses ln|k|
    directly and N(kz) -> N(0) = 0).  Large |kz| uses (1/2pi) Re E1(-ikz)
    without the split: there G and -g0 nearly cancel and the split form
    would lose all significant digits.
    """
    kp = _as_kpoint(k)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("Faddeev Green function is singular at z = 0")
    w = kp.kz(z)
    out = np.empty(w.shape, dtype=float)
    small = np.abs(w) <= _SERIES_RADIUS
    if np.any(small):
        zs = z[small] if z.shape == w.shape else z
        out[small] = g0(kp, zs) + _ein(-1j * w[small]).real / (2 * np.pi)
    if np.any(~small):
        out[~small] = exp1(-1j * w[~small]).real / (2 * np.pi)
    return out


def faddeev_g(k, z, tol: float = TOL_G) -> GreenValue:
    """Evaluate G_k(z) at a single point, with its g = g0 + N(kz) split.

    The raw evaluation sums the two conjugate exponential-integral
    branches; their imaginary parts must cancel below ``tol`` (times the
    magnitude scale), which is asserted as the realness contract.
    """
    kp = _as_kpoint(k)
    z = complex(z)
    if z == 0:
        raise ValueError("Faddeev Green function is singular at z = 0")
    w = complex(kp.kz(z))
    zeta = -1j * w
    if abs(w) <= _SERIES_RADIUS:
        raw_n = (_ein(np.array([zeta]))[0] + _ein(np.array([np.conj(zeta)]))[0]) / (4 * np.pi)
        scale = max(1.0, abs(raw_n))
        if abs(raw_n.imag) > tol * scale:
            raise ArithmeticError(f"Green evaluation lost realness: Im = {raw_n.imag:.3e} at w = {w}")
        base = g0(kp, z)
        return GreenValue(g=base + raw_n.real, g0=base)
    raw = (exp1(zeta) + exp1(np.conj(zeta))) / (4 * np.pi)
    scale = max(1.0, abs(raw))
    if abs(raw.imag) > tol * scale:
        raise ArithmeticError(f"Green evaluation lost realness: Im = {raw.imag:.3e} at w = {w}")
    base = g0(kp, z)
    return GreenValue(g=float(raw.real), g0=base)


def dump_remainder_csv(path, ws) -> None:
    """Diagnostic dump of N(w) samples as CSV rows (w_re, w_im, N)."""
    ws = np.asarray(ws, dtype=complex).ravel()
    vals = green_remainder(ws)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["w_re", "w_im", "N"])
        for w, v in zip(ws, vals):
            writer.writerow([repr(float(w.real)), repr(float(w.imag)), repr(float(v))])
