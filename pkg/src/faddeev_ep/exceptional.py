"""The three exceptional-point detectors.

(i)   Kernel criterion: sigma_min and near-zero eigenvalue of the
      weight-symmetrized A(lambda, k) = F_{n_lambda} - F^out(k); a point k
      is exceptional iff A has a nontrivial kernel, with multiplicity equal
      to the kernel dimension.
(ii)  Small-(lambda, eps) expansion: the eigenvalue branch continued from
      the zero mode at (0,0) behaves as xi = a lambda + b eps + O(.^2) with
      a = -mu, b = 1, mu = integral of omega q over the domain; the
      exceptional locus solves xi = 0, i.e. eps ~ mu lambda.
(iii) Parity counter: n^-(k) counts negative eigenvalues of
      P(k) = I + S_k (F_n - F_0) with multiplicity; endpoints of a path
      with different parity bracket an exceptional point.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eig as dense_eig
from scipy.optimize import brentq

from .boundary_ops import (
    HMINUS,
    HPLUS,
    L2,
    BoundaryOperator,
    NearSingularError,
    assemble_S,
    weighted_matrix,
)
from .dtn_maps import PerturbedFamily, Potential, assemble_F0, assemble_Fn, assemble_Fout
from .geometry import NodeSet
from .green import KPoint, epsilon_from_log

__all__ = [
    "TOL_KER_REL",
    "TOL_NEG",
    "CriterionOperator",
    "ScanResult",
    "LocusResult",
    "XiCurve",
    "ParityRecord",
    "ParityVerdict",
    "mu",
    "mu_for_family",
    "criterion",
    "scan",
    "scan_to_csv",
    "trace_locus",
    "fit_xi",
    "assemble_P",
    "n_minus",
    "parity_path",
]

#: kernel tolerance, relative to ||A||: singular values below it count as kernel
TOL_KER_REL = 1e-5

#: eigenvalues of P(k) within +-TOL_NEG of zero flag the count as unreliable
TOL_NEG = 1e-6

#: default outer scan radius; |k| > K0 is free of exceptional points for
#: bounded potentials (Green-function decay makes the volume equation contractive)
K0_DEFAULT = 10.0


def mu(omega_fn, q_fn, n_radial: int = 200, n_theta: int = 128) -> float:
    """mu = integral over the unit disk of omega(z) q(|z|) dS, by quadrature.

    Gauss-Legendre in radius crossed with trapezoid in angle; flags
    (warns on) mu <= 0, where the sign-definite perturbation theory has
    nothing to say.
    """
    x, w = leggauss(n_radial)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    zgrid = r[:, None] * np.exp(1j * theta[None, :])
    om = np.asarray(omega_fn(zgrid), dtype=float)
    qq = np.asarray(q_fn(r), dtype=float)[:, None]
    val = float(np.sum(om * qq * r[:, None] * wr[:, None]) * (2 * np.pi / n_theta))
    if val <= 0:
        warnings.warn(f"mu = {val:.3e} <= 0: the sign hypothesis of the locus expansion fails", stacklevel=2)
    return val


def mu_for_family(family: PerturbedFamily, **kwargs) -> float:
    if family.base.q_fn is None:
        raise ValueError("mu needs the conductivity q of a conductive base potential")
    return mu(family.omega_fn, family.base.q_fn, **kwargs)


def _potential_at(n, lam: float) -> Potential:
    if isinstance(n, PerturbedFamily):
        return n.at(lam)
    if lam != 0.0:
        raise ValueError("a bare Potential cannot be perturbed; pass a PerturbedFamily for lambda != 0")
    return n


@dataclass(frozen=True)
class CriterionOperator:
    """Weighted-symmetrized A(lambda, k) together with its kernel diagnostics."""

    a_weighted: np.ndarray
    sigma_min: float
    norm: float
    eig_near_zero: float
    kernel_dim_estimate: int
    tol_ker: float
    k: KPoint
    lam: float


def criterion(lam: float, k, n, nodes: NodeSet, tol_ker_rel: float = TOL_KER_REL,
              fout=None) -> CriterionOperator:
    """Kernel-criterion diagnostics of A(lambda,k) = F_{n_lambda} - F^out(k).

    ``n`` is a Potential (lam must then be 0) or a PerturbedFamily.
    ``eig_near_zero`` is the eigenvalue of the Hermitian part of the
    weighted A nearest zero; near k = 0 the non-self-adjoint part is
    O(|k|)-small, which makes sign changes of this eigenvalue a well-posed
    root-finding target.  E_D proximity propagates from the F^out assembly.
    """
    kp = k if isinstance(k, KPoint) else KPoint.from_k(k)
    pot = _potential_at(n, lam)
    fn = assemble_Fn(nodes, pot)
    fo = fout if fout is not None else assemble_Fout(kp, nodes)
    a_op = BoundaryOperator(fn.matrix - fo.matrix, HPLUS, HMINUS, nodes)
    aw = weighted_matrix(a_op)
    sv = np.linalg.svd(aw, compute_uv=False)
    norm, smin = float(sv[0]), float(sv[-1])
    tol_ker = tol_ker_rel * norm
    kdim = int(np.sum(sv < tol_ker))
    herm = 0.5 * (aw + aw.conj().T)
    eigs = np.linalg.eigvalsh(herm)
    near = float(eigs[np.argmin(np.abs(eigs))])
    return CriterionOperator(aw, smin, norm, near, kdim, tol_ker, kp, float(lam))


def assemble_P(k, n, nodes: NodeSet, lam: float = 0.0) -> BoundaryOperator:
    """P(k) = I + S_k (F_n - F_0); real matrix for real potentials.

    Entries of S_k (hence P) span a dynamic range ~ e^{2|k| diam} at large
    |k|, so sigma_min(P) stops measuring kernel distance beyond |k| ~ 2;
    the eigenvalues, which the parity detector consumes, remain accurate
    and N-stable across the desk annulus (checked to |k| = 10).
    """
    kp = k if isinstance(k, KPoint) else KPoint.from_k(k)
    pot = _potential_at(n, lam)
    fn = assemble_Fn(nodes, pot)
    f0 = assemble_F0(nodes)
    s = assemble_S(kp, nodes)
    mat = np.eye(nodes.n_nodes) + s.matrix @ (fn.matrix - f0.matrix)
    if pot.is_real and np.iscomplexobj(mat):
        scale = max(1.0, float(np.max(np.abs(mat.real))))
        if np.max(np.abs(mat.imag)) > 1e-8 * scale:
            raise ArithmeticError("P(k) lost realness for a real potential")
        mat = mat.real
    return BoundaryOperator(np.ascontiguousarray(mat), L2, L2, nodes)


@dataclass(frozen=True)
class ParityRecord:
    """Eigenvalue census of P(k) used by the parity detector."""

    k: KPoint
    eigs: np.ndarray
    n_minus: int
    near_exceptional: bool
    pairing_ok: bool
    pairing_error: float


def n_minus(k, n, nodes: NodeSet, lam: float = 0.0, tol_neg: float = TOL_NEG) -> ParityRecord:
    """Count negative real eigenvalues of P(k) with algebraic multiplicity.

    A real matrix has an exactly conjugation-closed spectrum, so complex
    pairs contribute evenly and cannot flip the parity.  Any eigenvalue
    within tol_neg of zero marks the count as unreliable
    (``near_exceptional``).  Only meaningful for real potentials.
    """
    pot = _potential_at(n, lam)
    if not pot.is_real:
        warnings.warn("n^- is defined for real potentials; counts for complex n are not meaningful", stacklevel=2)
    p = assemble_P(k, n, nodes, lam=lam)
    eigs = dense_eig(p.matrix, right=False)
    real_mask = eigs.imag == 0.0 if not np.iscomplexobj(p.matrix) else np.abs(eigs.imag) < 1e-12
    count = int(np.sum(real_mask & (eigs.real < -tol_neg)))
    near = bool(np.min(np.abs(eigs)) < tol_neg)
    # conjugation closure of the spectrum (real integral kernel)
    pairing_error = 0.0
    complex_eigs = eigs[~real_mask]
    if complex_eigs.size:
        d = np.abs(complex_eigs[:, None] - np.conj(complex_eigs)[None, :])
        pairing_error = float(np.max(np.min(d, axis=1)))
    kp = k if isinstance(k, KPoint) else KPoint.from_k(k)
    return ParityRecord(kp, eigs, count, near, pairing_error <= 1e-8, pairing_error)


# ---------------------------------------------------------------------------
# Grid scans

@dataclass(frozen=True)
class ScanResult:
    """Per-k record of the detector outputs (serializable for plotting)."""

    k: KPoint
    eps: float | None
    sigma_min_A: float | None
    eig_near_zero: float | None
    sigma_min_P: float | None
    n_minus: int | None
    t: complex | None
    flags: tuple[str, ...]


def _safe_eps(kp: KPoint, nu: float) -> float | None:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return epsilon_from_log(kp.log_abs, nu)
    except ValueError:
        return None


def scan(points, lam: float, n, nodes: NodeSet, with_parity: bool = True,
         with_transform: bool = False) -> list[ScanResult]:
    """Evaluate the detectors on a k-grid; individual failures are recorded
    and the scan continues."""
    from .transform import scatter_t, trace_u  # local import to avoid a cycle

    out = []
    for kp in points:
        kp = kp if isinstance(kp, KPoint) else KPoint.from_k(kp)
        flags: list[str] = []
        sigma_a = near = sigma_p = None
        nminus = None
        tval = None
        try:
            crit = criterion(lam, kp, n, nodes)
            sigma_a, near = crit.sigma_min, crit.eig_near_zero
            if crit.kernel_dim_estimate > 0:
                flags.append("kernel")
        except NearSingularError:
            flags.append("ed_refused")
        except Exception as exc:  # pragma: no cover - diagnostic path
            flags.append(f"criterion_failed:{type(exc).__name__}")
        if with_parity:
            try:
                rec = n_minus(kp, n, nodes, lam=lam)
                p = assemble_P(kp, n, nodes, lam=lam)
                sigma_p = float(np.linalg.svd(p.matrix, compute_uv=False)[-1])
                nminus = rec.n_minus
                if rec.near_exceptional:
                    flags.append("near_exceptional")
                if not rec.pairing_ok:
                    flags.append("pairing_violation")
            except Exception as exc:
                flags.append(f"parity_failed:{type(exc).__name__}")
        if with_transform:
            try:
                tr = trace_u(kp, _potential_at(n, lam), nodes)
                tval = scatter_t(kp, _potential_at(n, lam), nodes, trace=tr).t
            except Exception as exc:
                flags.append(f"transform_failed:{type(exc).__name__}")
        out.append(ScanResult(kp, _safe_eps(kp, nodes.length), sigma_a, near, sigma_p, nminus, tval, tuple(flags)))
    return out


def scan_to_csv(results, path) -> None:
    """CSV stream (k_re, k_im, eps, sigma_min_A, eig_near_zero, sigma_min_P, n_minus, flags)."""

    def fmt(x):
        return "" if x is None else repr(float(x))

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k_re", "k_im", "eps", "sigma_min_A", "eig_near_zero", "sigma_min_P", "n_minus", "flags"])
        for r in results:
            k = r.k.k
            writer.writerow([
                repr(k.real), repr(k.imag), fmt(r.eps), fmt(r.sigma_min_A), fmt(r.eig_near_zero),
                fmt(r.sigma_min_P), "" if r.n_minus is None else str(r.n_minus),
                ";".join(r.flags),
            ])


# ---------------------------------------------------------------------------
# Locus tracing (detector ii)

@dataclass(frozen=True)
class LocusResult:
    """Exceptional locus eps*(phi) for a perturbation strength lambda.

    The first-order prediction carried here is eps = (mu/nu) lambda, the
    zero of the Rayleigh eigenvalue xi = -(mu/nu) lambda + eps of the
    weighted criterion operator (in the normalization where the eps-slope
    is +1); mu = int omega q dS and nu = |bd O|.
    """

    lam: float
    mu: float
    nu: float
    angles: np.ndarray
    eps_star: np.ndarray
    failures: tuple[str, ...] = ()

    @property
    def prediction(self) -> float:
        return self.mu * self.lam / self.nu

    @property
    def ratio_errors(self) -> np.ndarray:
        return np.abs(self.eps_star / self.prediction - 1.0)

    @property
    def max_ratio_error(self) -> float:
        return float(np.max(self.ratio_errors))

    @property
    def ratio_errors_unnormalized(self) -> np.ndarray:
        """Deviation from the mu*lambda prediction (no 1/nu); kept for
        comparison, the measured locus excludes it on any nu != 1 curve."""
        return np.abs(self.eps_star / (self.mu * self.lam) - 1.0)

    @property
    def mean_eps(self) -> float:
        return float(np.mean(self.eps_star))

    def log_abs_k(self) -> np.ndarray:
        """ln|k*| along the locus (|k*| itself may underflow)."""
        from .green import log_abs_k_from_eps

        return np.array([log_abs_k_from_eps(e, self.nu) for e in self.eps_star])


def trace_locus(lam: float, family: PerturbedFamily, nodes: NodeSet, angles,
                eps_bracket=None, xtol_rel: float = 1e-6) -> LocusResult:
    """Root-find eps*(phi) with eig_near_zero(A(lambda, k(eps, phi))) = 0.

    Requires small lambda > 0 and mu > 0.  Rays without a sign change are
    reported as failures (for lambda > 0 that contradicts the expansion
    and indicates resolution failure).
    """
    if not 0 < lam <= 0.1:
        raise ValueError(f"locus tracing expects 0 < lambda <= 0.1, got {lam}")
    muval = mu_for_family(family)
    if muval <= 0:
        raise ValueError(f"mu = {muval:.3e} <= 0: no locus is predicted")
    nu = nodes.length
    target = muval * lam / nu
    lo0, hi0 = eps_bracket if eps_bracket is not None else (0.2 * target, 3.0 * target)

    angles = np.asarray(angles, dtype=float)
    eps_star = np.full(angles.shape, np.nan)
    failures = []
    for i, phi in enumerate(angles):

        def f(eps):
            kp = KPoint.from_eps(eps, phi, nu)
            return criterion(lam, kp, family, nodes).eig_near_zero

        lo, hi = lo0, hi0
        flo, fhi = f(lo), f(hi)
        widen = 0
        while flo * fhi > 0 and widen < 6:
            lo, hi = lo * 0.5, min(hi * 1.5, 0.6)
            flo, fhi = f(lo), f(hi)
            widen += 1
        if flo * fhi > 0:
            failures.append(f"phi={phi:.4f}: no sign change of eig_near_zero in eps [{lo:.3g}, {hi:.3g}]")
            continue
        eps_star[i] = brentq(f, lo, hi, xtol=xtol_rel * target, rtol=1e-12)
    return LocusResult(float(lam), muval, float(nu), angles, eps_star, tuple(failures))


# ---------------------------------------------------------------------------
# xi(lambda, eps) expansion fit (detector ii, coefficients)

@dataclass(frozen=True)
class XiCurve:
    """Samples of the continued eigenvalue xi and its linear fit."""

    samples: list = field(default_factory=list)   # records (lam, eps, phi, xi)
    a: float = np.nan
    b: float = np.nan
    residual: float = np.nan
    xi00: float = np.nan


def _herm_eigensystem(lam, kp_or_zero, family, nodes):
    if kp_or_zero is None:
        from .dtn_maps import assemble_Fout_zero

        fo = assemble_Fout_zero(nodes)
    else:
        fo = assemble_Fout(kp_or_zero, nodes)
    pot = _potential_at(family, lam)
    fn = assemble_Fn(nodes, pot)
    aw = weighted_matrix(BoundaryOperator(fn.matrix - fo.matrix, HPLUS, HMINUS, nodes))
    herm = 0.5 * (aw + aw.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    return vals, vecs


def _tracked_xi(vals, vecs, v_ref):
    overlap = np.abs(v_ref.conj() @ vecs)
    j = int(np.argmax(overlap))
    return float(vals[j]), vecs[:, j]


def fit_xi(family: PerturbedFamily, nodes: NodeSet, lambda_grid, eps_grid,
           phi: float = 0.0) -> XiCurve:
    """Track the eigenvalue continued from the (0,0) zero mode; fit xi ~ a lam + b eps.

    Eigenpairs are matched between neighbouring grid points by maximal
    eigenvector overlap.  The least-squares fit has no intercept (the
    anchor xi(0,0) = 0 is recorded separately in ``xi00``).
    """
    lambda_grid = np.sort(np.asarray(lambda_grid, dtype=float))
    eps_grid = np.sort(np.asarray(eps_grid, dtype=float))
    if np.any(np.abs(lambda_grid) > 0.1) or np.any(eps_grid > 0.1) or np.any(eps_grid < 0):
        raise ValueError("fit_xi grids must sit in |lambda| <= 0.1, 0 <= eps <= 0.1")
    nu = nodes.length

    vals0, vecs0 = _herm_eigensystem(0.0, None, family, nodes)
    j0 = int(np.argmin(np.abs(vals0)))
    xi00, v00 = float(vals0[j0]), vecs0[:, j0]

    samples = []
    # continue along lambda at eps = 0 first, then up each eps column
    order = np.argsort(np.abs(lambda_grid), kind="stable")
    v_at_lam = {}
    for i in order:
        lam = lambda_grid[i]
        vals, vecs = _herm_eigensystem(lam, None, family, nodes)
        # chain from the nearest previously tracked lambda (same sign path)
        prev = v00
        done = [l for l in v_at_lam if (l == 0 or np.sign(l) == np.sign(lam)) and abs(l) < abs(lam)]
        if done:
            prev = v_at_lam[max(done, key=abs)]
        xi, v = _tracked_xi(vals, vecs, prev)
        v_at_lam[lam] = v
        samples.append((float(lam), 0.0, float(phi), xi))
        v_prev = v
        for eps in eps_grid:
            if eps == 0.0:
                continue
            kp = KPoint.from_eps(eps, phi, nu)
            vals, vecs = _herm_eigensystem(lam, kp, family, nodes)
            xi, v_prev = _tracked_xi(vals, vecs, v_prev)
            samples.append((float(lam), float(eps), float(phi), xi))

    arr = np.array([(s[0], s[1], s[3]) for s in samples])
    design = arr[:, :2]
    target = arr[:, 2]
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = float(np.sqrt(np.mean((design @ coef - target) ** 2)))
    return XiCurve(samples, float(coef[0]), float(coef[1]), resid, xi00)


# ---------------------------------------------------------------------------
# Parity along paths (detector iii)

@dataclass(frozen=True)
class ParityVerdict:
    evidence: bool
    message: str
    bracket: tuple[KPoint, KPoint] | None = None
    record_a: ParityRecord | None = None
    record_b: ParityRecord | None = None
    flags: tuple[str, ...] = ()


def _logpolar_path(k_a: KPoint, k_b: KPoint):
    def path(s: float) -> KPoint:
        return KPoint.from_polar_log(
            (1 - s) * k_a.log_abs + s * k_b.log_abs,
            (1 - s) * k_a.phi + s * k_b.phi,
        )

    return path


def parity_path(k_a, k_b, n, nodes: NodeSet, lam: float = 0.0, path=None,
                resolution: float = 1 / 256) -> ParityVerdict:
    """Bisect a path for the parity jump of n^-; returns a bracketing interval.

    The default path interpolates linearly in (ln|k|, arg k), an analytic
    arc that cannot pass through k = 0.  Endpoint counts flagged as
    near-exceptional refuse the verdict.
    """
    k_a = k_a if isinstance(k_a, KPoint) else KPoint.from_k(k_a)
    k_b = k_b if isinstance(k_b, KPoint) else KPoint.from_k(k_b)
    path = path or _logpolar_path(k_a, k_b)
    rec_a = n_minus(path(0.0), n, nodes, lam=lam)
    rec_b = n_minus(path(1.0), n, nodes, lam=lam)
    if rec_a.near_exceptional or rec_b.near_exceptional:
        raise ValueError("endpoint n^- count is near-exceptional: parity verdict refused")
    if (rec_a.n_minus - rec_b.n_minus) % 2 == 0:
        return ParityVerdict(False, "no parity evidence", record_a=rec_a, record_b=rec_b)

    lo, hi = 0.0, 1.0
    par_lo = rec_a.n_minus % 2
    flags: list[str] = []
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        rec_m = n_minus(path(mid), n, nodes, lam=lam)
        if rec_m.near_exceptional:
            flags.append(f"midpoint_near_exceptional@s={mid:.6f}")
            lo, hi = mid - 0.25 * (hi - lo), mid + 0.25 * (hi - lo)
            break
        if rec_m.n_minus % 2 == par_lo:
            lo = mid
        else:
            hi = mid
    return ParityVerdict(
        True,
        f"parity jump bracketed in s = [{lo:.6f}, {hi:.6f}]",
        bracket=(path(lo), path(hi)),
        record_a=rec_a,
        record_b=rec_b,
        flags=tuple(flags),
    )
