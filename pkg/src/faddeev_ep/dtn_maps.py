"""Potentials on the disk and the four Dirichlet-to-Neumann maps.

Interior maps: F_0 (Laplace) and F_n (Schrodinger with potential n).
Exterior maps: the Faddeev map F^out(k) = F_0 - (S_k)^{-1}, its continuous
extension F^out(0) (block-diagonal: 0 on constants, F_0 - B^{-1} on
mean-free data), and the classical bounded-solution map F_b^out.

F_0 and F_b^out are realized through the single-layer representation
u = Stilde[sigma] + c with mean-free sigma, which is complete for both the
interior and the bounded exterior problem:

    F_0      = (K' + I/2) B^{-1} P_perp,
    F_b^out  = (K' - I/2) B^{-1} P_perp,

with K' the adjoint double layer.  F_n wraps the polar collocation solver
in :mod:`faddeev_ep.disk_solver` and in this version requires the unit
disk (general curves are supported for the Laplace-only maps).
"""

from __future__ import annotations

import hashlib
import json
import threading
import weakref
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .boundary_ops import (
    HMINUS,
    HPLUS,
    BoundaryOperator,
    NearSingularError,
    assemble_B,
    assemble_S,
    invert_S,
    invert_on_meanfree,
    mean_projectors,
)
from .disk_solver import DiskDtnSolver
from .geometry import NodeSet
from .green import KPoint

__all__ = [
    "Potential",
    "PerturbedFamily",
    "zero_potential",
    "conductive_radial",
    "standard_conductive",
    "absorbing_potential",
    "generic_potential",
    "raster_potential",
    "omega_radial_poly",
    "omega_poly_cos",
    "DtnMap",
    "assemble_F0",
    "assemble_Fn",
    "assemble_Fout",
    "assemble_Fout_zero",
    "assemble_Fout_bounded",
    "adjoint_double_layer",
    "clear_fn_cache",
]


@dataclass(frozen=True)
class Potential:
    """Complex-valued potential n(z) supported in the closed unit disk.

    ``kind`` is one of generic / conductive / perturbed_conductive /
    absorbing / raster.  ``descriptor`` is a JSON-serializable dict that
    identifies the potential for caching; ``radial`` marks potentials that
    depend on |z| only (enabling decoupled interior solves).
    """

    kind: str
    descriptor: dict
    eval_fn: Callable[[np.ndarray], np.ndarray]
    radial: bool = False
    radial_fn: Callable[[np.ndarray], np.ndarray] | None = None
    q_fn: Callable[[np.ndarray], np.ndarray] | None = None
    is_real: bool = True

    def eval(self, z) -> np.ndarray:
        """n(z) for complex z (vectorized); zero outside the closed disk."""
        z = np.asarray(z, dtype=complex)
        vals = np.asarray(self.eval_fn(z), dtype=complex)
        return np.where(np.abs(z) <= 1.0, vals, 0.0)

    def eval_radial(self, r) -> np.ndarray:
        if self.radial_fn is None:
            raise ValueError(f"{self.kind} potential has no radial profile")
        r = np.asarray(r, dtype=float)
        return np.where(r <= 1.0, np.asarray(self.radial_fn(r), dtype=complex), 0.0)

    @property
    def key(self) -> str:
        blob = json.dumps(self.descriptor, sort_keys=True)
        return f"{self.kind}:{hashlib.sha256(blob.encode()).hexdigest()[:16]}"


def zero_potential() -> Potential:
    return Potential(
        kind="generic",
        descriptor={"family": "zero"},
        eval_fn=lambda z: np.zeros(np.shape(z)),
        radial=True,
        radial_fn=lambda r: np.zeros(np.shape(r)),
    )


def _check_conductive(n_fn, q_fn, rng_seed=0, tol=1e-4) -> None:
    """Verify n = -q^{-1/2} Lap q^{1/2} by finite differences on a sample grid."""
    rng = np.random.default_rng(rng_seed)
    r = rng.uniform(0.05, 0.95, 120)
    th = rng.uniform(0, 2 * np.pi, 120)
    x, y = r * np.cos(th), r * np.sin(th)
    h = 1e-3

    def f(xx, yy):
        return np.sqrt(np.asarray(q_fn(np.abs(xx + 1j * yy)), dtype=float))

    lap = (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4 * f(x, y)) / h**2
    n_fd = -lap / f(x, y)
    n_stored = np.asarray(n_fn(x + 1j * y), dtype=complex).real
    scale = max(1.0, float(np.max(np.abs(n_stored))))
    err = float(np.max(np.abs(n_fd - n_stored))) / scale
    if err > tol:
        raise ValueError(f"conductive structure check failed: |n_fd - n| = {err:.3e} > {tol}")


def conductive_radial(q, dq, d2q, name: str, params: dict, validate: bool = True) -> Potential:
    """Conductive potential n = -q^{-1/2} Lap q^{1/2} from a radial q > 0.

    ``q, dq, d2q`` are vectorized radial callables; q must be C^2 with
    q - 1 vanishing outside the disk (q(1) = 1, q'(1) = 0).
    """

    def n_radial(r):
        r = np.asarray(r, dtype=float)
        qq = np.asarray(q(r), dtype=float)
        if np.any(qq <= 0):
            raise ValueError("conductivity q must be positive")
        qp = np.asarray(dq(r), dtype=float)
        qpp = np.asarray(d2q(r), dtype=float)
        # -( q''/2q - q'^2/4q^2 + q'/2qr ), with the r -> 0 limit q''(0)/2q(0)
        small = r < 1e-8
        last = np.where(small, qpp / (2 * qq), qp / (2 * qq * np.where(small, 1.0, r)))
        return -(qpp / (2 * qq) - qp**2 / (4 * qq**2) + last)

    pot = Potential(
        kind="conductive",
        descriptor={"family": name, **params},
        eval_fn=lambda z: n_radial(np.abs(z)),
        radial=True,
        radial_fn=n_radial,
        q_fn=lambda r: np.asarray(q(np.asarray(r, dtype=float)), dtype=float),
    )
    if validate:
        _check_conductive(pot.eval, pot.q_fn)
    return pot


def standard_conductive(amplitude: float = 2.0, power: int = 3) -> Potential:
    """The canonical radial fixture q = 1 + amplitude (1 - r^2)^power."""
    a, p = float(amplitude), int(power)
    if p < 2:
        raise ValueError("power >= 2 keeps q in C^2 across the boundary")

    def q(r):
        s = 1 - np.minimum(r, 1.0) ** 2
        return 1 + a * s**p

    def dq(r):
        r = np.minimum(r, 1.0)
        s = 1 - r**2
        return -2 * a * p * r * s ** (p - 1)

    def d2q(r):
        r = np.minimum(r, 1.0)
        s = 1 - r**2
        return -2 * a * p * (s ** (p - 1) - 2 * (p - 1) * r**2 * s ** (p - 2))

    return conductive_radial(q, dq, d2q, "polybump", {"amplitude": a, "power": p})


def absorbing_potential(delta: float = 1.0) -> Potential:
    """n = i * delta on the disk (Im n >= delta > 0)."""
    if delta <= 0:
        raise ValueError(f"absorption delta must be positive, got {delta}")
    d = float(delta)
    pot = Potential(
        kind="absorbing",
        descriptor={"family": "constant_absorbing", "delta": d},
        eval_fn=lambda z: 1j * d * np.ones(np.shape(z)),
        radial=True,
        radial_fn=lambda r: 1j * d * np.ones(np.shape(r)),
        is_real=False,
    )
    sample = pot.eval(np.array([0.1 + 0.2j, 0.5j]))
    if np.min(sample.imag) < d - 1e-12:
        raise ValueError("absorbing potential violates Im n >= delta")
    return pot


def generic_potential(eval_fn, descriptor: dict, radial_fn=None, is_real: bool = True) -> Potential:
    return Potential(
        kind="generic",
        descriptor=descriptor,
        eval_fn=eval_fn,
        radial=radial_fn is not None,
        radial_fn=radial_fn,
        is_real=is_real,
    )


def raster_potential(path) -> Potential:
    """Gridded n(z) from a JSON raster: {x0, y0, dx, dy, re: [[..]], im: [[..]]}.

    Bilinear interpolation inside the raster, zero outside it and outside
    the closed unit disk.
    """
    with open(path) as fh:
        doc = json.load(fh)
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    vals = re + 1j * im
    x0, y0, dx, dy = (float(doc[k]) for k in ("x0", "y0", "dx", "dy"))
    ny, nx = vals.shape

    def interp(z):
        z = np.asarray(z, dtype=complex)
        fx = (z.real - x0) / dx
        fy = (z.imag - y0) / dy
        ix = np.clip(np.floor(fx).astype(int), 0, nx - 2)
        iy = np.clip(np.floor(fy).astype(int), 0, ny - 2)
        tx = np.clip(fx - ix, 0.0, 1.0)
        ty = np.clip(fy - iy, 0.0, 1.0)
        v = (
            vals[iy, ix] * (1 - tx) * (1 - ty)
            + vals[iy, ix + 1] * tx * (1 - ty)
            + vals[iy + 1, ix] * (1 - tx) * ty
            + vals[iy + 1, ix + 1] * tx * ty
        )
        inside = (fx >= 0) & (fx <= nx - 1) & (fy >= 0) & (fy <= ny - 1)
        return np.where(inside, v, 0.0)

    blob = hashlib.sha256(vals.tobytes()).hexdigest()[:16]
    return Potential(
        kind="raster",
        descriptor={"family": "raster", "sha": blob, "x0": x0, "y0": y0, "dx": dx, "dy": dy},
        eval_fn=interp,
        is_real=bool(np.max(np.abs(im)) == 0.0),
    )


# ---------------------------------------------------------------------------
# Perturbation profiles and families

def omega_radial_poly(power: int = 3, amplitude: float = 1.0):
    """Radial profile omega = amplitude (1 - r^2)^power, with descriptor."""
    a, p = float(amplitude), int(power)

    def fn(z):
        r = np.abs(np.asarray(z, dtype=complex))
        s = np.maximum(1 - r**2, 0.0)
        return a * s**p

    return fn, {"profile": "radial_poly", "amplitude": a, "power": p}, True


def omega_poly_cos(power: int = 3, amplitude: float = 1.0, cos_coeff: float = 0.5):
    """omega = amplitude (1 - r^2)^power (1 + cos_coeff cos theta)."""
    a, p, c = float(amplitude), int(power), float(cos_coeff)

    def fn(z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        s = np.maximum(1 - r**2, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            cos_th = np.where(r > 0, z.real / np.where(r > 0, r, 1.0), 0.0)
        return a * s**p * (1 + c * cos_th)

    return fn, {"profile": "poly_cos", "amplitude": a, "power": p, "cos_coeff": c}, False


@dataclass(frozen=True)
class PerturbedFamily:
    """n_lambda = n + lambda omega for a conductive base n and real profile omega."""

    base: Potential
    omega_fn: Callable
    omega_descriptor: dict
    omega_radial: bool = False

    def at(self, lam: float) -> Potential:
        lam = float(lam)
        if lam == 0.0:
            return self.base
        base = self.base

        def fn(z):
            return base.eval_fn(np.asarray(z, dtype=complex)) + lam * self.omega_fn(z)

        radial = base.radial and self.omega_radial
        radial_fn = None
        if radial:
            def radial_fn(r):
                r = np.asarray(r, dtype=float)
                return base.radial_fn(r) + lam * self.omega_fn(r.astype(complex))

        return Potential(
            kind="perturbed_conductive",
            descriptor={"base": base.descriptor, "omega": self.omega_descriptor, "lambda": lam},
            eval_fn=fn,
            radial=radial,
            radial_fn=radial_fn,
            q_fn=base.q_fn,
            is_real=base.is_real,
        )


# ---------------------------------------------------------------------------
# DtN maps

@dataclass(frozen=True)
class DtnMap:
    """A Dirichlet-to-Neumann operator with its provenance."""

    op: BoundaryOperator
    provenance: str
    k: KPoint | None = None
    potential_key: str | None = None

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix


def adjoint_double_layer(nodes: NodeSet) -> np.ndarray:
    """Nystrom matrix of K': density -> normal derivative of its single layer.

    Kernel -(1/2pi) (z-z').nu_z / |z-z'|^2 with the curvature diagonal
    limit -kappa/(4 pi).
    """
    z, nu, w = nodes.z, nodes.normals, nodes.weights
    dz = z[:, None] - z[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        kern = -(dz.real * nu.real[:, None] + dz.imag * nu.imag[:, None]) / (2 * np.pi * np.abs(dz) ** 2)
    np.fill_diagonal(kern, -nodes.curvature / (4 * np.pi))
    return kern * w[None, :]


_LAPLACE_CACHE: "weakref.WeakKeyDictionary[NodeSet, dict]" = weakref.WeakKeyDictionary()


def _laplace_pieces(nodes: NodeSet) -> dict:
    """k-independent Laplace-layer pieces, cached per NodeSet."""
    pieces = _LAPLACE_CACHE.get(nodes)
    if pieces is None:
        binv = invert_on_meanfree(assemble_B(nodes))
        kprime = adjoint_double_layer(nodes)
        eye = np.eye(nodes.n_nodes)
        pieces = {
            "binv": binv,
            "f0": (kprime + 0.5 * eye) @ binv,
            "fb": (kprime - 0.5 * eye) @ binv,
        }
        for m in pieces.values():
            m.flags.writeable = False
        _LAPLACE_CACHE[nodes] = pieces
    return pieces


def _f0_matrix(nodes: NodeSet) -> np.ndarray:
    return _laplace_pieces(nodes)["f0"]


def assemble_F0(nodes: NodeSet) -> DtnMap:
    """Interior Laplace Dirichlet-to-Neumann map (annihilates constants)."""
    return DtnMap(BoundaryOperator(_f0_matrix(nodes), HPLUS, HMINUS, nodes), "interior_laplace")


def assemble_Fout_bounded(nodes: NodeSet) -> DtnMap:
    """Exterior Laplace map built from bounded solutions."""
    return DtnMap(BoundaryOperator(_laplace_pieces(nodes)["fb"], HPLUS, HMINUS, nodes), "exterior_bounded")


def assemble_Fout_zero(nodes: NodeSet) -> DtnMap:
    """Continuous k -> 0 limit of F^out: 0 on constants, F_0 - B^{-1} on mean-free."""
    pieces = _laplace_pieces(nodes)
    _, pp = mean_projectors(nodes)
    mat = pp @ (pieces["f0"] - pieces["binv"]) @ pp
    return DtnMap(BoundaryOperator(mat, HPLUS, HMINUS, nodes), "exterior_faddeev_zero")


def assemble_Fout(k, nodes: NodeSet, on_near_singular: str = "raise",
                  ray_step: float = 1e-3) -> DtnMap:
    """Exterior Faddeev map F^out(k) = F_0 - (S_k)^{-1}.

    ``on_near_singular`` chooses the behaviour when k sits on/near the
    exterior-Dirichlet singular set: "raise" propagates the refusal (the
    refusal itself is the E_D detector); "ray_limit" approximates the
    limiting kernel by linear extrapolation along a short inward ray,
    which cancels the singular part to first order at an isolated
    puncture.  The ray evaluations must themselves be invertible, so the
    fallback only helps at isolated dips, not on the exponential
    large-|k| conditioning cliff.
    """
    kp = k if isinstance(k, KPoint) else KPoint.from_k(k)
    try:
        sinv = invert_S(kp, assemble_S(kp, nodes))
    except NearSingularError:
        if on_near_singular != "ray_limit":
            raise
        return _fout_ray_limit(kp, nodes, ray_step)
    mat = _f0_matrix(nodes) - sinv.matrix
    return DtnMap(BoundaryOperator(mat, HPLUS, HMINUS, nodes), "exterior_faddeev", k=kp)


def _fout_ray_limit(kp: KPoint, nodes: NodeSet, rel_step: float) -> DtnMap:
    """Limiting F^out at a near-singular k from two punctured evaluations
    along k(1-d), d in {h, 2h}, extrapolated linearly to d = 0."""
    mats = []
    for d in (2 * rel_step, rel_step):
        k_off = KPoint.from_polar_log(kp.log_abs + np.log1p(-d), kp.phi)
        mats.append(assemble_Fout(k_off, nodes).matrix)
    mat = 2 * mats[1] - mats[0]
    return DtnMap(BoundaryOperator(mat, HPLUS, HMINUS, nodes), "exterior_faddeev_ray_limit", k=kp)


# F_n assemblies are cached in memory: they are k-independent and reused
# across entire k-scans.
_FN_CACHE: dict[tuple, np.ndarray] = {}
_FN_LOCK = threading.Lock()


def clear_fn_cache() -> None:
    with _FN_LOCK:
        _FN_CACHE.clear()


def _require_unit_disk(nodes: NodeSet) -> None:
    c = nodes.curve
    if not (c.name == "circle" and abs(c.params.get("radius", 0.0) - 1.0) < 1e-14):
        raise NotImplementedError(
            "F_n assembly requires the unit disk in this version; "
            f"got curve {c.name} {c.params} (Laplace-only maps support general curves)"
        )


def assemble_Fn(nodes: NodeSet, potential: Potential, n_radial: int | None = None,
                cache: bool = True) -> DtnMap:
    """Interior Schrodinger Dirichlet-to-Neumann map for -Lap - n on the disk."""
    _require_unit_disk(nodes)
    key = (potential.key, nodes.n_nodes, n_radial)
    with _FN_LOCK:
        mat = _FN_CACHE.get(key)
    if mat is None:
        solver = DiskDtnSolver(nodes.n_nodes, n_radial)
        mat = solver.dtn_matrix(potential)
        if cache:
            with _FN_LOCK:
                _FN_CACHE[key] = mat
    return DtnMap(
        BoundaryOperator(mat, HPLUS, HMINUS, nodes),
        "interior_schrodinger",
        potential_key=potential.key,
    )
