"""Single-layer operators on the boundary and the mean/mean-free calculus.

Operators are dense N x N matrices acting on node-value density vectors.
The logarithmic singularity of the single-layer kernels is handled by the
classical product quadrature for 2pi-periodic log kernels (exact for
trigonometric polynomials up to the Nyquist mode), so that on analytic
curves the assembly converges spectrally.

Sobolev weights realize the H^{+-1/2} norms as Fourier-mode multipliers
(max(1,|m|))^s in the trigonometric basis of the parameter circle; every
singular-value statement about an operator H^a -> H^b is made on the
weight-symmetrized matrix W_b M W_{-a}.
"""

from __future__ import annotations

import hashlib
import json
import struct
import weakref
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import NodeSet
from .green import EULER_GAMMA, KPoint, green_remainder

__all__ = [
    "HMINUS",
    "HPLUS",
    "L2",
    "BoundaryOperator",
    "BlockForm",
    "SobolevWeight",
    "NearSingularError",
    "log_quadrature_matrix",
    "assemble_log_layer",
    "assemble_S0",
    "assemble_S",
    "assemble_B",
    "mean_projectors",
    "block_form",
    "invert_S",
    "invert_on_meanfree",
    "sobolev_apply",
    "sobolev_matrix",
    "weighted_matrix",
    "sigma_min",
    "operator_norm",
    "adjoint_arclength",
    "meanfree_form_gap",
    "save_operator",
    "load_operator",
]

HMINUS = "H-1/2"
HPLUS = "H+1/2"
L2 = "L2"

_SPACE_ORDER = {HMINUS: -0.5, HPLUS: 0.5, L2: 0.0}

#: relative sigma_min threshold below which S_k refuses inversion (E_D detector)
SINGULARITY_THRESHOLD = 1e-6


class NearSingularError(RuntimeError):
    """A boundary system is numerically singular (k near E_D or E)."""

    def __init__(self, message, sigma_min=None, norm=None, k=None, suspected=None):
        super().__init__(message)
        self.sigma_min = sigma_min
        self.norm = norm
        self.k = k
        self.suspected = suspected


@dataclass(frozen=True)
class BoundaryOperator:
    """Dense operator between boundary Sobolev spaces in the node basis."""

    matrix: np.ndarray
    domain_space: str
    range_space: str
    nodes: NodeSet

    def __post_init__(self):
        n = self.nodes.n_nodes
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match NodeSet with N={n}")
        if self.domain_space not in _SPACE_ORDER or self.range_space not in _SPACE_ORDER:
            raise ValueError(f"unknown space tag in ({self.domain_space}, {self.range_space})")
        self.matrix.flags.writeable = False

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def compose(self, other: "BoundaryOperator") -> "BoundaryOperator":
        """self after other; space tags must chain."""
        if other.range_space != self.domain_space:
            raise ValueError(f"space mismatch: cannot compose {self.domain_space} <- {other.range_space}")
        return BoundaryOperator(self.matrix @ other.matrix, other.domain_space, self.range_space, self.nodes)

    def is_real(self, tol: float = 1e-10) -> bool:
        if not np.iscomplexobj(self.matrix):
            return True
        scale = max(1.0, float(np.max(np.abs(self.matrix))))
        return float(np.max(np.abs(self.matrix.imag))) <= tol * scale


def log_quadrature_matrix(n_nodes: int) -> np.ndarray:
    """Circulant weights R with sum_j R[i,j] f(t_j) ~ int ln(4 sin^2((t_i-t)/2)) f(t) dt.

    Exact on trigonometric polynomials through the Nyquist mode: the
    circulant eigenvalue on e^{imt} is -2pi/|m| (0 at m=0).
    """
    if n_nodes % 2 or n_nodes < 4:
        raise ValueError(f"log quadrature needs an even node count >= 4, got {n_nodes}")
    m = np.abs(np.fft.fftfreq(n_nodes) * n_nodes)
    lam = np.zeros(n_nodes)
    lam[m > 0] = -2 * np.pi / m[m > 0]
    row = np.fft.ifft(lam).real
    idx = (np.arange(n_nodes)[:, None] - np.arange(n_nodes)[None, :]) % n_nodes
    return row[idx]


_LOG_KERNEL_CACHE: "weakref.WeakKeyDictionary[NodeSet, np.ndarray]" = weakref.WeakKeyDictionary()


def _log_kernel_matrix(nodes: NodeSet) -> np.ndarray:
    """Nystrom matrix of the single layer with kernel -(1/2pi) ln|z - z'|.

    k-independent, cached per NodeSet (scans reassemble S_k at many k).
    """
    cached = _LOG_KERNEL_CACHE.get(nodes)
    if cached is not None:
        return cached
    n = nodes.n_nodes
    t, z, speed = nodes.t, nodes.z, nodes.speed
    dz = z[:, None] - z[None, :]
    sin2 = 4.0 * np.sin((t[:, None] - t[None, :]) / 2.0) ** 2
    ratio = np.ones((n, n))
    off = ~np.eye(n, dtype=bool)
    ratio[off] = np.abs(dz[off]) ** 2 / sin2[off]
    smooth = -np.log(ratio) / (4 * np.pi)
    np.fill_diagonal(smooth, -np.log(speed) / (2 * np.pi))
    R = log_quadrature_matrix(n)
    mat = (-R / (4 * np.pi) + (2 * np.pi / n) * smooth) * speed[None, :]
    mat.flags.writeable = False
    _LOG_KERNEL_CACHE[nodes] = mat
    return mat


def assemble_log_layer(nodes: NodeSet) -> BoundaryOperator:
    """Full (unrestricted) log single layer -(1/2pi) ln|z-z'| on all densities."""
    return BoundaryOperator(_log_kernel_matrix(nodes), HMINUS, HPLUS, nodes)


def assemble_S0(k, nodes: NodeSet) -> BoundaryOperator:
    """Single layer S_k^0 with kernel G_k^0 = -(1/2pi) ln|z-z'| - gamma/2pi - ln|k|/2pi."""
    kp = k if isinstance(k, KPoint) else KPoint.from_k(k)
    shift = -(EULER_GAMMA + kp.log_abs) / (2 * np.pi)
    mat = _log_kernel_matrix(nodes) + shift * nodes.weights[None, :]
    return BoundaryOperator(mat, HMINUS, HPLUS, nodes)


def assemble_S(k, nodes: NodeSet) -> BoundaryOperator:
    """Faddeev single layer S_k = S_k^0 + Nystrom(N(k(z-z'))), diag N(0) = 0."""
    kp = k if isinstance(k, KPoint) else KPoint.from_k(k)
    w = kp.kz(nodes.z[:, None] - nodes.z[None, :])
    smooth = green_remainder(w)
    mat = assemble_S0(kp, nodes).matrix + (2 * np.pi / nodes.n_nodes) * smooth * nodes.speed[None, :]
    return BoundaryOperator(mat, HMINUS, HPLUS, nodes)


def mean_projectors(nodes: NodeSet) -> tuple[np.ndarray, np.ndarray]:
    """(P_const, P_perp): arc-length mean projector and its complement."""
    pc = np.outer(np.ones(nodes.n_nodes), nodes.weights) / nodes.length
    return pc, np.eye(nodes.n_nodes) - pc


def assemble_B(nodes: NodeSet) -> BoundaryOperator:
    """Log single layer restricted to mean-free densities (the perp-perp block)."""
    _, pp = mean_projectors(nodes)
    return BoundaryOperator(pp @ _log_kernel_matrix(nodes) @ pp, HMINUS, HPLUS, nodes)


def invert_on_meanfree(bop: BoundaryOperator) -> np.ndarray:
    """Matrix acting as B^{-1} on mean-free densities and as 0 on constants."""
    pc, pp = mean_projectors(bop.nodes)
    aug = pp @ bop.matrix @ pp + pc
    return pp @ np.linalg.inv(aug)


@dataclass(frozen=True)
class BlockForm:
    """Operator blocks in the splitting psi = (c, phi), c = mean, phi = psi - c."""

    cc: complex
    c_perp: np.ndarray   # row functional on mean-free inputs, outputs a constant
    perp_c: np.ndarray   # mean-free column generated by a unit constant input
    perp_perp: np.ndarray
    nodes: NodeSet

    def reassemble(self) -> np.ndarray:
        w_over_nu = self.nodes.weights / self.nodes.length
        one = np.ones(self.nodes.n_nodes)
        mat = self.cc * np.outer(one, w_over_nu)
        mat = mat + np.outer(one, self.c_perp)
        mat = mat + np.outer(self.perp_c, w_over_nu)
        return mat + self.perp_perp


def block_form(op: BoundaryOperator) -> BlockForm:
    """Project an operator onto the constants/mean-free block decomposition."""
    pc, pp = mean_projectors(op.nodes)
    w_over_nu = op.nodes.weights / op.nodes.length
    one = np.ones(op.nodes.n_nodes)
    m = op.matrix
    cc = w_over_nu @ (m @ one)
    c_perp = (w_over_nu @ m) @ pp
    perp_c = pp @ (m @ one)
    perp_perp = pp @ m @ pp
    return BlockForm(cc, c_perp, perp_c, perp_perp, op.nodes)


# ---------------------------------------------------------------------------
# Sobolev weights and weighted singular data

def _mode_multipliers(n: int, order: float) -> np.ndarray:
    m = np.abs(np.fft.fftfreq(n) * n)
    return np.maximum(1.0, m) ** order


@dataclass(frozen=True)
class SobolevWeight:
    """Fourier-mode diagonal (max(1,|m|))^s on the parameter circle."""

    order: float

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        coef = np.fft.fft(v) * _mode_multipliers(len(v), self.order)
        out = np.fft.ifft(coef)
        return out if np.iscomplexobj(v) else out.real

    def matrix(self, n: int) -> np.ndarray:
        return sobolev_matrix(n, self.order)


def sobolev_apply(weight: SobolevWeight, v: np.ndarray) -> np.ndarray:
    return weight.apply(v)


@lru_cache(maxsize=32)
def sobolev_matrix(n: int, order: float) -> np.ndarray:
    """Dense (real, symmetric, circulant) matrix of the order-s weight."""
    if n % 2:
        raise ValueError(f"Sobolev weights need an even node count, got {n}")
    row = np.fft.ifft(_mode_multipliers(n, order)).real
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    mat = row[idx]
    mat.flags.writeable = False
    return mat


def weighted_matrix(op: BoundaryOperator) -> np.ndarray:
    """W_b M W_{-a} for M: H^a -> H^b, whose singular values are the operator's."""
    n = op.nodes.n_nodes
    a = _SPACE_ORDER[op.domain_space]
    b = _SPACE_ORDER[op.range_space]
    m = op.matrix
    if b != 0.0:
        m = sobolev_matrix(n, b) @ m
    if a != 0.0:
        m = m @ sobolev_matrix(n, -a)
    return m


def sigma_min(op: BoundaryOperator) -> float:
    return float(np.linalg.svd(weighted_matrix(op), compute_uv=False)[-1])


def operator_norm(op: BoundaryOperator) -> float:
    return float(np.linalg.svd(weighted_matrix(op), compute_uv=False)[0])


def adjoint_arclength(matrix: np.ndarray, nodes: NodeSet) -> np.ndarray:
    """Adjoint with respect to the arc-length inner product sum w_j u_j conj(v_j)."""
    w = nodes.weights
    return (matrix.conj().T * w[None, :]) / w[:, None]


def meanfree_form_gap(op: BoundaryOperator) -> float:
    """-max of the Hermitian quadratic form of ``op`` over mean-free data.

    For a negative-definite-on-mean-free operator (such as the k -> 0
    exterior map) this is the spectral gap delta with
    (op phi, phi) <= -delta ||phi||^2 for all mean-free phi, measured in
    the weighted norms of the operator's spaces.  The mean-free constraint
    int phi dl = 0 turns into orthogonality to W_{-a} w in the weighted
    coordinates and is imposed by projection; a negative return value
    means the form has a positive mean-free direction.
    """
    n = op.nodes.n_nodes
    a = _SPACE_ORDER[op.domain_space]
    wmat = weighted_matrix(op)
    herm = 0.5 * (wmat + wmat.conj().T)
    c = sobolev_matrix(n, -a) @ op.nodes.weights if a != 0.0 else op.nodes.weights.copy()
    c = c / np.linalg.norm(c)
    proj = np.eye(n) - np.outer(c, c)
    eigs = np.sort(np.linalg.eigvalsh(proj @ herm @ proj).real)
    # the projected-out direction contributes one ~0 eigenvalue at the top
    return -float(eigs[-2])


def invert_S(k, s_op: BoundaryOperator) -> BoundaryOperator:
    """Dense inverse of S_k; refuses when sigma_min flags proximity to E_D."""
    kp = k if isinstance(k, KPoint) else KPoint.from_k(k)
    sv = np.linalg.svd(weighted_matrix(s_op), compute_uv=False)
    smin, smax = float(sv[-1]), float(sv[0])
    if smin < SINGULARITY_THRESHOLD * smax:
        raise NearSingularError(
            f"S_k is near-singular at {kp}: sigma_min = {smin:.3e} < {SINGULARITY_THRESHOLD:.0e} * {smax:.3e}; "
            "k is near the exterior-Dirichlet exceptional set E_D",
            sigma_min=smin, norm=smax, k=kp, suspected="E_D",
        )
    return BoundaryOperator(np.linalg.inv(s_op.matrix), s_op.range_space, s_op.domain_space, s_op.nodes)


# ---------------------------------------------------------------------------
# Binary export of assembled operators

_MAGIC = b"FEPO"


def save_operator(path, matrix: np.ndarray, header: dict) -> None:
    """Write a matrix as raw row-major doubles behind a JSON header.

    The header is augmented with dtype, shape and a sha256 checksum of the
    payload bytes.
    """
    matrix = np.ascontiguousarray(matrix)
    payload = matrix.tobytes()
    doc = dict(header)
    doc.update({
        "dtype": str(matrix.dtype),
        "shape": list(matrix.shape),
        "checksum": hashlib.sha256(payload).hexdigest(),
    })
    head = json.dumps(doc, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(head)))
        fh.write(head)
        fh.write(payload)


def load_operator(path) -> tuple[np.ndarray, dict]:
    """Read a matrix written by save_operator, verifying the checksum."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path} is not an operator container")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        payload = fh.read()
    if hashlib.sha256(payload).hexdigest() != header["checksum"]:
        raise ValueError(f"checksum mismatch in {path}")
    mat = np.frombuffer(payload, dtype=np.dtype(header["dtype"])).reshape(header["shape"]).copy()
    return mat, header
