"""Embedded operator-identity validation suite.

Fast structural checks run by the command-line ``validate`` subcommand and
by the batch harness before longer detector runs: quadrature consistency,
the potential-theory identity (F_0 - F^out(k)) S_k = I, block structure of
S_k^0, and the structure of F^out(0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary_ops import (
    HPLUS,
    HMINUS,
    BoundaryOperator,
    adjoint_arclength,
    assemble_B,
    assemble_S,
    assemble_S0,
    block_form,
    invert_S,
    mean_projectors,
    meanfree_form_gap,
    operator_norm,
    weighted_matrix,
)
from .dtn_maps import assemble_F0, assemble_Fout, assemble_Fout_bounded, assemble_Fout_zero
from .geometry import curve_by_name, sample
from .green import KPoint, epsilon_from_log

__all__ = ["CheckResult", "run_validation"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured {self.measured:.3e} (threshold {self.threshold:.1e})"


def run_validation(curve_name: str = "circle", n_nodes: int = 128, **curve_params) -> list[CheckResult]:
    curve = curve_by_name(curve_name, **curve_params)
    nodes = sample(curve, n_nodes)
    nodes2 = sample(curve, 2 * n_nodes)
    checks: list[CheckResult] = []

    def add(name, measured, threshold):
        checks.append(CheckResult(name, bool(measured <= threshold), float(measured), float(threshold)))

    # geometry
    add("normals orthogonal to tangents",
        float(np.max(np.abs(nodes.normals.real * nodes.dz.real + nodes.normals.imag * nodes.dz.imag))), 1e-12)
    add("length stable under N-doubling", abs(nodes.length - nodes2.length), 1e-10)

    # operator identities at a spread of k
    worst_identity = 0.0
    worst_cc = 0.0
    f0 = assemble_F0(nodes)
    import warnings as _warnings

    for i, r in enumerate(np.geomspace(1e-3, 1.0, 10)):
        kp = KPoint.from_polar_log(np.log(r), (i % 4) * np.pi / 3)
        s = assemble_S(kp, nodes)
        fo = assemble_Fout(kp, nodes)
        resid = (f0.matrix - fo.matrix) @ s.matrix - np.eye(n_nodes)
        worst_identity = max(worst_identity, float(np.linalg.norm(resid, 2)))
        cc = block_form(assemble_S0(kp, nodes)).cc
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")  # eps is negative past |k| = e^-gamma; identity still holds
            inv_eps = 1.0 / epsilon_from_log(kp.log_abs, nodes.length)
        worst_cc = max(worst_cc, abs(cc - inv_eps) / abs(inv_eps))
    add("(F_0 - F^out(k)) S_k = I", worst_identity, 1e-8)
    add("constants block of S_k^0 = 1/eps", worst_cc, 1e-10)

    # S_k^0, B symmetry in the arc-length pairing
    kp = KPoint.from_k(0.5)
    s0 = assemble_S0(kp, nodes)
    add("S_k^0 self-adjoint", float(np.max(np.abs(s0.matrix - adjoint_arclength(s0.matrix, nodes)))), 1e-10)
    b = assemble_B(nodes)
    add("B self-adjoint", float(np.max(np.abs(b.matrix - adjoint_arclength(b.matrix, nodes)))), 1e-10)

    # F^out(0) structure
    fz = assemble_Fout_zero(nodes)
    add("F^out(0) kills constants", float(np.max(np.abs(fz.matrix @ np.ones(n_nodes)))), 1e-8)
    add("F^out(0) self-adjoint", float(np.max(np.abs(fz.matrix - adjoint_arclength(fz.matrix, nodes)))), 1e-8)
    gap = meanfree_form_gap(fz.op)
    add("F^out(0) mean-free gap at least 0.5 (measured shortfall)", 0.5 - gap, 0.0)
    _, pp = mean_projectors(nodes)

    # bounded exterior identity (F_0 - F_b^out) B = I on mean-free
    fb = assemble_Fout_bounded(nodes)
    resid = ((f0.matrix - fb.matrix) @ b.matrix - pp) @ pp
    add("(F_0 - F_b^out) B = I on mean-free", float(np.linalg.norm(resid, 2)), 1e-8)

    # inverse block structure of S_k at small k
    kp_small = KPoint.from_eps(0.05, 0.0, nodes.length)
    sinv = invert_S(kp_small, assemble_S(kp_small, nodes))
    bf = block_form(sinv)
    add("cc of S_k^{-1} = eps + O(eps^2)", abs(bf.cc - 0.05), 0.01 * 0.05)
    binv_block = BoundaryOperator(
        bf.perp_perp - (pp @ np.linalg.inv(b.matrix + np.outer(np.ones(n_nodes), nodes.weights) / nodes.length)),
        HPLUS, HMINUS, nodes,
    )
    add("perp block of S_k^{-1} -> B^{-1}", operator_norm(binv_block), 0.1)
    return checks
