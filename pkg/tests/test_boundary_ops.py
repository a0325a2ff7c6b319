import numpy as np
import pytest

from faddeev_ep.boundary_ops import (
    HMINUS,
    HPLUS,
    BoundaryOperator,
    NearSingularError,
    SobolevWeight,
    adjoint_arclength,
    assemble_B,
    assemble_S,
    assemble_S0,
    assemble_log_layer,
    block_form,
    invert_S,
    load_operator,
    log_quadrature_matrix,
    mean_projectors,
    operator_norm,
    save_operator,
    sigma_min,
    sobolev_apply,
    weighted_matrix,
)
from faddeev_ep.geometry import make_circle, make_kite, sample
from faddeev_ep.green import KPoint, epsilon


def modes(nodes, m):
    return np.exp(1j * m * nodes.t)


def test_log_quadrature_exact_on_trig_polynomials(nodes128):
    """Oracle: int ln(4 sin^2((t-s)/2)) e^{ims} ds = -(2pi/|m|) e^{imt}."""
    R = log_quadrature_matrix(128)
    for m in [0, 1, 2, 17, 63]:
        e = modes(nodes128, m)
        expected = 0.0 * e if m == 0 else -(2 * np.pi / m) * e
        assert np.max(np.abs(R @ e - expected)) < 1e-12


def test_log_layer_circle_eigenvalues(nodes128):
    """Separation of variables: the log layer sends e^{imt} to e^{imt}/(2|m|)."""
    B = assemble_log_layer(nodes128)
    for m in [1, 2, 5, 17, 63]:
        e = modes(nodes128, m)
        assert np.max(np.abs(B.matrix @ e - e / (2 * m))) < 1e-8
    assert np.max(np.abs(B.matrix @ np.ones(128))) < 1e-13


def test_S0_circle_blocks(nodes128):
    k = KPoint.from_k(0.3)
    s0 = assemble_S0(k, nodes128)
    bf = block_form(s0)
    inv_eps = 1.0 / epsilon(0.3, nodes128.length)
    assert abs(bf.cc - inv_eps) / abs(inv_eps) < 1e-10
    # mean-free modes see the pure log layer
    for m in [1, 4, 33]:
        e = modes(nodes128, m)
        assert np.max(np.abs(s0.matrix @ e - e / (2 * m))) < 1e-8


def test_S0_symmetric(nodes128):
    s0 = assemble_S0(KPoint.from_k(0.7), nodes128)
    assert np.max(np.abs(s0.matrix - adjoint_arclength(s0.matrix, nodes128))) < 1e-10
    assert s0.is_real()


def test_S_tends_to_S0(nodes128):
    kp = KPoint.from_k(1e-4)
    diff = assemble_S(kp, nodes128).matrix - assemble_S0(kp, nodes128).matrix
    d = BoundaryOperator(diff, HMINUS, HPLUS, nodes128)
    assert operator_norm(d) < 1e-3


def test_S_real_and_self_convergent(nodes128, nodes256):
    kp = KPoint.from_k(0.5)
    s1 = assemble_S(kp, nodes128)
    s2 = assemble_S(kp, nodes256)
    assert not np.iscomplexobj(s1.matrix)  # real kernel by construction
    sv1 = np.linalg.svd(weighted_matrix(s1), compute_uv=False)[:20]
    sv2 = np.linalg.svd(weighted_matrix(s2), compute_uv=False)[:20]
    assert np.max(np.abs(sv1 - sv2)) < 1e-8


def test_B_block_and_conditioning(nodes128):
    b = assemble_B(nodes128)
    for m in [1, 3, 40]:
        e = modes(nodes128, m)
        assert np.max(np.abs(b.matrix @ e - e / (2 * m))) < 1e-8
    assert np.max(np.abs(b.matrix - adjoint_arclength(b.matrix, nodes128))) < 1e-10
    sv = np.linalg.svd(weighted_matrix(b), compute_uv=False)
    sv = sv[sv > 1e-10]  # drop the constants null direction
    assert sv[0] / sv[-1] <= 2.0


def test_block_form_identity(nodes128):
    ident = BoundaryOperator(np.eye(128), HPLUS, HPLUS, nodes128)
    bf = block_form(ident)
    assert bf.cc == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(bf.c_perp)) < 1e-14
    assert np.max(np.abs(bf.perp_c)) < 1e-14
    assert np.max(np.abs(bf.reassemble() - np.eye(128))) < 1e-12


def test_block_form_roundtrip(nodes128):
    rng = np.random.default_rng(0)
    mat = rng.standard_normal((128, 128))
    op = BoundaryOperator(mat, HMINUS, HPLUS, nodes128)
    bf = block_form(op)
    assert np.max(np.abs(bf.reassemble() - mat)) < 1e-12 * np.max(np.abs(mat))


def test_invert_S_contract(nodes128):
    kp = KPoint.from_k(0.5)
    s = assemble_S(kp, nodes128)
    sinv = invert_S(kp, s)
    assert np.max(np.abs(s.matrix @ sinv.matrix - np.eye(128))) < 1e-10
    assert sinv.domain_space == HPLUS and sinv.range_space == HMINUS


@pytest.mark.parametrize("eps", [0.05, 0.025])
def test_invert_S_block_asymptotics(nodes128, eps):
    """(S_k)^{-1} = diag(eps, B^{-1}) + O(eps) blockwise."""
    kp = KPoint.from_eps(eps, 0.4, nodes128.length)
    sinv = invert_S(kp, assemble_S(kp, nodes128))
    bf = block_form(sinv)
    assert abs(bf.cc - eps) <= 0.01 * eps
    # perp block approaches B^{-1} on mean-free densities
    pc, pp = mean_projectors(nodes128)
    b = assemble_B(nodes128)
    binv = pp @ np.linalg.inv(b.matrix @ pp + pc)
    d = BoundaryOperator(bf.perp_perp - binv, HPLUS, HMINUS, nodes128)
    assert operator_norm(d) < 0.1 * (eps / 0.05)  # halves with eps (tiny on the disk)


def test_invert_S_refuses_near_singular(nodes128):
    # the Faddeev layer's conditioning decays like e^{-2|k| diam}; by
    # |k| ~ 4.4 it is below the refusal threshold at any angle
    kp = KPoint.from_k(4.437)
    with pytest.raises(NearSingularError) as exc:
        invert_S(kp, assemble_S(kp, nodes128))
    assert exc.value.suspected == "E_D"
    assert exc.value.sigma_min < 1e-6 * exc.value.norm


def test_potential_theory_identity(nodes128):
    """(F_0 - F^out(k)) S_k = I for k off the singular set."""
    from faddeev_ep.dtn_maps import assemble_F0, assemble_Fout

    f0 = assemble_F0(nodes128)
    for r, phi in [(1e-3, 0.0), (0.03, 2.0), (1.0, 4.0)]:
        kp = KPoint.from_polar_log(np.log(r), phi)
        fo = assemble_Fout(kp, nodes128)
        s = assemble_S(kp, nodes128)
        resid = (f0.matrix - fo.matrix) @ s.matrix - np.eye(128)
        assert np.linalg.norm(resid, 2) < 1e-8


def test_sobolev_weights(nodes128):
    wp, wm = SobolevWeight(0.5), SobolevWeight(-0.5)
    const = np.ones(128)
    np.testing.assert_allclose(sobolev_apply(wp, const), const, atol=1e-13)
    e4 = modes(nodes128, 4)
    np.testing.assert_allclose(sobolev_apply(wp, e4), 2.0 * e4, atol=1e-12)
    rng = np.random.default_rng(2)
    v = rng.standard_normal(128)
    np.testing.assert_allclose(sobolev_apply(wm, sobolev_apply(wp, v)), v, atol=1e-12)


def test_weighted_sigma_min_matches_operator_norms(nodes128):
    """On the circle the weighted S_k^0 has singular values {1/eps-ish} U {1/2}."""
    kp = KPoint.from_eps(0.1, 0.0, nodes128.length)
    s0 = assemble_S0(kp, nodes128)
    sv = np.linalg.svd(weighted_matrix(s0), compute_uv=False)
    assert sv[0] == pytest.approx(10.0, rel=1e-6)   # the 1/eps constants block
    assert sv[-1] == pytest.approx(0.5, rel=1e-6)   # 1/(2|m|) * |m| on mean-free
    assert sigma_min(s0) == pytest.approx(0.5, rel=1e-6)


def test_sigma_min_S_continuous_along_scan(nodes128):
    """sigma_min(S_k) varies smoothly in |k| (no spurious isolated dips in
    the invertible regime); the decay toward large |k| is the intrinsic
    exponential conditioning of the kernel."""
    rs = np.geomspace(1e-3, 2.0, 25)
    vals = np.array([
        np.linalg.svd(weighted_matrix(assemble_S(KPoint.from_k(r), nodes128)), compute_uv=False)[-1]
        for r in rs
    ])
    ratios = vals[1:] / vals[:-1]
    assert np.all(ratios > 0.3) and np.all(ratios < 3.0)


def test_kite_log_layer_symmetry():
    nodes = sample(make_kite(), 128)
    b = assemble_log_layer(nodes)
    assert np.max(np.abs(b.matrix - adjoint_arclength(b.matrix, nodes))) < 1e-10


def test_operator_container_roundtrip(tmp_path, nodes128):
    mat = assemble_S(KPoint.from_k(0.5), nodes128).matrix
    path = tmp_path / "s.op"
    save_operator(path, mat, {"curve": "circle(radius=1.0)", "n": 128, "k": [0.5, 0.0], "spaces": [HMINUS, HPLUS]})
    back, header = load_operator(path)
    np.testing.assert_array_equal(back, mat)
    assert header["n"] == 128 and header["dtype"] == "float64"
    # corruption must be detected
    blob = bytearray(path.read_bytes())
    blob[-5] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError):
        load_operator(path)


def test_compose_space_check(nodes128):
    s = assemble_S(KPoint.from_k(0.5), nodes128)
    with pytest.raises(ValueError):
        s.compose(s)  # H^{+1/2} output cannot feed the H^{-1/2} domain
