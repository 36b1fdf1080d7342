import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import SMALL, ledger_for
from pemfc.coefficients import BoundaryData, ButlerVolmerData, butler_volmer_raw
from pemfc.datasets import normalized, random_admissible
from pemfc.fem import assemble_form, dirichlet_solve
from pemfc.flow import solve_flow
from pemfc.geometry import GAMMA_A, GAMMA_C
from pemfc.inequalities import estimate_korn_constant
from pemfc.model import CellModel
from pemfc.tec import (GateError, TecOptions, assemble_tec, check_tec_energy_estimate, joule_density, joule_norm,
                       solve_tec)


def _flow_then_tec(m, options=TecOptions(), Phi=None):
    varrho = m.rho0[0] + m.rho0[1]
    fs = solve_flow(m, m.Hp.zeros(), varrho, m.theta0)
    return fs, solve_tec(m, fs.u, m.rho0[0], m.rho0[1], m.theta0, Phi, options)


@pytest.fixture(scope="module")
def zero_model(norm_ds):
    return CellModel(norm_ds.geo, SMALL, norm_ds.coeffs, BoundaryData())


def test_zero_data_zero_solution(zero_model):
    m = zero_model
    z = m.V.zeros()
    ts = solve_tec(m, m.Vf.zeros(), z, z, z, np.zeros(len(m.V.volume(("a", "c")).w)))
    for v in (ts.ups1, ts.ups2, ts.Theta, ts.phi_cc):
        assert np.all(v == 0)
    assert ts.newton_iters == 0
    rep = ledger_for(normalized(), m)
    est = check_tec_energy_estimate(m, ts, m.Vf.zeros(), None, rep)
    assert est["lhs"] == 0.0 and est["rhs"] >= 0.0 and est["holds"]


def test_linear_law_converges_in_one_step(small_model):
    _, ts = _flow_then_tec(small_model, TecOptions(linear_bv_slope=0.3))
    assert ts.newton_iters == 1
    assert ts.residuals[-1] <= 1e-10


def test_newton_converges_quadratically(small_model):
    _, ts = _flow_then_tec(small_model)
    r = ts.residuals
    assert r[-1] <= 1e-10
    assert ts.newton_iters <= 6


def test_joule_density_nonnegative(small_model):
    _, ts = _flow_then_tec(small_model)
    Q = joule_density(small_model, ts.phi_cc)
    assert np.all(Q >= 0)
    np.testing.assert_allclose(joule_density(small_model, np.full(small_model.Vp.n, 3.0)), 0.0, atol=1e-24)
    assert joule_norm(small_model, Q) > 0


def test_full_potential_adds_cell_voltage_on_cathode(small_model):
    _, ts = _flow_then_tec(small_model)
    phi = ts.phi(small_model)
    cath = small_model.Vp.dof_piece == 2
    np.testing.assert_allclose(phi[cath] - ts.phi_cc[cath], small_model.bdata.E_cell)
    np.testing.assert_array_equal(phi[~cath], ts.phi_cc[~cath])


def test_decoupled_potential_matches_independent_solve(norm_ds):
    """With every cross coefficient zero the potential solves a Laplace problem with linear interface laws."""
    c = norm_ds.coeffs.replace(D12=0.0, D21=0.0, rhoS1=0.0, rhoS2=0.0, dufour1=0.0, dufour2=0.0, alpha_S=0.0,
                               bv=ButlerVolmerData(j0_a=0.02, j0_c=0.01, jL_a=0.05, jL_c=0.05, theta_a=1.0,
                                                   theta_c=1.0, phi_r_a=0.1, phi_r_c=-0.3))
    m = CellModel(norm_ds.geo, SMALL, c, BoundaryData(theta_in=1.0, theta_out=1.0, theta_e=1.0))
    s = 0.4
    z = m.V.zeros()
    ts = solve_tec(m, m.Vf.zeros(), z, z, m.theta0, None, TecOptions(linear_bv_slope=s))
    # independent assembly: ∫σ∇φ·∇ψ + s Σ_ℓ ∫_Γℓ ([φ] - φ_r)[ψ] = 0
    Vp = m.Vp
    vo = Vp.volume()
    sub = m.sub_index(vo)
    sig = np.where(sub == 2, 110.0, 1.1)
    A = assemble_form("stiffness", Vp, coef=sig)
    b = np.zeros(Vp.n)
    for el, tag, ref in (("a", GAMMA_A, 0.1), ("c", GAMMA_C, -0.3)):
        fl, fm = Vp.facet(tag, el, 3), Vp.facet(tag, "m", 3)
        J = (fl.T - fm.T).tocsr()
        A = A + s * (J.T @ sp.diags(fl.w) @ J)
        b += s * ref * (J.T @ fl.w)
    phi = dirichlet_solve(A.tocsr(), b, Vp.free_dofs)
    np.testing.assert_allclose(ts.phi_cc, phi, atol=1e-11)
    assert np.abs(ts.ups1).max() == 0 and np.abs(ts.ups2).max() == 0


def test_newton_agrees_with_damped_picard(norm_ds):
    """Secant-slope Picard iteration on the Butler-Volmer law reaches the Newton solution."""
    bv = ButlerVolmerData(j0_a=1800.0, j0_c=0.0132, jL_a=1e4, jL_c=1e4, theta_a=1.0, theta_c=1.0)
    c = norm_ds.coeffs.replace(bv=bv)
    m = CellModel(norm_ds.geo, SMALL, c, norm_ds.bdata)
    fs, ts = _flow_then_tec(m, TecOptions(tol=1e-13))
    sysm = assemble_tec(m, fs.u, m.rho0[0], m.rho0[1], m.theta0, None)
    off = 3 * m.V.n
    free = sysm.free
    x = np.zeros(sysm.K.shape[0])
    for _ in range(400):
        blocks = []
        for el, (J, w) in sysm.jumps.items():
            eta = J @ x[off:]
            j0, jL, B = c.bv.params(el, c.constants.R, c.constants.F)
            with np.errstate(invalid="ignore", divide="ignore"):
                sec = np.where(np.abs(eta) > 1e-14, butler_volmer_raw(eta, j0, jL, B) / eta, 2 * j0 / B)
            blocks.append(J.T @ sp.diags(w * sec) @ J)
        S = sp.block_diag([sp.csr_matrix((off, off)), sum(blocks)]).tocsr()
        A = (sysm.K + S)[free][:, free].tocsc()
        new = np.zeros_like(x)
        new[free] = spla.spsolve(A, sysm.f[free])
        step = np.linalg.norm(new - x)
        x = 0.5 * x + 0.5 * new
        if step <= 1e-12 * max(np.linalg.norm(x), 1e-30):
            break
    newton = np.concatenate([ts.ups1, ts.ups2, ts.Theta, ts.phi_cc])
    assert np.linalg.norm(x - newton) <= 1e-8 * np.linalg.norm(newton)


def test_rhs_reduces_to_B0(norm_ds):
    ds = normalized(theta_e=0.0)
    m = CellModel(ds.geo, SMALL, ds.coeffs, ds.bdata)
    rep = ledger_for(ds, m)
    assert rep.theta_e_wall == 0.0
    fs, ts = _flow_then_tec(m)
    est = check_tec_energy_estimate(m, ts, fs.u, None, rep)
    assert est["rhs"] == rep.B0


def test_gate(small_model, small_report):
    fs, _ = _flow_then_tec(small_model)
    m = small_model
    args = (fs.u, m.rho0[0], m.rho0[1], m.theta0, None)
    ok = solve_tec(m, *args, TecOptions(root1=small_report.root1, strict_gate=True))
    assert ok.gate["passed"]
    with pytest.raises(GateError):
        solve_tec(m, *args, TecOptions(root1=1e-12, strict_gate=True))
    assert not solve_tec(m, *args, TecOptions(root1=1e-12)).gate["passed"]


@pytest.fixture(scope="module")
def korn_small(small_model):
    return estimate_korn_constant(small_model.mesh)[0]


@settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(0, 10_000), st.floats(0.0, 0.05))
def test_energy_estimate_on_random_data(korn_small, seed, amp):
    ds = random_admissible(seed)
    m = CellModel(ds.geo, SMALL, ds.coeffs, ds.bdata)
    rep = ledger_for(ds, m, C_K=1.1 * korn_small)
    assert rep.verdict
    rng = np.random.default_rng(seed)
    Phi = amp * rng.random(len(m.V.volume(("a", "c")).w))
    fs, ts = _flow_then_tec(m, TecOptions(root1=rep.root1), Phi=Phi)
    assert ts.gate["passed"]
    est = check_tec_energy_estimate(m, ts, fs.u, Phi, rep)
    assert est["holds"], est
