import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import SMALL, ledger_for
from pemfc.coefficients import BoundaryData
from pemfc.datasets import random_admissible
from pemfc.flow import assemble_flow, check_flow_energy_estimate, solve_flow
from pemfc.geometry import FLUID
from pemfc.inequalities import estimate_korn_constant
from pemfc.model import CellModel


@pytest.fixture(scope="module")
def zero_model(norm_ds):
    return CellModel(norm_ds.geo, SMALL, norm_ds.coeffs, BoundaryData())


def test_zero_data_gives_zero_solution(zero_model):
    m = zero_model
    z = m.V.zeros()
    sol = solve_flow(m, m.Hp.zeros(), z, z)
    assert np.all(sol.U == 0) and np.all(sol.p == 0)
    est = check_flow_energy_estimate(m, sol, z, z, C_K=4.5, C0=0.0)
    assert est["lhs"] == 0.0 and est["rhs"] == 0.0 and est["holds"]


def _divergence_columns(model):
    """∫_Ωf ∂φ/∂x and ∫_Ωf ∂φ/∂y for every channel basis function, cell by cell in closed form.

    For a bilinear corner function on a cell, ∫ ∂φ/∂x = ±hy/2 (sign of the corner's x side).
    """
    mesh = model.mesh
    cx, cy = model.Vf.components
    out = []
    for comp, axis in ((cx, 0), (cy, 1)):
        node_to_dof = {int(n): k for k, n in enumerate(comp.dof_node)}
        col = np.zeros(comp.n)
        for c in mesh.cells_in(FLUID):
            h = mesh.cell_hy[c] if axis == 0 else mesh.cell_hx[c]
            # local corners ccw from lower-left: x side (-,+,+,-), y side (-,-,+,+)
            signs = (-1, 1, 1, -1) if axis == 0 else (-1, -1, 1, 1)
            for node, s in zip(mesh.cells[c], signs):
                col[node_to_dof[int(node)]] += s * h / 2
        out.append(col)
    return np.concatenate(out)


def test_constant_load_matches_divergence_columns(zero_model):
    m = zero_model
    cst = 0.7
    varrho = np.full(m.V.n, 2.0)
    xi = np.full(m.V.n, cst / 2.0)
    sysm = assemble_flow(m, m.Hp.zeros(), varrho, xi)
    expected = m.coeffs.constants.R_M * cst * _divergence_columns(m)
    np.testing.assert_allclose(sysm.b[:m.Vf.n], expected, atol=1e-13)
    np.testing.assert_array_equal(sysm.b[m.Vf.n:], 0.0)


def test_pressure_mean_zero_and_residual(small_model):
    m = small_model
    sol = solve_flow(m, m.Hp.zeros(), m.rho0[0] + m.rho0[1], m.theta0)
    assert sol.residual < 1e-10
    vo = m.Hp.volume()
    assert abs(vo.w @ (vo.E @ sol.p_mean_zero(m))) < 1e-14
    np.testing.assert_array_equal(sol.u, sol.U + m.u0)
    ux, uy = m.Vf.split(sol.U)
    cx, cy = m.Vf.components
    assert np.all(ux[cx.fixed_dofs] == 0) and np.all(uy[cy.fixed_dofs] == 0)


def test_gmres_agrees_with_direct(small_model):
    m = small_model
    args = (m.Hp.zeros(), m.rho0[0] + m.rho0[1], m.theta0)
    a = solve_flow(m, *args)
    b = solve_flow(m, *args, method="gmres", tol=1e-12)
    assert np.linalg.norm(a.U - b.U) <= 1e-9 * np.linalg.norm(a.U)
    assert np.linalg.norm(a.p - b.p) <= 1e-9 * max(np.linalg.norm(a.p), 1e-30)


def test_rejects_nonfinite(small_model):
    m = small_model
    bad = m.V.zeros()
    bad[0] = np.nan
    with pytest.raises(ValueError):
        solve_flow(m, m.Hp.zeros(), bad, m.theta0)


@pytest.fixture(scope="module")
def korn_small(small_model):
    return estimate_korn_constant(small_model.mesh)[0]


@settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(0, 10_000), st.floats(0.0, 0.05))
def test_energy_estimate_on_random_data(korn_small, seed, amp):
    ds = random_admissible(seed)
    m = CellModel(ds.geo, SMALL, ds.coeffs, ds.bdata)
    rep = ledger_for(ds, m, C_K=1.1 * korn_small)
    rng = np.random.default_rng(seed)
    ups = [amp * rng.standard_normal(m.V.n) for _ in range(3)]
    for u in ups:
        u[m.V.fixed_dofs] = 0.0
    varrho = m.rho0[0] + m.rho0[1] + ups[0] + ups[1]
    xi = m.theta0 + ups[2]
    pi = rng.standard_normal(m.Hp.n)
    sol = solve_flow(m, pi, varrho, xi)
    est = check_flow_energy_estimate(m, sol, varrho, xi, rep.C_K, rep.C0)
    assert est["holds"], est


def test_korn_constant_validation(small_model):
    m = small_model
    sol = solve_flow(m, m.Hp.zeros(), m.rho0[0], m.theta0)
    with pytest.raises(ValueError):
        check_flow_energy_estimate(m, sol, m.rho0[0], m.theta0, 0.5, 0.0)
