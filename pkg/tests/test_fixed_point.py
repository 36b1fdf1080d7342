import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import SMALL, ledger_for
from pemfc.coefficients import BoundaryData
from pemfc.fem import grad_norm
from pemfc.fixed_point import (PicardConfig, PicardState, apply_T, k_membership, relative_differences, run_picard)
from pemfc.model import CellModel
from pemfc.tec import joule_norm


@pytest.fixture(scope="module")
def converged(small_model, small_report):
    return run_picard(small_model, small_report, PicardConfig(tol=1e-10))


def test_trivial_data_converges_to_zero(norm_ds):
    m = CellModel(norm_ds.geo, SMALL, norm_ds.coeffs, BoundaryData())
    rep = ledger_for(norm_ds, m)
    cell, sr = run_picard(m, rep)
    assert sr.converged and len(sr.iterations) <= 2
    for v in (cell.u, cell.p, cell.rho1, cell.rho2, cell.theta, cell.phi, cell.Q):
        assert np.all(v == 0)


def test_converges_with_K_membership(converged):
    cell, sr = converged
    assert sr.converged and sr.status == "converged"
    assert len(sr.iterations) < 50
    assert sr.residuals[-1] <= 1e-10
    assert sr.all_in_K() and sr.estimates_hold()
    r = sr.residuals[1:]
    assert all(b <= a for a, b in zip(r, r[1:]))


def test_idempotence(small_model, small_report, converged):
    cell, sr = converged
    m = small_model
    state = PicardState(cell.p, (cell.rho1 - m.rho0[0], cell.rho2 - m.rho0[1], cell.theta - m.theta0), cell.Q)
    new, _, _ = apply_T(m, state, small_report)
    assert max(relative_differences(m, state, new).values()) < 1e-9


def test_relaxation_does_not_change_the_limit(small_model, small_report, converged):
    tol = 1e-10
    a, _ = converged
    b, sr = run_picard(small_model, small_report, PicardConfig(tol=tol, omega=0.5))
    assert sr.converged
    for x, y in ((a.rho1, b.rho1), (a.theta, b.theta), (a.phi, b.phi), (a.u, b.u), (a.p, b.p)):
        assert np.linalg.norm(x - y) <= 100 * tol * max(np.linalg.norm(x), 1.0)


@settings(max_examples=6, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_K_preservation(small_model, small_report, seed, s1, s2, s3):
    m, rep = small_model, small_report
    rng = np.random.default_rng(seed)
    pi = rng.standard_normal(m.Hp.n)
    pi *= s1 * rep.R1 / max(grad_norm(m.Hp, pi), 1e-300)
    ups = []
    for _ in range(3):
        u = rng.standard_normal(m.V.n)
        u[m.V.fixed_dofs] = 0.0
        ups.append(u)
    scale = s2 * rep.R2 / m.upsilon_norm(ups)
    ups = tuple(scale * u for u in ups)
    Phi = rng.random(len(m.V.volume(("a", "c")).w))
    Phi *= s3 * rep.R3 / joule_norm(m, Phi)
    state = PicardState(pi, ups, Phi)
    assert all(k_membership(m, state, (rep.R1, rep.R2, rep.R3)).values())
    new, _, _ = apply_T(m, state, rep)
    assert all(k_membership(m, new, (rep.R1, rep.R2, rep.R3)).values())


def test_max_iterations_reported(small_model, small_report):
    cell, sr = run_picard(small_model, small_report, PicardConfig(max_outer_iters=1, tol=1e-14))
    assert not sr.converged and sr.status == "max_iterations"
    d = sr.to_dict()
    assert d["converged"] is False and len(d["iterations"]) == 1


def test_apply_T_rejects_bad_state(small_model):
    z = PicardState.zero(small_model)
    bad = PicardState(z.pi, z.ups, -np.ones_like(z.Phi))
    with pytest.raises(ValueError):
        apply_T(small_model, bad)
    nan = PicardState(z.pi + np.nan, z.ups, z.Phi)
    with pytest.raises(ValueError):
        apply_T(small_model, nan)


@pytest.mark.parametrize("kw", [dict(tol=0.0), dict(omega=0.0), dict(omega=1.5), dict(max_outer_iters=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        PicardConfig(**kw)


def test_relax_interpolates(small_model):
    z = PicardState.zero(small_model)
    one = PicardState(z.pi + 1, tuple(u + 1 for u in z.ups), z.Phi + 1)
    mid = z.relax(one, 0.25)
    assert np.all(mid.pi == 0.25) and np.all(mid.Phi == 0.25) and np.all(mid.ups[2] == 0.25)


def test_factor_reuse_matches_plain_solves(small_model, small_report, converged):
    a, _ = converged
    b, sr = run_picard(small_model, small_report, PicardConfig(tol=1e-10, linear_method="gmres"))
    assert sr.converged
    for x, y in ((a.rho1, b.rho1), (a.theta, b.theta), (a.phi, b.phi), (a.u, b.u)):
        assert np.linalg.norm(x - y) <= 1e-8 * max(np.linalg.norm(x), 1.0)
