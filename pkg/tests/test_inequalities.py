import math

import numpy as np
import pytest

from pemfc.fem import DiscreteSpace, VectorSpace
from pemfc.geometry import CC_TAGS, FLUID, GAMMA, POROUS, GeometrySpec, Resolution, build_mesh
from pemfc.inequalities import (build_cases, certify, estimate_korn_constant, grad_lp, korn_ratio, korn_sweep, lp,
                                random_field)

UNIT = GeometrySpec(1.0, 0.5, 0.5, 0.5, 1.0)
RES = Resolution(4, 2, 2, 2, 4, 8)


@pytest.fixture(scope="module")
def mesh():
    return build_mesh(UNIT, RES)


@pytest.fixture(scope="module")
def cases(mesh):
    return build_cases(mesh, UNIT)


def _fuel_only(space, f):
    x, y = space.coords.T
    return np.where(x <= UNIT.l_f + 1e-12, f(x, y), 0.0)


def test_case_names(cases):
    assert set(cases) == {"poincare2", "poincareva", "poincarer2", "poincarer4", "Gammai_a", "Gammai_c",
                          "Gammai1_a", "Gammai1_c", "casei2", "caseii2", "advte", "advtev", "advt2"}


def test_poincare_channel_linear_profile(cases):
    c = cases["poincare2"]
    sp_, = c.spaces
    v = sp_.coords[:, 1].copy()
    assert c.ratio((v,)) == pytest.approx(math.sqrt(2 / 3), rel=1e-12)
    assert c.ratio((np.zeros(sp_.n),)) == 0.0


def test_casei_bilinear_oracle(cases):
    c = cases["casei2"]
    sp_, = c.spaces
    v = _fuel_only(sp_, lambda x, y: x * y)
    # sqrt(∫x⁴y⁴) / (1/2 · ∫(x² + y²)) = (1/5) / (1/3)
    assert c.ratio((v,)) == pytest.approx(0.6, rel=1e-12)


def test_trilinear_oracle(cases):
    c = cases["advte"]
    Ve, Vin, Vv = c.spaces
    e = np.ones(Ve.n)
    v = Vin.coords[:, 1].copy()
    u = np.concatenate([Vv.components[0].coords[:, 0], np.zeros(Vv.components[1].n)])
    # ∫ y over both channels = 1; bound sqrt(2)·sqrt(2)·sqrt(2)·sqrt(2) = 4
    assert c.lhs(e, v, u) == pytest.approx(1.0, rel=1e-12)
    assert c.ratio((e, v, u)) == pytest.approx(0.25, rel=1e-12)


def test_korn_ratio_shear(mesh):
    vs = VectorSpace([DiscreteSpace(mesh, FLUID), DiscreteSpace(mesh, FLUID)])
    u = np.concatenate([vs.components[0].coords[:, 1], np.zeros(vs.components[1].n)])
    assert korn_ratio(vs, u) == pytest.approx(2.0, rel=1e-12)
    assert korn_ratio(vs, np.zeros(vs.n)) == 0.0


def test_korn_estimate_is_attained(mesh):
    val, x = estimate_korn_constant(mesh)
    assert val >= 1.0 and np.linalg.norm(x) > 0


def test_broken_space_defeats_the_gradient_bound(mesh):
    # a piecewise constant has zero broken gradient, so no Poincaré bound on the broken space
    Vb = DiscreteSpace(mesh, POROUS, pieces=[("a",), ("m",), ("c",)], dirichlet=CC_TAGS + ((GAMMA, "a"),))
    v = (np.asarray(Vb.dof_piece) == 1).astype(float)
    v[Vb.fixed_dofs] = 0.0
    assert lp(Vb, v, 2) > 0 and grad_lp(Vb, v, 2) == 0.0


def test_random_fields_respect_constraints(cases):
    rng = np.random.default_rng(3)
    for c in cases.values():
        for s in c.spaces:
            for kind in ("noise", "smooth"):
                f = random_field(s, rng, kind)
                assert np.all(f[s.fixed_dofs] == 0)
    with pytest.raises(ValueError):
        random_field(c.spaces[0], rng, "bogus")


def test_certify_small_mesh(cases):
    res = certify(cases, n_samples=60, seed=1)
    assert len(res) == 13
    for r in res:
        assert r.passed, r.to_dict()
        assert r.n_samples >= 60 and 0 < r.worst_ratio <= 1 + 1e-10


def test_certify_flags_a_false_bound(mesh):
    # halving the Poincaré constant must be caught
    c = build_cases(mesh, UNIT)["poincare2"]
    rhs = c.rhs
    c.rhs = lambda v: 0.5 * rhs(v)
    r, = certify({"half": c}, n_samples=20)
    assert not r.passed and r.worst_ratio > 1


def test_korn_sweep_monotone():
    vals = korn_sweep(UNIT, Resolution(2, 1, 1, 1, 2, 4), levels=3)
    assert vals[0] >= 1.0
    assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))
