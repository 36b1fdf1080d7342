import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pemfc.geometry import (CC_TAGS, GAMMA, GAMMA_A, GAMMA_C, INLET, OUTLET, SUBDOMAINS, WALL_TAGS, CurrentCollector,
                            GeometryError, GeometrySpec, QuadratureError, Resolution, build_mesh, quadrature_rule)


def test_unit_rectangles():
    mesh = build_mesh(GeometrySpec(1, 1, 1, 1, 1), Resolution(1, 1, 1, 1, 1, 1))
    assert mesh.n_cells == 5
    assert mesh.area() == pytest.approx(5.0)
    for s in SUBDOMAINS:
        assert mesh.area((s,)) == pytest.approx(1.0)


def test_si_width():
    assert GeometrySpec(1e-3, 200e-6, 100e-6, 200e-6, 0.01).width == pytest.approx(2.5e-3, rel=1e-12)


def test_breaks_and_intervals():
    g = GeometrySpec(0.25, 0.1, 0.2, 0.3, 1.0)
    np.testing.assert_allclose(g.x_breaks(), [0, 0.25, 0.35, 0.55, 0.85, 1.1])
    assert g.interval("m") == pytest.approx((0.35, 0.55))


@pytest.mark.parametrize("bad", [dict(l_f=0), dict(l_m=-1.0), dict(L=float("nan"))])
def test_invalid_lengths(bad):
    kw = dict(l_f=1.0, l_a=1.0, l_m=1.0, l_c=1.0, L=1.0) | bad
    with pytest.raises(GeometryError):
        GeometrySpec(**kw)


def test_invalid_resolution_and_collector():
    with pytest.raises(GeometryError):
        Resolution(1, 0, 1, 1, 1, 1)
    with pytest.raises(GeometryError):
        CurrentCollector(ends=("left",))
    with pytest.raises(GeometryError):
        CurrentCollector(span=(0.5, 0.5))


def _brute_interface_count(mesh, x0):
    """Vertical cell edges lying on x = x0, enumerated cell by cell."""
    n = 0
    for c in range(mesh.n_cells):
        if abs(mesh.cell_x0[c] + mesh.cell_hx[c] - x0) < 1e-12 * max(1.0, x0):
            n += 1
    return n


@settings(max_examples=25, deadline=None)
@given(st.tuples(*[st.integers(1, 5)] * 5), st.integers(1, 12),
       st.tuples(*[st.floats(0.05, 2.0)] * 5))
def test_mesh_invariants(nx, ny, lengths):
    geo = GeometrySpec(*lengths)
    mesh = build_mesh(geo, Resolution(*nx, ny))
    xb = geo.x_breaks()
    assert mesh.area() == pytest.approx(geo.width * geo.L, rel=1e-12)
    na, nc = len(mesh.facets(GAMMA_A)), len(mesh.facets(GAMMA_C))
    assert na == nc == ny == _brute_interface_count(mesh, xb[2]) == _brute_interface_count(mesh, xb[3])
    assert mesh.measure(GAMMA) == pytest.approx(2 * geo.L, rel=1e-12)
    assert mesh.measure((GAMMA_A, GAMMA_C)) == pytest.approx(2 * geo.L, rel=1e-12)
    assert mesh.measure(INLET) == pytest.approx(2 * geo.l_f, rel=1e-12)
    assert mesh.measure(OUTLET) == pytest.approx(2 * geo.l_f, rel=1e-12)
    # outer boundary: perimeter of the cell minus the inlet and outlet pieces
    outer = mesh.measure(INLET + OUTLET + WALL_TAGS)
    assert outer == pytest.approx(2 * (geo.width + geo.L), rel=1e-12)
    assert mesh.measure(CC_TAGS) == pytest.approx(2 * (geo.l_a + geo.l_c), rel=1e-12)


def test_collector_span():
    geo = GeometrySpec(1, 1, 1, 1, 1, CurrentCollector(ends=("bottom",), span=(0.0, 0.5)))
    mesh = build_mesh(geo, Resolution(2, 4, 2, 4, 2, 2))
    assert mesh.measure(CC_TAGS) == pytest.approx(1.0)


def test_quadrature_midpoint():
    (p, w), (g, gw) = quadrature_rule(1)
    np.testing.assert_allclose(p, [[0.0, 0.0]])
    np.testing.assert_allclose(w, [4.0])


def test_quadrature_gauss2():
    (p, w), (g, gw) = quadrature_rule(3)
    np.testing.assert_allclose(np.sort(g), [-1 / math.sqrt(3), 1 / math.sqrt(3)])
    np.testing.assert_allclose(w, np.ones(4))
    assert w @ p[:, 0] ** 2 == pytest.approx(4.0 / 3.0, abs=1e-15)
    assert gw @ g**3 == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
def test_quadrature_exactness(order):
    (p, w), (g, gw) = quadrature_rule(order)
    for k in range(order + 1):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert gw @ g**k == pytest.approx(exact, abs=1e-14)
        assert w @ (p[:, 0] ** k) == pytest.approx(2 * exact, abs=1e-14)


@pytest.mark.parametrize("order", [0, 6, 2.5])
def test_quadrature_bad_order(order):
    with pytest.raises(QuadratureError):
        quadrature_rule(order)
