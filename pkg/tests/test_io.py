import math

import numpy as np
import pytest

from pemfc.fem import DiscreteSpace
from pemfc.geometry import FLUID, POROUS, SUBDOMAINS, GeometrySpec, Resolution, build_mesh
from pemfc.io import (cell_average, dumps_report, load_report, node_values, point_values, read_csv, read_vtk_scalars,
                      strip_volatile, write_csv, write_report, write_vtk)

GEO = GeometrySpec(1.0, 0.5, 0.5, 0.5, 1.0)


@pytest.fixture(scope="module")
def mesh():
    return build_mesh(GEO, Resolution(2, 2, 2, 2, 2, 4))


def test_vtk_round_trip(mesh, tmp_path):
    V = DiscreteSpace(mesh, SUBDOMAINS)
    f = V.interpolate(lambda x, y: np.sin(x) + y**2 / 3)
    q = np.arange(mesh.n_cells) / 7.0
    p = tmp_path / "f.vtk"
    write_vtk(p, mesh, {"f": node_values(V, f)}, cell_fields={"q": q},
              vectors={"u": (np.ones(mesh.n_nodes), np.zeros(mesh.n_nodes))})
    back = read_vtk_scalars(p)
    assert np.array_equal(back["f"], node_values(V, f))
    assert np.array_equal(back["q"], q)
    assert np.array_equal(back["region"], mesh.cell_sub.astype(float))
    text = p.read_text()
    assert f"DIMENSIONS {len(mesh.x)} {len(mesh.y)} 1" in text and "VECTORS u double" in text


def test_node_values_fill(mesh):
    Vf = DiscreteSpace(mesh, FLUID)
    out = node_values(Vf, np.ones(Vf.n), fill=-1.0)
    assert set(np.unique(out)) == {-1.0, 1.0}


def test_point_values_bilinear_exact(mesh):
    V = DiscreteSpace(mesh, SUBDOMAINS)
    f = lambda x, y: 1 + 2 * x - y + 0.5 * x * y
    rng = np.random.default_rng(0)
    x, y = rng.uniform(0, GEO.width, 50), rng.uniform(0, GEO.L, 50)
    assert np.allclose(point_values(V, V.interpolate(f), x, y), f(x, y), rtol=0, atol=1e-13)


def test_point_values_nan_outside_space(mesh):
    Hp = DiscreteSpace(mesh, POROUS)
    v = point_values(Hp, np.ones(Hp.n), [0.5 * GEO.l_f, GEO.l_f + GEO.l_a], [0.5, 0.5])
    assert math.isnan(v[0]) and v[1] == 1.0


def test_cell_average():
    out = cell_average(type("M", (), {"n_cells": 3})(), np.array([0, 0, 2]), np.array([1.0, 3.0, 2.0]),
                       np.array([4.0, 0.0, 5.0]))
    assert np.array_equal(out, [1.0, 0.0, 5.0])


def test_csv_round_trip(tmp_path):
    p = tmp_path / "t.csv"
    rows = [(0.1, "a", 3), (1 / 3, "b", 4)]
    write_csv(p, ["x", "name", "n"], rows)
    back = read_csv(p)
    assert back[0] == ["x", "name", "n"]
    assert float(back[2][0]) == 1 / 3 and back[2][1:] == ["b", "4"]


def test_report_json(tmp_path):
    rep = {"a": np.float64(1.5), "b": math.inf, "c": [np.int64(2), math.nan], "d": np.array([1.0, 2.0]),
           "e": np.bool_(True), "timestamp": "now", "nested": [{"elapsed": 1.0, "x": 1}]}
    s = dumps_report(rep)
    assert '"inf"' in s and '"nan"' in s
    p = tmp_path / "r.json"
    write_report(p, rep)
    back = load_report(p)
    assert back["a"] == 1.5 and back["d"] == [1.0, 2.0] and back["e"] is True
    assert strip_volatile(back) == {"a": 1.5, "b": "inf", "c": [2, "nan"], "d": [1.0, 2.0], "e": True,
                                    "nested": [{"x": 1}]}
    assert dumps_report(rep) == s
