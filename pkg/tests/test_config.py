import pytest

from pemfc.cli import compute_ledger
from pemfc.config import ConfigError, parse_config, parse_text, resolve
from pemfc.model import CellModel

MINIMAL = """\
geometry:
  l_f: 1.0
  l_a: 0.5
  l_m: 0.5
  l_c: 0.5
  L: 1.0
"""

TRIVIAL = """\
resolution: {fuel: 2, a: 2, m: 2, c: 2, air: 2, ny: 8}
boundary:
  u_in: 0.0
  rho1_in: [0.0, 0.0]
  rho1_out: [0.0, 0.0]
  rho2_in: [0.0, 0.0]
  rho2_out: [0.0, 0.0]
  theta_in: 0.0
  theta_out: 0.0
  theta_e: 0.0
  E_cell: 0.0
ledger:
  C_K: 4.5
"""


def test_defaults_are_deterministic():
    a, b = parse_text(MINIMAL), parse_text(MINIMAL)
    assert a.dump() == b.dump()
    assert a["geometry"]["l_m"] == 0.5
    assert a["dataset"] == {"name": "normalized", "seed": 0}
    assert a["solver"]["tol"] == 1e-8 and a["ledger"]["C_K"] == "estimate"
    assert resolve(None).dump() == resolve(None).dump()


def test_dump_round_trip(tmp_path):
    cfg = parse_text(MINIMAL + "dataset: {name: random_admissible, seed: 3}\n")
    p = tmp_path / "c.yaml"
    cfg.save(p)
    again = parse_config(p)
    assert again.dump() == cfg.dump()
    assert again.dataset.coeffs.bounds == cfg.dataset.coeffs.bounds


def test_contradictory_bounds_tagged():
    with pytest.raises(ConfigError) as ei:
        parse_text("bounds: {mu_lo: 3.0, mu_hi: 2.0}\n")
    assert any("(H1)" in m and "mu_lo" in m for m in ei.value.messages)


def test_unknown_keys_report_lines():
    with pytest.raises(ConfigError) as ei:
        parse_text("geometry:\n  L: 1.0\n  width: 2\nbogus: {}\n")
    msgs = ei.value.messages
    assert any(m.startswith("line 3:") and "geometry.width" in m for m in msgs)
    assert any(m.startswith("line 4:") and "bogus" in m for m in msgs)


@pytest.mark.parametrize("text, needle", [
    ("geometry: {L: -1.0}\n", "geometry"),
    ("dataset: {name: nope}\n", "unknown dataset"),
    ("ledger: {kappa_mode: other}\n", "kappa_mode"),
    ("ledger: {C_K: 0.5}\n", "C_K"),
    ("solver: {omega: 2.0}\n", "omega"),
    ("ledger: {eps: {eps12: 1.0}}\n", "epsilon"),
    ("output: {probe_y: 3}\n", "probe_y"),
    ("geometry: [1, 2\n", "line"),
])
def test_invalid_configs(text, needle):
    with pytest.raises(ConfigError) as ei:
        parse_text(text)
    assert needle in str(ei.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "none.yaml")


def test_trivial_data_ledger_margin_is_root2():
    cfg = parse_text(TRIVIAL)
    ds = cfg.dataset
    model = CellModel(ds.geo, cfg.resolution(), ds.coeffs, ds.bdata)
    rep, korn = compute_ledger(cfg, model)
    assert korn is None and rep.C_K == 4.5
    assert rep.C0 == 0.0 and rep.B0 == 0.0
    assert rep.verdict and rep.margin == pytest.approx(rep.root2, rel=1e-14)
