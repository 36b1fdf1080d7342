import pytest

from pemfc.datasets import normalized
from pemfc.geometry import Resolution
from pemfc.ledger import LedgerOptions, build_ledger
from pemfc.model import CellModel

SMALL = Resolution(4, 2, 2, 2, 4, 16)
C_K_SMOKE = 4.5  # above the discrete Korn estimate (about 3.98) on the normalized geometry


def ledger_for(ds, model, C_K=C_K_SMOKE):
    c = ds.coeffs
    return build_ledger(c.bounds, c.constants, ds.geo.L, model.gamma_cl_measure(), model.lifting_norms(),
                        c.rho_1m, ds.eps, c.bv.jL_c, LedgerOptions(C_K=C_K))


@pytest.fixture(scope="session")
def norm_ds():
    return normalized()


@pytest.fixture(scope="session")
def small_model(norm_ds):
    return CellModel(norm_ds.geo, SMALL, norm_ds.coeffs, norm_ds.bdata)


@pytest.fixture(scope="session")
def small_report(norm_ds, small_model):
    return ledger_for(norm_ds, small_model)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
