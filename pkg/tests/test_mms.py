import numpy as np
import pytest

from pemfc.geometry import GeometrySpec, Resolution
from pemfc.mms import FIELDS, convergence_study, observed_orders

GEO = GeometrySpec(1.0, 0.5, 0.5, 0.5, 1.0)


@pytest.fixture(scope="module")
def study():
    return convergence_study(GEO, Resolution(2, 1, 1, 1, 2, 4), refinements=2)


def test_all_blocks_second_order(study):
    assert set(study.errors) == set(FIELDS)
    for f in FIELDS:
        assert len(study.orders[f]) == 2
        assert study.min_order(f) >= 1.8, (f, study.orders[f])
        assert all(e > 0 for e in study.errors[f])


def test_errors_decrease_with_h(study):
    assert study.h == sorted(study.h, reverse=True)
    for f in FIELDS:
        assert np.all(np.diff(study.errors[f]) < 0)


def test_observed_orders():
    assert observed_orders([1.0, 0.25, 0.0625]) == pytest.approx([2.0, 2.0])


def test_report_dict(study):
    d = study.to_dict()
    assert set(d) == {"h", "errors", "orders"}
