import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voldiff.limiters import (
    CDA,
    KERSHAW,
    LARSEN2,
    LEVERMORE_POMRANING,
    MAX,
    SUM,
    TABLE_LIMITERS,
    FluxLimiter,
    evaluate,
)

ALL = (CDA,) + TABLE_LIMITERS


def test_diffusive_limit_one_third():
    for lim in ALL:
        assert evaluate(lim, 0.0) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_transport_limit_r_times_f_tends_to_one():
    r = 1e6
    for lim in TABLE_LIMITERS:
        assert r * evaluate(lim, r) == pytest.approx(1.0, abs=1e-3)


def test_closed_form_values():
    # spot values straight from the defining formulas
    assert evaluate(SUM, 2.0) == pytest.approx(1.0 / 5.0)
    assert evaluate(MAX, 2.0) == pytest.approx(1.0 / 3.0)
    assert evaluate(MAX, 5.0) == pytest.approx(1.0 / 5.0)
    assert evaluate(KERSHAW, 2.0) == pytest.approx(2.0 / (3.0 + 5.0))
    assert evaluate(LARSEN2, 4.0) == pytest.approx((3.0**2 + 4.0**2) ** -0.5)
    coth1 = 1.0 / math.tanh(1.0)
    assert evaluate(LEVERMORE_POMRANING, 1.0) == pytest.approx(coth1 - 1.0)


def test_lp_series_patch_is_continuous():
    from voldiff.limiters import LP_TAYLOR_THRESHOLD as thr

    lo = evaluate(LEVERMORE_POMRANING, thr * (1 - 1e-9))
    hi = evaluate(LEVERMORE_POMRANING, thr * (1 + 1e-9))
    assert abs(lo - hi) < 1e-10


def test_larsen_extreme_arguments_finite():
    for r in (1e-300, 1e300):
        for n in (1.0, 2.0, 8.0):
            v = evaluate(FluxLimiter("larsen", n), r)
            assert np.isfinite(v) and v > 0


def test_bounds_and_monotonicity_on_log_grid():
    rr = np.logspace(-8, 8, 400)
    for lim in TABLE_LIMITERS:
        f = evaluate(lim, rr)
        assert np.all(f > 0)
        assert np.all(f <= 1.0 / 3.0 + 1e-15)
        assert np.all(f <= 1.0 / rr + 1e-12)
        assert np.all(np.diff(f) <= 1e-15)  # monotone non-increasing


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.0, max_value=1e12, allow_nan=False))
def test_flux_constraint_property(r):
    # F(R) <= 1/R guarantees |E| <= phi in the diffusion ansatz
    for lim in TABLE_LIMITERS:
        f = evaluate(lim, r)
        assert 0 < f <= 1.0 / 3.0 + 1e-15
        if r > 0:
            assert f * r <= 1.0 + 1e-9


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        evaluate(SUM, -1.0)
    with pytest.raises(ValueError):
        evaluate(SUM, float("nan"))
    with pytest.raises(ValueError):
        FluxLimiter("nope")
    with pytest.raises(ValueError):
        FluxLimiter("larsen", 0.5)


def test_from_name_parsing():
    assert FluxLimiter.from_name("lp") == LEVERMORE_POMRANING
    assert FluxLimiter.from_name("larsen") == LARSEN2
    lim = FluxLimiter.from_name("larsen3")
    assert lim.kind == "larsen" and lim.n == 3.0
    assert lim.name == "larsen3"
    assert FluxLimiter.from_name("CDA") == CDA


def test_cda_is_constant():
    rr = np.logspace(-8, 8, 50)
    assert np.allclose(evaluate(CDA, rr), 1.0 / 3.0)
