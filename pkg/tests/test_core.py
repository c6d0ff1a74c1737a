import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invreins import ModelParams, check_novikov, check_strategy_admissibility, validate
from invreins.core import ParameterError


def test_novikov_defaults(defaults):
    ok, lhs, rhs = check_novikov(defaults)
    assert ok
    assert lhs == pytest.approx(0.03 + 0.0324 / 2, abs=1e-12)
    assert round(lhs, 4) == 0.0462
    assert rhs == pytest.approx(0.1)


def test_novikov_zero_case():
    ok, lhs, rhs = check_novikov(ModelParams(p0=0.0, sigma0=0.0, T=1e3))
    assert ok and lhs == 0.0


def test_novikov_long_horizon_fails(defaults):
    ok, lhs, rhs = check_novikov(defaults.with_(T=25.0))
    assert not ok
    assert rhs == pytest.approx(0.04)
    assert lhs == pytest.approx(0.0462)


def test_admissibility_defaults(defaults):
    ok, lhs, rhs = check_strategy_admissibility(defaults, 0.03)
    assert ok
    assert lhs == pytest.approx(0.0009)
    assert rhs == pytest.approx(1.0 / (10 * 16 * 1.1025))
    assert rhs == pytest.approx(0.00567, abs=1e-5)


def test_admissibility_zero_and_long_horizon(defaults):
    ok, lhs, _ = check_strategy_admissibility(defaults, 0.0)
    assert ok and lhs == 0.0
    ok, lhs, rhs = check_strategy_admissibility(defaults.with_(T=100.0), 0.03)
    assert not ok
    assert rhs == pytest.approx(5.67e-4, rel=1e-3)
    assert lhs == pytest.approx(9e-4)


def test_admissibility_inapplicable():
    prm = ModelParams(b0=0.1, sigma0=0.5, rho=-1.0)
    with pytest.raises(ValueError, match="inapplicable"):
        check_strategy_admissibility(prm, 0.01)


def test_validate_never_raises_and_reports():
    rep = validate(ModelParams(b0=0.1, sigma0=0.5, rho=-1.0))
    assert not rep.admissibility_ok
    assert any("inapplicable" in m for m in rep.messages)
    rep = validate(ModelParams(T=25.0))
    assert not rep.novikov_ok and not rep.ok
    assert len(rep.lines()) >= 3


def test_validate_defaults_pass(defaults):
    rep = validate(defaults)
    assert rep.ok and rep.messages == []
    assert rep.admissibility_lhs == pytest.approx(0.0009)


@pytest.mark.parametrize(
    "field, value",
    [
        ("rho", 2.0),
        ("rho", -1.5),
        ("b0", 0.0),
        ("sigma1", -1.0),
        ("T", 0.0),
        ("eta", -0.5),
        ("p0", -0.1),
        ("r", -0.01),
        ("mu0", math.nan),
    ],
)
def test_invalid_parameters(field, value):
    with pytest.raises(ParameterError) as exc:
        ModelParams(**{field: value})
    assert exc.value.field_name == field


def test_flags_match_strict_inequality():
    # exactly on the boundary: strict inequality fails
    prm = ModelParams(p0=0.0, sigma0=0.0, T=10.0)
    ok, lhs, rhs = check_novikov(prm.with_(p0=0.1))
    assert lhs == rhs and not ok


@settings(max_examples=60, deadline=None)
@given(
    T=st.floats(0.5, 50),
    p0=st.floats(0, 0.2),
    sigma0=st.floats(0, 0.6),
    dT=st.floats(0, 20),
    dp=st.floats(0, 0.1),
    ds=st.floats(0, 0.3),
)
def test_novikov_monotone(T, p0, sigma0, dT, dp, ds):
    base = ModelParams(T=T, p0=p0, sigma0=sigma0)
    ok0 = check_novikov(base)[0]
    for bigger in (base.with_(T=T + dT), base.with_(p0=p0 + dp), base.with_(sigma0=sigma0 + ds)):
        if not ok0:
            assert not check_novikov(bigger)[0]


@settings(max_examples=60, deadline=None)
@given(p_bar=st.floats(0, 0.2), e1=st.floats(1e-4, 1.0), e2=st.floats(1e-4, 1.0), T=st.floats(0.5, 50))
def test_admissibility_monotone_in_epsilon(p_bar, e1, e2, T):
    lo, hi = sorted((e1, e2))
    ok_hi = check_strategy_admissibility(ModelParams(T=T, epsilon=hi), p_bar)[0]
    ok_lo = check_strategy_admissibility(ModelParams(T=T, epsilon=lo), p_bar)[0]
    # smaller epsilon gives a smaller constant, so a looser bound
    assert ok_lo or not ok_hi
