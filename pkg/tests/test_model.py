import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singular_sl.model import (
    ProfileError,
    apply_ell,
    check_epsilon,
    derivatives,
    make_profile,
    validate_profile,
)


@pytest.mark.parametrize("kind", ["sine", "perturbed-sine", "piecewise-linear-odd"])
def test_builtin_profiles_validate(kind):
    rep = validate_profile(make_profile(kind), 1024)
    assert rep.passed, rep.failures()
    assert rep.periodicity <= 1e-12 and rep.antiperiodicity <= 1e-12 and rep.oddness <= 1e-12
    assert rep.min_value > 0


def test_sine_report_values():
    rep = validate_profile(make_profile("sine"), 1024)
    assert rep.c == 1.0
    # sin x - x ~ -x^3/6
    assert abs(rep.linear_exponent - 3.0) < 0.05


def test_pwlinear_kinks_declared():
    p = make_profile("pwlinear", {"slope": 2.0})
    assert p.kind == "piecewise-linear-odd"
    assert p.c == 2.0
    assert set(np.round(p.kinks, 12)) == {round(np.pi / 2, 12), round(-np.pi / 2, 12)}
    assert validate_profile(p).condition3_ok


def test_perturbed_sine_slope():
    p = make_profile("perturbed-sine", {"gamma": 0.3})
    assert p.c == pytest.approx(1.3)
    x = np.linspace(-3, 3, 101)
    h = 1e-6
    assert np.allclose(p.deriv(x), (p(x + h) - p(x - h)) / (2 * h), atol=1e-7)


def test_perturbed_sine_rejects_negative_profile():
    with pytest.raises(ProfileError):
        make_profile("perturbed-sine", {"gamma": -1.5})


def test_user_table_profile():
    x = np.linspace(0, np.pi / 2, 65)
    p = make_profile("user-table", {"x": x, "values": np.sin(x)})
    y = np.linspace(-3, 3, 41)
    assert np.max(np.abs(p(y) - np.sin(y))) < 1e-6
    assert p.c == pytest.approx(1.0, abs=1e-4)


def test_user_table_rejects_bad_samples():
    x = np.linspace(0, np.pi / 2, 10)
    with pytest.raises(ProfileError):
        make_profile("user-table", {"x": x, "values": np.sin(x) - 0.1})


def test_unknown_kind():
    with pytest.raises(ProfileError):
        make_profile("cosine")


def test_validate_flags_even_profile():
    p = make_profile("sine")
    bad = type(p)("bad", lambda x: np.abs(np.sin(x)), lambda x: np.sign(np.sin(x)) * np.cos(x), c=1.0)
    rep = validate_profile(bad)
    assert not rep.passed
    assert rep.oddness > 1.0


def test_check_epsilon_range():
    p = make_profile("piecewise-linear-odd", {"slope": 2.0})
    assert check_epsilon(p, 0.5) == 0.5
    for eps in (0.0, -0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            check_epsilon(p, eps)


def test_derivatives_polynomial():
    x = np.linspace(-3, 3, 50)
    d1, d2 = derivatives(lambda y: y**3, x)
    assert np.allclose(d1, 3 * x**2, atol=1e-6)
    assert np.allclose(d2, 6 * x, atol=1e-5)


def test_ell_of_constant_is_zero():
    p = make_profile("sine")
    x = np.linspace(0.01, 3.1, 40)
    assert np.all(apply_ell(p, 0.7, lambda y: np.full_like(y, 5.0), x) == 0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.9, 3.0), st.floats(-20, 20))
def test_structure_holds_for_perturbed(gamma, x):
    p = make_profile("perturbed-sine", {"gamma": gamma})
    assert p(x + 2 * np.pi) == pytest.approx(p(x), abs=1e-12)
    assert p(-x) == pytest.approx(-p(x), abs=1e-12)
    assert p(x + np.pi) == pytest.approx(-p(x), abs=1e-12)
    # odd + anti-periodic => symmetric about pi/2
    assert p(np.pi - x) == pytest.approx(p(x), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(1e-3, np.pi - 1e-3))
def test_pwlinear_positive_and_symmetric(slope, x):
    p = make_profile("pwlinear", {"slope": slope})
    assert p(x) > 0
    assert p(np.pi - x) == pytest.approx(p(x), rel=1e-12)
    assert p(-x) == pytest.approx(-p(x), rel=1e-12)
