import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singular_sl import build_factor, make_profile
from singular_sl.model import apply_ell
from singular_sl.resolvent import (
    DiscreteOperator,
    GreenKernel,
    LambdaSolutions,
    NearEigenvalueError,
    PeriodicityWarning,
    apply_tilde,
    assemble_T,
    decay_slope,
    green_eval,
    green_grid,
    hs_norm_quad,
    project_tilde,
    resolvent_at,
    resolvent_residual,
    schatten_sum,
    singular_values,
    solve_inhomogeneous,
    write_green_csv,
    write_singular_values_csv,
)

SMOOTH_ZERO_MEAN = [
    np.sin,
    np.cos,
    lambda x: np.sin(2 * x) + np.cos(3 * x),
    lambda x: np.exp(np.cos(x)) - np.i0(1.0),
    lambda x: x * np.cos(x) ** 2,
]


@pytest.fixture(scope="module")
def kern(sine_fac1):
    return GreenKernel(sine_fac1)


@pytest.fixture(scope="module")
def T512(kern):
    return assemble_T(kern, 512)


def test_green_point_value(kern):
    assert green_eval(kern, np.pi / 2, np.pi / 4) == pytest.approx(1 - np.tan(np.pi / 8), abs=1e-12)
    assert green_eval(kern, -0.5, 0.3) == 0.0
    assert green_eval(kern, 0.3, 0.5) == 0.0
    assert green_eval(kern, 1.0 + 1e-9, 1.0) == pytest.approx(0.0, abs=1e-8)


def test_green_domain_errors(kern):
    for x, y in [(0.0, 0.5), (1.0, 0.0), (np.pi, 1.0), (1.0, -np.pi)]:
        with pytest.raises(ValueError):
            green_eval(kern, x, y)


def test_green_sign_pattern_and_bounded(kern):
    X, Y, G = green_grid(kern, 257)
    pos = (0 < Y) & (Y < X)
    neg = (X < Y) & (Y < 0)
    assert np.all(G[pos] >= 0) and np.all(G[neg] <= 0)
    assert np.all(G[~(pos | neg)] == 0)
    assert np.max(np.abs(G)) <= 1.0
    g_small = np.max(np.abs(green_grid(kern, 129)[2]))
    assert np.max(np.abs(G)) <= 2 * g_small


def test_solve_trivial(sine_fac1):
    x = np.linspace(-np.pi, np.pi, 11)
    u = solve_inhomogeneous(sine_fac1, np.zeros_like, x, k=3.0)
    assert np.all(u == 3.0)


def test_solve_constant_forcing_breaks_periodicity(sine_fac1):
    with pytest.warns(PeriodicityWarning):
        u = solve_inhomogeneous(sine_fac1, np.ones_like, np.array([np.pi, -np.pi]))
    assert u[0] == pytest.approx(np.pi, abs=1e-12)
    assert u[1] == pytest.approx(-np.pi, abs=1e-12)


def test_solve_sine_periodic(sine_fac1):
    with warnings.catch_warnings():
        warnings.simplefilter("error", PeriodicityWarning)
        u = solve_inhomogeneous(sine_fac1, np.sin, np.array([np.pi, -np.pi, np.pi - 1e-10, -np.pi + 1e-10]))
    assert abs(u[0] - u[1]) <= 1e-8
    assert abs(u[2] - u[3]) <= 1e-8


def test_solve_continuous_through_zero(sine_fac1):
    x = np.array([-1e-8, 0.0, 1e-8])
    u = solve_inhomogeneous(sine_fac1, np.cos, x, k=0.5)
    assert np.max(np.abs(u - 0.5)) <= 1e-7


@pytest.mark.parametrize("i", range(len(SMOOTH_ZERO_MEAN)))
def test_tilde_inverts_ell(sine, sine_fac1, i):
    F = SMOOTH_ZERO_MEAN[i]
    s = np.linspace(1e-3, np.pi - 1e-3, 200)
    x = np.concatenate([-s[::-1], s])
    r = apply_ell(sine, 1.0, lambda y: apply_tilde(sine_fac1, F, y), x) - F(x)
    assert np.linalg.norm(r) / np.linalg.norm(F(x)) <= 1e-5


def test_ell_then_solve_recovers_compact_bump(sine, sine_fac1):
    # u supported inside (0.5, 2.5), so ell[u] has zero mean and u(0) = 0
    def u(x):
        t = (np.asarray(x) - 1.5) / 1.0
        out = np.zeros_like(t)
        m = np.abs(t) < 1
        out[m] = np.exp(-1 / (1 - t[m] ** 2))
        return out

    x = np.linspace(0.6, 2.4, 31)
    F = lambda y: apply_ell(sine, 1.0, u, y, h=1e-3)
    v = solve_inhomogeneous(sine_fac1, F, x, check=False)
    assert np.max(np.abs(v - u(x))) <= 1e-4


def test_operator_weights_and_zero(T512):
    assert T512.n == 512
    assert T512.weights.sum() == pytest.approx(2 * np.pi, abs=1e-10)
    assert np.all(T512.apply(np.zeros(T512.n)) == 0)


@pytest.mark.parametrize("method", ["product", "nystrom"])
def test_apply_matches_solve(kern, sine_fac1, method):
    errs = []
    for n in (256, 512):
        D = assemble_T(kern, n, method=method)
        ref = solve_inhomogeneous(sine_fac1, np.cos, D.nodes, check=False)
        errs.append(np.max(np.abs(D.apply(np.cos) - ref)))
    # at least second order
    assert errs[1] <= errs[0] / 3.5
    assert errs[1] <= 2e-4


def test_apply_constant_near_pi(T512, sine_fac1):
    i = np.argmin(np.abs(T512.nodes - (np.pi - 0.01)))
    x = T512.nodes[i]
    ref = solve_inhomogeneous(sine_fac1, np.ones_like, np.array([x]), check=False)[0]
    assert T512.apply(np.ones(T512.n))[i] == pytest.approx(ref, abs=1e-8)
    assert 0 < x - ref < 0.1  # pi - 0.01 minus the psi-term


def test_min_size(kern):
    with pytest.raises(ValueError):
        assemble_T(kern, 16)


def test_hs_norm_two_ways(T512, kern):
    s = singular_values(T512)
    assert np.sqrt(np.sum(s**2)) == pytest.approx(hs_norm_quad(kern), rel=1e-3)


def test_project_tilde(T512):
    Tt = project_tilde(T512)
    rng = np.random.default_rng(0)
    F = rng.standard_normal(T512.n)
    assert abs(Tt.inner(Tt.apply(F), np.ones(T512.n))) <= 1e-10 * np.sqrt(T512.inner(F, F))
    d = np.linalg.svd(T512.matrix - Tt.matrix, compute_uv=False)
    assert d[1] <= 1e-10 * d[0]
    # constants are annihilated after projection
    c = DiscreteOperator(T512.nodes, T512.weights, np.ones((T512.n, T512.n)) * T512.weights[None, :])
    assert np.max(np.abs(project_tilde(c).apply(np.ones(T512.n)))) <= 1e-12


def test_singular_values_rank_one():
    from singular_sl.quadrature import symmetric_rule

    x, w = symmetric_rule(8, 8)
    a, b = np.cos(x) + 2, np.exp(np.sin(x))
    D = DiscreteOperator(x, w, np.outer(a, b) * w[None, :])
    s = singular_values(D)
    na = np.sqrt(np.sum(w * a**2))
    nb = np.sqrt(np.sum(w * b**2))
    assert s[0] == pytest.approx(na * nb, rel=1e-8)
    assert s[1] <= 1e-10 * s[0]
    assert np.all(singular_values(DiscreteOperator(x, w, np.zeros((x.size, x.size)))) == 0)


def test_singular_values_refinement(kern):
    s1 = singular_values(assemble_T(kern, 256))
    s2 = singular_values(assemble_T(kern, 512))
    assert np.all(np.diff(s2) <= 0) and np.all(s2 >= 0)
    assert np.max(np.abs(s1[:100] / s2[:100] - 1)) <= 1e-3
    assert decay_slope(s2) <= -1.3
    a, b = schatten_sum(s1, 1).value, schatten_sum(s2, 1).value
    assert abs(a - b) / b <= 1e-2


def test_schatten_sum_examples():
    assert schatten_sum([1, 0, 0], 2).value == 1.0
    assert schatten_sum([3, 4], 1).value == 7.0
    assert schatten_sum([3, 4], 1).truncated
    assert not schatten_sum([1.0, 1e-13], 1).truncated
    with pytest.raises(ValueError):
        schatten_sum([1.0], 0.0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=20), st.floats(0.5, 4))
def test_schatten_monotone_in_p(s, p):
    # ||.||_p is non-increasing in p
    assert schatten_sum(s, p).value >= schatten_sum(s, p + 0.5).value - 1e-12


def test_wronskian_normalised(sine_fac1):
    sols = LambdaSolutions(sine_fac1, 1 + 1j)
    x = np.array([-2.9, -1.0, -0.05, 0.05, 1.0, 2.9])
    assert np.max(np.abs(sols.wronskian(x) - 1)) <= 1e-8


def test_psi_lambda_zero_matches_singular_solution(sine_fac1):
    sols = LambdaSolutions(sine_fac1, 0.0)
    x = np.array([-2.0, -0.5, 0.5, 2.0])
    psi = sols.psi(x)[0]
    assert np.allclose(psi, -sine_fac1.epsilon * sine_fac1.psi(x), rtol=1e-7)


@pytest.mark.parametrize("lam", [0.1, 1 + 1j, -2.0])
def test_resolvent_residual(sine_fac1, lam):
    for F in (np.sin, lambda x: np.cos(2 * x) + np.sin(x)):
        assert resolvent_residual(sine_fac1, lam, F) <= 1e-4


def test_resolvent_periodic_and_zero(sine_fac1):
    sols = LambdaSolutions(sine_fac1, 0.1)
    u = resolvent_at(sine_fac1, 0.1, np.cos, np.array([np.pi, -np.pi, np.pi - 1e-7, -np.pi + 1e-7]), sols=sols)
    assert abs(u[0] - u[1]) <= 1e-8 * abs(u[0])
    assert abs(u[2] - u[0]) <= 1e-5 * abs(u[0])
    assert np.all(resolvent_at(sine_fac1, 0.1, np.zeros_like, np.linspace(-3, 3, 7), sols=sols) == 0)


def test_resolvent_small_lambda_tends_to_inverse(sine_fac1):
    # i ell u - lam u = i F  ->  ell u = F as lam -> 0; compare zero-mean parts
    x = np.linspace(-3, 3, 13)
    lam = 1e-6
    u = resolvent_at(sine_fac1, lam, np.sin, x)
    v = apply_tilde(sine_fac1, np.sin, x)
    d = u - v
    assert np.ptp(d.real) <= 1e-5 and np.max(np.abs(d.imag)) <= 1e-5


def test_csv_emitters(tmp_path, kern, T512):
    p = write_green_csv(tmp_path / "g.csv", kern, 17)
    rows = p.read_text().splitlines()
    assert rows[0] == "x,y,G" and len(rows) == 1 + 16 * 16  # the x = 0 line is dropped
    q = write_singular_values_csv(tmp_path / "s.csv", singular_values(T512)[:10])
    assert q.read_text().splitlines()[1].startswith("1,")
