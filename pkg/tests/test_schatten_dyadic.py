import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from singular_sl.resolvent import GreenKernel, assemble_T, schatten_sum, singular_values
from singular_sl.schatten_dyadic import (
    DyadicQuadratureError,
    DyadicScheme,
    SeparableKernel,
    discretize_separable,
    dyadic_blocks,
    dyadic_bound,
    dyadic_coefficients,
    power_kernel,
    r_hs_norm,
    reassembly_error,
    split_T,
    write_levels_csv,
)


@pytest.fixture(scope="module")
def schemes():
    return {al: dyadic_coefficients(power_kernel(al), 14) for al in (0.1, 0.25, 0.4)}


def test_single_cell_constant():
    s = dyadic_coefficients(SeparableKernel(np.ones_like, np.ones_like), 1)
    assert s.level(1)[0] == pytest.approx(np.pi / 2, rel=1e-14)
    b = dyadic_bound(s, 1.5)
    assert b.value == pytest.approx(np.pi / 2, rel=1e-14)
    assert not b.converged


def test_constant_kernel_closed_form():
    # alpha_kj = (pi / 2^j) for a = b = 1
    s = dyadic_coefficients(SeparableKernel(np.ones_like, np.ones_like), 8)
    for j in range(1, 9):
        assert s.level(j).size == 2 ** (j - 1)
        assert np.allclose(s.level(j), np.pi / 2**j, rtol=1e-13)
    assert dyadic_bound(s, 1.5).converged


def test_zero_kernel():
    s = dyadic_coefficients(SeparableKernel(np.zeros_like, np.ones_like), 6)
    assert all(np.all(c == 0) for c in s.coefficients)


def test_intervals_tile():
    for j in (1, 3, 7):
        iv = DyadicScheme.intervals(j)
        assert iv[0, 0] == 0 and iv[-1, 1] == pytest.approx(np.pi)
        assert np.all(iv[1:, 0] == iv[:-1, 1])


def test_proof_bound_quarter_power():
    # a = x^(-1/4): alpha_kj <= sqrt(c9) 2^(-j (1 + 1/N)/2), N = 1/(1 - 2 alpha) = 2
    al = 0.25
    s = dyadic_coefficients(power_kernel(al), 10)
    c9 = np.pi ** (2 - 2 * al) / (1 - 2 * al)
    N = 1 / (1 - 2 * al)
    for j in range(2, 11):
        lower = s.level(j)[: 2 ** (j - 2)]
        assert np.all(lower <= np.sqrt(c9) * 2 ** (-j * (1 + 1 / N) / 2) * (1 + 1e-12))


def test_non_integrable_input_raises():
    with pytest.raises(DyadicQuadratureError):
        dyadic_coefficients(power_kernel(0.6), 4)


def test_limit_ratio_is_alpha_independent(schemes):
    # for a = x^-alpha the level norms decay like 2^(j (1/p - 1)) whenever alpha p < 1
    for al, s in schemes.items():
        for p in (1.2, 1.5, 2.0):
            b = dyadic_bound(s, p)
            assert b.ratio == pytest.approx(2 ** (1 / p - 1), abs=1e-2)


def test_convergence_verdicts(schemes):
    # p = 2 converges for all; below p = 1 the levels grow
    for s in schemes.values():
        assert dyadic_bound(s, 2.0).converged
        b = dyadic_bound(s, 0.9)
        assert not b.converged and b.ratio > 1 and np.isinf(b.tail)
    # the 0.9 increment rule separates p = 1.15 (ratio 0.913) from p = 1.25 (0.871)
    assert not dyadic_bound(schemes[0.1], 1.15).converged
    assert dyadic_bound(schemes[0.1], 1.25).converged


def test_bound_monotone_in_p(schemes):
    s = schemes[0.25]
    vals = [dyadic_bound(s, p).value for p in (1.0, 1.2, 1.5, 2.0, 3.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("al", [0.1, 0.25, 0.4])
def test_dominance_over_direct_svd(schemes, al):
    sv = singular_values(discretize_separable(power_kernel(al), 64))
    for p in (1.2, 1.5, 2.0, 3.0):
        b = dyadic_bound(schemes[al], p)
        if b.converged:
            assert schatten_sum(sv, p).value <= b.value


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-6, np.pi - 1e-6), st.floats(1e-6, np.pi - 1e-6))
def test_partition_property(x, y):
    assume(abs(x - y) > 1e-9)
    blocks = dyadic_blocks(x, y)
    # exactly one block when y < x, none when y > x
    assert len(blocks) == (1 if y < x else 0)


def test_levels_csv(tmp_path, schemes):
    p = write_levels_csv(tmp_path / "lv.csv", schemes[0.4], 2.0)
    rows = p.read_text().splitlines()
    assert rows[0].startswith("j,") and len(rows) == 15


@pytest.fixture(scope="module")
def pieces(sine_fac1):
    return split_T(GreenKernel(sine_fac1))


def test_reassembly(sine_fac1):
    assert reassembly_error(GreenKernel(sine_fac1), 256) <= 1e-8


def test_piece_two_support(pieces):
    F = lambda y: np.where(y > np.pi / 2, np.cos(3 * y), 0.0)
    x = np.linspace(0.05, np.pi / 2 - 0.05, 9)
    assert np.all(pieces["T+2"].apply_factored(F, x) == 0)
    yq = np.linspace(np.pi / 2 + 0.01, np.pi - 0.01, 50)
    assert np.all(pieces["T+2"].kernel(x[:, None], yq[None, :]) == 0)


def test_piece_two_rank(sine_fac1, pieces):
    D = assemble_T(GreenKernel(sine_fac1), 256, method="nystrom")
    s = np.linalg.svd(pieces["T+2"].matrix(D), compute_uv=False)
    assert s[2] <= 1e-12 * s[0]


@pytest.mark.parametrize("name", ["T+1", "T+2", "T+3", "T-1", "T-2", "T-3"])
def test_factorisations_match_kernel(pieces, name):
    from singular_sl.quadrature import interval_rule

    pc = pieces[name]
    F = lambda y: np.cos(y) + 0.3 * np.sin(2 * y)
    x = np.array([-3.0, -2.0, -1.2, -0.4, 0.3, 1.0, 1.5, 1.7, 2.5, 3.1])
    yq, wq = interval_rule(-np.pi, np.pi, 64, 16)
    direct = np.array([np.sum(wq * pc.kernel(xi, yq) * F(yq)) for xi in x])
    assert np.max(np.abs(pc.apply_factored(F, x) - direct)) <= 1e-5


def test_r_hs_norms(pieces, sine_fac1):
    from scipy.integrate import dblquad

    pc = pieces["T+1"]
    ref = dblquad(lambda y, z: pc.r_kernel(z, y) ** 2, 1e-12, np.pi / 2, 0, lambda z: z, epsrel=1e-9)[0] ** 0.5
    assert r_hs_norm(pc) == pytest.approx(ref, rel=1e-6)
    # f = sin is symmetric about pi/2, so pieces 1 and 3 mirror each other
    assert r_hs_norm(pieces["T+3"]) == pytest.approx(r_hs_norm(pc), rel=1e-8)
    with pytest.raises(ValueError):
        r_hs_norm(pieces["T+2"])


def test_r_hs_grows_as_alpha_vanishes(sine_fac1):
    G = GreenKernel(sine_fac1)
    vals = [r_hs_norm(split_T(G, alpha=a)["T+1"]) for a in (0.2, 0.1, 0.05, 0.02)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    # ~ 1/sqrt(2 alpha) blow-up
    assert vals[-1] * np.sqrt(0.02) == pytest.approx(vals[-2] * np.sqrt(0.05), rel=0.1)
    assert np.isinf(r_hs_norm(split_T(G, alpha=0.0)["T+1"]))
