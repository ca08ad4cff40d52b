"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line (printed in the pytest terminal summary,
or directly when the file is run as a script) and then asserts the verdict.
"""

import time
import warnings

import numpy as np

from singular_sl import build_factor, make_profile
from singular_sl import evolution as E
from singular_sl import spectrum as S
from singular_sl.model import apply_ell
from singular_sl.resolvent import (
    GreenKernel,
    apply_tilde,
    assemble_T,
    decay_slope,
    schatten_sum,
    singular_values,
    solve_inhomogeneous,
    PeriodicityWarning,
)
from singular_sl.schatten_dyadic import discretize_separable, dyadic_bound, dyadic_coefficients, power_kernel
from singular_sl.singular_factor import default_check_grid, endpoint_exponents, homogeneous_residuals

RESULTS = {}

PROFILES = ("sine", "perturbed-sine", "piecewise-linear-odd")


def record(num: int, ok: bool, detail: str, elapsed: float):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  ({elapsed:6.1f} s)  {detail}"
    RESULTS[num] = line
    print(line)
    return ok


def _cot_power(x, eps):
    return np.abs(1.0 / np.tan(x / 2)) ** (1.0 / eps)


def test_criterion_01_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    x = np.linspace(0.05, np.pi - 0.05, 4001)
    for eps in (0.5, 1.0):
        fac = build_factor(make_profile("sine"), eps)
        for xs in (x, -x):
            worst = max(worst, float(np.max(np.abs(fac.psi(xs) / _cot_power(xs, eps) - 1))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 5
    assert record(1, ok, f"max rel err {worst:.2e} (<= 1e-8), runtime < 5 s", dt)


def test_criterion_02_exponents():
    t0 = time.perf_counter()
    worst = 0.0
    for kind in PROFILES:
        prof = make_profile(kind)
        for eps in (0.5, 1.0):
            th0, thpi = endpoint_exponents(build_factor(prof, eps))
            a = 1 / (eps * prof.c)
            worst = max(worst, abs(th0 - a) / a, abs(thpi + a) / a)
    dt = time.perf_counter() - t0
    ok = worst <= 0.01 and dt < 10
    assert record(2, ok, f"worst relative exponent error {worst:.2e} (<= 1%), runtime < 10 s", dt)


def test_criterion_03_homogeneous():
    t0 = time.perf_counter()
    ell_one, ident, rel_psi = 0.0, 0.0, 0.0
    for kind in PROFILES:
        for eps in (0.5, 1.0):
            r = homogeneous_residuals(build_factor(make_profile(kind), eps, n_nodes=2048))
            ell_one = max(ell_one, r["ell_one"])
            ident = max(ident, r["identity"])
            rel_psi = max(rel_psi, r["ell_psi"])
    # absolute |ell[psi]| for the canonical case f = sin, eps = 1 on the 2048-point check grid
    fac = build_factor(make_profile("sine"), 1.0, n_nodes=2048)
    x = default_check_grid(2048)
    abs_psi = float(np.max(np.abs(apply_ell(fac.profile, 1.0, fac.psi, x))))
    dt = time.perf_counter() - t0
    ok = ell_one == 0.0 and ident <= 1e-5 and abs_psi <= 1e-5 and rel_psi <= 1e-5
    detail = (
        f"ell[1] = {ell_one:g}; max|p (f/p)' + 1/eps| = {ident:.1e}; "
        f"max|ell[psi]| = {abs_psi:.1e} (sine, eps=1), relative {rel_psi:.1e} (all)"
    )
    assert record(3, ok, detail, dt)


SMOOTH = [
    np.sin,
    np.cos,
    lambda x: np.sin(2 * x) + np.cos(3 * x),
    lambda x: np.exp(np.cos(x)) - np.i0(1.0),
    lambda x: x * np.cos(x) ** 2,
]


def test_criterion_04_resolvent():
    t0 = time.perf_counter()
    fac = build_factor(make_profile("sine"), 1.0)
    s = np.linspace(1e-3, np.pi - 1e-3, 200)
    x = np.concatenate([-s[::-1], s])
    worst_res, worst_per = 0.0, 0.0
    for F in SMOOTH:
        r = apply_ell(fac.profile, 1.0, lambda y: apply_tilde(fac, F, y), x) - F(x)
        worst_res = max(worst_res, float(np.linalg.norm(r) / np.linalg.norm(F(x))))
        ends = apply_tilde(fac, F, np.array([np.pi, -np.pi]))
        worst_per = max(worst_per, float(abs(ends[0] - ends[1])))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PeriodicityWarning)
        u = solve_inhomogeneous(fac, np.ones_like, np.array([np.pi, -np.pi]))
    defect = float(u[0] - u[1])
    dt = time.perf_counter() - t0
    ok = worst_res <= 1e-4 and worst_per <= 1e-8 and abs(defect - 2 * np.pi) <= 1e-6
    detail = f"residual {worst_res:.1e} (<= 1e-4), periodicity {worst_per:.1e} (<= 1e-8), F=1 defect - 2 pi = {defect - 2 * np.pi:.1e}"
    assert record(4, ok, detail, dt)


def test_criterion_05_schatten():
    t0 = time.perf_counter()
    k = GreenKernel(build_factor(make_profile("sine"), 1.0))
    s512 = singular_values(assemble_T(k, 512))
    s256 = singular_values(assemble_T(k, 256))
    slope = decay_slope(s512, 10, 100)
    a, b = schatten_sum(s256, 1.0).value, schatten_sum(s512, 1.0).value
    rel = abs(a - b) / abs(b)
    dt = time.perf_counter() - t0
    ok = slope <= -1.3 and rel <= 1e-2 and dt < 60
    assert record(5, ok, f"slope {slope:.3f} (<= -1.3), S_1 {a:.4f} -> {b:.4f}, rel {rel:.1e} (<= 1e-2)", dt)


def test_criterion_06_dyadic():
    t0 = time.perf_counter()
    msgs, ok = [], True
    for al in (0.1, 0.25, 0.4):
        sch = dyadic_coefficients(power_kernel(al), 14)
        sv = singular_values(discretize_separable(power_kernel(al), 64))
        pc = 1 / (1 - al)
        hi, lo = dyadic_bound(sch, pc + 0.05), dyadic_bound(sch, pc - 0.05)
        good = hi.converged and not lo.converged
        for b in (hi, lo):
            if b.converged:
                good &= schatten_sum(sv, b.p).value <= b.value
        ok &= good
        msgs.append(f"a={al}: p+ {'conv' if hi.converged else 'div'} r={hi.ratio:.3f}, p- {'conv' if lo.converged else 'div'} r={lo.ratio:.3f}")
    dt = time.perf_counter() - t0
    assert record(6, ok, "; ".join(msgs), dt)


def test_criterion_07_spectrum():
    t0 = time.perf_counter()
    fac = build_factor(make_profile("sine"), 1.0)
    pts = S.find_eigenvalues(fac, 5)
    efs = [S.eigenfunction(fac, p) for p in pts]
    res = max(e.point.residual for e in efs)
    imag = all(p.eigenvalue_L.real == 0 and p.conjugate_L == np.conj(p.eigenvalue_L) for p in pts)
    simple = min(abs(p.theta_prime) for p in pts)
    tr = S.theta_trace(fac, pts[-1].r)
    decreasing = bool(np.all(np.diff(tr.theta) < 0))
    unimod = float(np.max(np.abs(np.abs(tr.mu) - 1)))
    al = S.alpha_sequence(fac, 50)
    zs = [0.5 * S.RAY, 1.0 * S.RAY, 0.7 + 0.3j]
    prod = max(abs(S.rho(fac, z) - S.rho_product(al, z, N=50)) / abs(S.rho(fac, z)) for z in zs)
    dt = time.perf_counter() - t0
    ok = res <= 1e-4 and imag and simple > 1e-4 and decreasing and unimod <= 1e-6 and prod <= 0.01 and dt < 120
    detail = (
        f"r^2 = {', '.join(f'{p.r ** 2:.4f}' for p in pts)}; residual {res:.1e}; min|Theta'| {simple:.2f}; "
        f"decreasing {decreasing}; ||rho|-1| {unimod:.1e}; product {prod:.1e}"
    )
    assert record(7, ok, detail, dt)


def test_criterion_08_small_eps():
    t0 = time.perf_counter()
    fac = build_factor(make_profile("sine"), 0.1)
    pts = S.find_eigenvalues(fac, 3)
    ratios = [p.r**2 / p.m for p in pts]
    dt = time.perf_counter() - t0
    ok = all(0.9 <= q <= 1.1 for q in ratios)
    assert record(8, ok, "r_m^2 / m = " + ", ".join(f"{q:.4f}" for q in ratios) + " (in [0.9, 1.1])", dt)


def test_criterion_09_gram():
    t0 = time.perf_counter()
    fac = build_factor(make_profile("sine"), 1.0)
    eigs = S.eigen_system(fac, 10)
    conds = np.array([S.gram_condition(eigs, n) for n in range(1, 21)])
    dt = time.perf_counter() - t0
    ok = bool(np.all(np.diff(conds) > 0)) and conds[19] >= 10 * conds[4]
    assert record(9, ok, f"cond(5) = {conds[4]:.3g}, cond(20) = {conds[19]:.3g}, strictly increasing", dt)


def test_criterion_10_evolution():
    t0 = time.perf_counter()
    fac = build_factor(make_profile("sine"), 1.0)
    eigs = S.eigen_system(fac, 1)
    grid = np.linspace(-np.pi, np.pi, 2001)
    fld = E.spectral_evolve(eigs, eigs[0], 1, np.linspace(0, 0.2, 101), grid)
    res = E.pde_residual(fld, fac)

    def bump(y):
        return np.exp(-20 * (y - 1.5) ** 2) * (y - 0.5) * (2.5 - y)

    d = E.dirichlet_solve(fac, bump, (0.5, 2.5), 0.5, 500, 200)
    decays = bool(np.all(np.diff(d.l2_norms()) < 0))
    order, _ = E.convergence_order(fac, bump, (0.5, 2.5), 0.5)
    slope = E.fourier_decay_rate(E.test_profile_h(E.periodic_grid())).slope
    dt = time.perf_counter() - t0
    ok = res <= 1e-3 and decays and order >= 1.8 and abs(slope + 3) <= 0.3
    detail = f"mode residual {res:.1e} (<= 1e-3); L2 decays {decays}; order {order:.2f} (>= 1.8); h slope {slope:.3f}"
    assert record(10, ok, detail, dt)


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
