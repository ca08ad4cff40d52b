"""Forward-backward evolution d_t u + L u = 0 and related diagnostics.

Three pieces:

* truncated eigen-expansions u(t) = sum_k c_k exp(-mu_k t) phi_k, where mu_k
  is the L-eigenvalue of phi_k (mu = i lam with the rotated real lam);
* a Crank-Nicolson solver for d_t u = L u on a sub-interval I0 of (0, pi)
  with zero boundary values, forward-parabolic there because eps f > 0;
* Fourier-decay and residual diagnostics.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import splu

from .singular_factor import IntegratingFactor
from .spectrum import biorthogonal_coeffs

MARGIN = 0.05


@dataclass(frozen=True, eq=False)
class EvolutionField:
    times: np.ndarray
    grid: np.ndarray
    values: np.ndarray  # shape (len(times), len(grid)), complex
    order: int
    init_label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (self.times.size, self.grid.size):
            raise ValueError("values must have shape (len(times), len(grid))")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be increasing")
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError("non-finite values in evolution field")

    def l2_norms(self) -> np.ndarray:
        """Trapezoidal L2 norm of each time slice."""
        return np.sqrt(np.trapezoid(np.abs(self.values) ** 2, self.grid, axis=1))

    def max_abs(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1)


# ---------------------------------------------------------------------------
# test profile


def test_profile_h(x):
    """Odd C^1 profile: 4x/pi, then -8x^2/pi^2 + 8x/pi - 1/2, then -4(x - pi)/pi on (0, pi)."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    mid = -8 * a**2 / np.pi**2 + 8 * a / np.pi - 0.5
    val = np.where(a < np.pi / 4, 4 * a / np.pi, np.where(a <= 3 * np.pi / 4, mid, -4 * (a - np.pi) / np.pi))
    return np.sign(x) * val


def h_sine_coefficients(n):
    """Exact b_n in h = sum b_n sin(n x), by two integrations by parts.

    h'' = -16/pi^2 on (pi/4, 3 pi/4) and 0 elsewhere, h and h' are continuous,
    so b_n = (2/pi) (16/pi^2) 2 sin(n pi/2) sin(n pi/4) / n^3 (odd n only).
    """
    n = np.asarray(n, dtype=float)
    return (2 / np.pi) * (16 / np.pi**2) * 2 * np.sin(n * np.pi / 2) * np.sin(n * np.pi / 4) / n**3


# ---------------------------------------------------------------------------
# spectral evolution


def spectral_evolve(eigs, g, n: int, times, grid=None, label: str = "", coeffs=None) -> EvolutionField:
    """u(t, x) = sum_{k<n} c_k exp(-mu_k t) phi_k(x) with c from the Gram solve.

    eigs follows the ordering [phi_1, conj phi_1, phi_2, ...]; n counts
    functions, so even n keeps conjugate pairs together and real data stay real.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    grid = np.linspace(-np.pi, np.pi, 1001) if grid is None else np.asarray(grid, dtype=float)
    c = biorthogonal_coeffs(eigs, g, n) if coeffs is None else np.asarray(coeffs)
    modes = np.stack([e(grid) for e in eigs[:n]])  # (n, nx)
    mu = np.array([e.eigenvalue_L for e in eigs[:n]])
    amp = c[None, :] * np.exp(-np.outer(times, mu))  # (nt, n)
    return EvolutionField(times, grid, amp @ modes, n, label or getattr(g, "__name__", "g"), {"coeffs": c, "mu": mu})


def pde_residual(fld: EvolutionField, fac: IntegratingFactor, margin: float = MARGIN) -> float:
    """Discrete L2 norm of d_t u + eps (f u')' + u' over the interior space-time cells.

    Second-order differences in t and, on a uniform grid, a conservative
    three-point stencil in x; points within `margin` of 0 and +-pi are dropped.
    The space-time norm is divided by sqrt(duration) so it is an RMS in t.
    """
    t, x, u = fld.times, fld.grid, fld.values
    if t.size < 3:
        raise ValueError("need at least three time slices")
    if not np.any(u):
        return 0.0
    dx = np.diff(x)
    if np.ptp(dx) > 1e-9 * dx[0]:
        raise ValueError("pde_residual needs a uniform grid")
    h = dx[0]
    eps, f = fac.epsilon, fac.profile
    ut = np.gradient(u, t, axis=0, edge_order=2)[1:-1]
    uc = u[1:-1]
    fp = eps * f(x[1:-1] + h / 2)
    fm = eps * f(x[1:-1] - h / 2)
    ell = (fp * (uc[:, 2:] - uc[:, 1:-1]) - fm * (uc[:, 1:-1] - uc[:, :-2])) / h**2 + (uc[:, 2:] - uc[:, :-2]) / (2 * h)
    res = ut[:, 1:-1] + ell
    xi = x[1:-1]
    keep = (np.abs(xi) > margin) & (np.pi - np.abs(xi) > margin)
    dt = np.gradient(t)[1:-1]
    tot = np.sum(dt[:, None] * np.abs(res[:, keep]) ** 2) * h
    return float(np.sqrt(tot / np.sum(dt)))


# ---------------------------------------------------------------------------
# Dirichlet problem on I0


@dataclass(frozen=True)
class DirichletConfig:
    nx: int = 200  # interior cells
    nt: int = 500


def _check_interval(I0):
    a, b = float(I0[0]), float(I0[1])
    if not 0 < a < b < np.pi:
        raise ValueError(f"I0 = ({a}, {b}) must have closure inside (0, pi)")
    return a, b


def dirichlet_operator(fac: IntegratingFactor, I0, nx: int):
    """Interior nodes and the sparse matrix of eps (f u')' + u' with u = 0 at the ends of I0."""
    a, b = _check_interval(I0)
    return _fd_operator(fac, a, b, nx)


def _fd_operator(fac: IntegratingFactor, a: float, b: float, nx: int):
    # no interval check: also used for the ill-posed experiment on (-pi, 0)
    x = np.linspace(a, b, nx + 1)
    h = x[1] - x[0]
    xi = x[1:-1]
    fp = fac.epsilon * fac.profile(xi + h / 2)
    fm = fac.epsilon * fac.profile(xi - h / 2)
    main = -(fp + fm) / h**2
    upper = fp[:-1] / h**2 + 1 / (2 * h)
    lower = fm[1:] / h**2 - 1 / (2 * h)
    A = diags([lower, main, upper], [-1, 0, 1], format="csc")
    return x, A


def dirichlet_solve(fac: IntegratingFactor, g, I0, T: float, nt: int = 500, nx: int = 200) -> EvolutionField:
    """Crank-Nicolson solution of d_t u = eps (f u')' + u' on I0 with u = 0 at its ends.

    g is a callable evaluated at the nodes or an array on the nx + 1 nodes.
    """
    if T <= 0 or nt < 1 or nx < 4:
        raise ValueError("need T > 0, nt >= 1 and nx >= 4")
    x, A = dirichlet_operator(fac, I0, nx)
    g0 = np.asarray(g(x) if callable(g) else g, dtype=complex)
    if g0.shape != x.shape:
        raise ValueError(f"initial data must have {x.size} samples")
    dt = T / nt
    eye = diags([np.ones(nx - 1)], [0], format="csc")
    lhs = splu((eye - 0.5 * dt * A).astype(complex).tocsc())
    rhs = (eye + 0.5 * dt * A).tocsr()
    out = np.zeros((nt + 1, x.size), complex)
    out[0] = g0
    out[0, [0, -1]] = 0.0
    u = out[0, 1:-1].copy()
    for k in range(nt):
        u = lhs.solve(rhs @ u)
        out[k + 1, 1:-1] = u
    return EvolutionField(np.linspace(0, T, nt + 1), x, out, nx, getattr(g, "__name__", "g"), {"I0": (x[0], x[-1])})


def convergence_order(fac: IntegratingFactor, g, I0, T: float, nx: int = 50, nt: int = 50, levels: int = 3):
    """Observed order from successive halvings of both h and dt; returns (order, differences).

    u(T) is compared on the coarsest nodes; with three levels the order is
    log2(|u_h - u_{h/2}| / |u_{h/2} - u_{h/4}|).
    """
    sols = []
    for k in range(levels):
        s = 2**k
        fld = dirichlet_solve(fac, g, I0, T, nt * s, nx * s)
        sols.append(fld.values[-1, ::s])
    x = np.linspace(*_check_interval(I0), nx + 1)
    diffs = np.array([np.sqrt(np.trapezoid(np.abs(sols[k] - sols[k + 1]) ** 2, x)) for k in range(levels - 1)])
    orders = np.log2(diffs[:-1] / diffs[1:])
    return float(orders[-1]), diffs


def seam_check(fac: IntegratingFactor, eigs, coeffs, I0, dt: float = 1e-4, nt: int = 10, nx: int = 400, inner=0.3):
    """Matching of time derivatives at the seam t = 0 of the glued solution.

    With g = sum c_k phi_k, the expansion has d_t u(0) = -L g while the
    Dirichlet solution started from g has d_t u^d(0) = L g; gluing u^d in
    reversed time onto u therefore requires d_t u(0) = -d_t u^d(0).  The
    relative L2 mismatch is measured on I0 shrunk by `inner` at both ends,
    away from the boundary layers caused by u^d = 0 there.
    """
    a, b = _check_interval(I0)
    c = np.asarray(coeffs)
    eigs = eigs[: c.size]

    def g(x):
        return sum(ck * e(x) for ck, e in zip(c, eigs))

    fld = dirichlet_solve(fac, g, I0, dt * nt, nt, nx)
    x = fld.grid
    ud_t = (fld.values[1] - fld.values[0]) / (fld.times[1] - fld.times[0])
    us_t = sum(-e.eigenvalue_L * ck * e(x) for ck, e in zip(c, eigs))
    keep = (x > a + inner) & (x < b - inner)
    ref = np.sqrt(np.trapezoid(np.abs(us_t[keep]) ** 2, x[keep]))
    return float(np.sqrt(np.trapezoid(np.abs(us_t[keep] + ud_t[keep]) ** 2, x[keep])) / ref)


# ---------------------------------------------------------------------------
# Fourier decay


@dataclass(frozen=True)
class FourierDecay:
    slope: float
    n: np.ndarray  # modes used in the fit
    magnitude: np.ndarray
    threshold: float

    @property
    def smooth_enough(self) -> bool:
        return self.slope <= self.threshold


def periodic_grid(N: int = 4096) -> np.ndarray:
    return -np.pi + 2 * np.pi * np.arange(N) / N


def fourier_decay_rate(g, window=(8, 128), threshold: float = -4.0, floor: float = 1e-13) -> FourierDecay:
    """Least-squares slope of log E_n against log n for trigonometric coefficients.

    g is sampled on periodic_grid(N) and |g_n| = sqrt(a_n^2 + b_n^2).  The fit
    uses the tail envelope E_n = max_{m >= n} |g_m|, so that vanishing modes
    (e.g. even n for functions symmetric about pi/2) and O(1/N) sampling
    artefacts do not distort the rate.  Values below floor * max|g_n| count as
    round-off; with fewer than three modes left the decay is faster than any
    power and the slope is -inf.  The default threshold -4 is the rate beyond
    which sum n^3 |g_n| converges, i.e. the profile counts as C^3.
    """
    g = np.asarray(g)
    N = g.size
    if N < 4 * window[1]:
        raise ValueError(f"need at least {4 * window[1]} samples")
    mag = 2 * np.abs(np.fft.rfft(g) / N)
    env = np.maximum.accumulate(mag[::-1])[::-1]
    n = np.arange(mag.size)
    sel = (n >= window[0]) & (n <= window[1]) & (env > floor * np.max(mag[1:]))
    if np.count_nonzero(sel) < 3:
        return FourierDecay(-np.inf, n[sel], env[sel], threshold)
    slope = np.polyfit(np.log(n[sel]), np.log(env[sel]), 1)[0]
    return FourierDecay(float(slope), n[sel], env[sel], threshold)


def reconstruction_errors(eigs, g, ns) -> np.ndarray:
    """||g - sum_{k<n} c_k phi_k|| for each n in ns (diagnostic for rough data)."""
    from .spectrum import reconstruction_error

    out = []
    for n in ns:
        c = biorthogonal_coeffs(eigs, g, n, cond_warn=np.inf)
        out.append(reconstruction_error(eigs[:n], g, c))
    return np.array(out)


# ---------------------------------------------------------------------------
# output


def write_field_csv(path, fld: EvolutionField, stride_t: int = 1, stride_x: int = 1) -> Path:
    """Long format t, x, Re u, Im u."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "x", "re_u", "im_u"])
        for i in range(0, fld.times.size, stride_t):
            for j in range(0, fld.grid.size, stride_x):
                u = fld.values[i, j]
                wr.writerow([f"{fld.times[i]:.10g}", f"{fld.grid[j]:.12g}", f"{u.real:.12g}", f"{u.imag:.12g}"])
    return path


def write_summary_json(path, summary: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n")
    return path
