"""Green's kernel, the operators T and T~, and the resolvent at general lambda.

For F with <F, 1> = 0 the periodic solutions of eps (f u')' + u' = F are

    u(x) = int_0^x (1 - psi(x)/psi(y)) F(y) dy + k,

i.e. u = T F + k with the bounded kernel G below.  T~ is T followed by the
projection removing the mean, so that T~ F is the unique solution orthogonal
to constants.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import dblquad

from .quadrature import gauss_panels, graded_breaks, interval_rule, symmetric_rule
from .shooting import RTOL, shoot_recessive, shoot_regular
from .singular_factor import IntegratingFactor, _check_domain


class PeriodicityWarning(UserWarning):
    """<F, 1> != 0, so the solution of ell[u] = F cannot be periodic."""


class NearEigenvalueError(ValueError):
    """lambda is too close to an eigenvalue for the resolvent formula."""


# ---------------------------------------------------------------------------
# kernel


@dataclass(frozen=True, eq=False)
class GreenKernel:
    factor: IntegratingFactor

    def eval(self, x, y):
        """G(x, y) on broadcast arrays; zero outside the two triangles."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        pos = (0 < y) & (y < x)
        neg = (x < y) & (y < 0)
        live = pos | neg
        out = np.zeros(x.shape)
        if np.any(live):
            lp = self.factor.log_psi
            ratio = np.exp(lp(x[live]) - lp(y[live]))
            out[live] = np.where(pos[live], 1.0, -1.0) * (1.0 - ratio)
        return out

    __call__ = eval


def green_eval(k: GreenKernel, x, y):
    """G(x, y) for x, y in (-pi, 0) u (0, pi); ValueError on the singular lines."""
    _check_domain(x)
    _check_domain(y)
    out = k.eval(x, y)
    return float(out) if out.ndim == 0 else out


def green_grid(k: GreenKernel, n: int = 129, margin: float = 1e-3):
    """Tensor grid (X, Y, G) avoiding 0 and +-pi, for surface plots."""
    s = np.linspace(-np.pi + margin, np.pi - margin, n)
    s = s[np.abs(s) > margin / 2]
    X, Y = np.meshgrid(s, s, indexing="ij")
    return X, Y, k.eval(X, Y)


def hs_norm_quad(k: GreenKernel, epsabs: float = 1e-10, epsrel: float = 1e-10) -> float:
    """Hilbert-Schmidt norm of T by adaptive 2-D quadrature of |G|^2.

    psi is even, so the two triangles contribute equally.
    """
    lp = k.factor.log_psi

    def integrand(y, x):
        return (1.0 - np.exp(lp(x) - lp(y))) ** 2

    val, _ = dblquad(integrand, 0.0, np.pi, 0.0, lambda x: x, epsabs=epsabs, epsrel=epsrel)
    return float(np.sqrt(2.0 * val))


# ---------------------------------------------------------------------------
# discrete operators


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Discretised integral operator acting on samples at the nodes.

    For a plain Nystroem rule matrix[i, j] = K(x_i, x_j) * weights[j].
    """

    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    label: str = "T"

    @property
    def n(self) -> int:
        return self.nodes.size

    def apply(self, F):
        """Apply to samples at the nodes, or to a callable evaluated there."""
        vals = F(self.nodes) if callable(F) else np.asarray(F)
        return self.matrix @ vals

    def inner(self, u, v):
        return np.sum(self.weights * u * np.conj(v))

    def weighted(self) -> np.ndarray:
        """W^(1/2) M W^(-1/2) = W^(1/2) K W^(1/2), the L2-faithful matrix."""
        s = np.sqrt(self.weights)
        return s[:, None] * self.matrix / s[None, :]


def nystrom_size(n: int, q: int = 8) -> int:
    """Actual number of nodes used by assemble_T for a requested n."""
    return 4 * q * max(1, int(round(n / (4 * q))))


def _lagrange_basis(q: int, u) -> np.ndarray:
    """Values l_j(u) of the Lagrange basis on q Gauss points, shape u.shape + (q,)."""
    L = np.polynomial.legendre
    g, _ = L.leggauss(q)
    coef = np.linalg.inv(L.legvander(g, q - 1))
    return L.legvander(np.asarray(u), q - 1) @ coef


def _product_half(fac: IntegratingFactor, breaks: np.ndarray, q: int, q_sub: int = 16):
    """Product-integration matrix of F -> int_0^x (1 - psi(x)/psi(y)) F(y) dy on (0, pi)."""
    x, w = gauss_panels(breaks, q)
    lp = fac.log_psi
    lx = lp(x)
    n = x.size
    M = np.zeros((n, n))
    g, gw = np.polynomial.legendre.leggauss(q_sub)
    for p in range(breaks.size - 1):
        a, b = breaks[p], breaks[p + 1]
        sl = slice(p * q, (p + 1) * q)
        xi = x[sl]
        if p:
            M[sl, : p * q] = w[None, : p * q] * (1.0 - np.exp(lx[sl, None] - lx[None, : p * q]))
        # sub-rule on [a, x_i]; on the pi side in tau = -log(pi - t)
        if a >= np.pi / 2:
            ta, tx = -np.log(np.pi - a), -np.log(np.pi - xi)
            tau = 0.5 * (ta + tx)[:, None] + 0.5 * (tx - ta)[:, None] * g
            t = np.pi - np.exp(-tau)
            om = 0.5 * (tx - ta)[:, None] * gw * np.exp(-tau)
        else:
            t = 0.5 * (a + xi)[:, None] + 0.5 * (xi - a)[:, None] * g
            om = 0.5 * (xi - a)[:, None] * gw
        kern = 1.0 - np.exp(lx[sl, None] - lp(t))
        basis = _lagrange_basis(q, 2.0 * (t - a) / (b - a) - 1.0)  # (q, q_sub, q)
        M[sl, sl] = np.einsum("is,isj->ij", om * kern, basis)
    return x, w, M


def assemble_T(k: GreenKernel, n: int, q: int = 8, method: str = "product") -> DiscreteOperator:
    """Discretisation of T on graded Gauss panels over (-pi, 0) u (0, pi).

    method="nystrom" uses matrix[i, j] = G(x_i, y_j) w_j directly.  Because G
    has a derivative jump on the diagonal y = x, that rule is only second
    order.  method="product" (default) keeps the Gauss weights on panels left
    of x_i and, on the panel containing x_i, integrates the exact kernel over
    [a, x_i] against the polynomial interpolant of F (product integration).

    The node count is rounded to a multiple of 4q (see nystrom_size).
    """
    if n < 32:
        raise ValueError("n must be at least 32")
    m = nystrom_size(n, q) // (4 * q)
    if method == "nystrom":
        x, w = symmetric_rule(m, q)
        G = k.eval(x[:, None], x[None, :])
        return DiscreteOperator(x, w, G * w[None, :], "T")
    if method != "product":
        raise ValueError(f"unknown method {method!r}")
    xh, wh, Mh = _product_half(k.factor, graded_breaks(m), q)
    # x < 0: T F(x) = -int_0^{|x|} (1 - psi(|x|)/psi(t)) F(-t) dt
    nh = xh.size
    M = np.zeros((2 * nh, 2 * nh))
    M[nh:, nh:] = Mh
    M[:nh, :nh] = -Mh[::-1, ::-1]
    x = np.concatenate([-xh[::-1], xh])
    w = np.concatenate([wh[::-1], wh])
    return DiscreteOperator(x, w, M, "T")


def project_tilde(Topt: DiscreteOperator) -> DiscreteOperator:
    """T~ = (I - (1/2pi) 1 w^T) T; its range is orthogonal to constants."""
    w = Topt.weights
    mean_row = (w @ Topt.matrix) / w.sum()
    return DiscreteOperator(Topt.nodes, w, Topt.matrix - mean_row[None, :], Topt.label + "~")


def singular_values(D: DiscreteOperator) -> np.ndarray:
    return np.linalg.svd(D.weighted(), compute_uv=False)


@dataclass(frozen=True)
class SchattenSum:
    value: float
    p: float
    truncated: bool  # smallest retained singular value above 1e-12
    n_terms: int

    def __float__(self):
        return self.value


def schatten_sum(svals, p: float, floor: float = 1e-14) -> SchattenSum:
    """(sum s_k^p)^(1/p), flagging possible tail truncation.

    The flag is set when the smallest retained value above the round-off
    floor (floor * s_max) still exceeds 1e-12, i.e. the discrete spectrum
    stops before the singular values have decayed.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    s = np.sort(np.abs(np.asarray(svals, dtype=float)))[::-1]
    if not s.size or s[0] == 0:
        return SchattenSum(0.0, float(p), False, int(s.size))
    val = float(np.sum(s**p) ** (1.0 / p))
    resolved = s[s > floor * s[0]]
    truncated = bool(resolved[-1] > 1e-12)
    return SchattenSum(val, float(p), truncated, int(s.size))


def decay_slope(svals, lo: int = 10, hi: int = 100) -> float:
    """Least-squares slope of log s_n against log n over 1-based indices lo..hi."""
    s = np.asarray(svals, dtype=float)
    idx = np.arange(lo, min(hi, s.size) + 1)
    return float(np.polyfit(np.log(idx), np.log(s[idx - 1]), 1)[0])


# ---------------------------------------------------------------------------
# inhomogeneous solve


def _mean_defect(F: Callable) -> tuple[float, float]:
    x, w = symmetric_rule(32, 16)
    v = F(x)
    return float(np.sum(w * v)), float(np.sqrt(np.sum(w * np.abs(v) ** 2)))


def _per_point_rule(a, b, m: int, q: int):
    """Graded rules on [a_i, b_i] for arrays a, b; returns nodes, weights of shape (M, nq)."""
    x, w = interval_rule(0.0, 1.0, m, q)
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[:, None]
    return a + (b - a) * x, (b - a) * w


def _volterra(fac: IntegratingFactor, F: Callable, xs, m: int, q: int):
    """int_0^x (1 - psi(x)/psi(y)) F(y) dy for nonzero xs.

    For |x| <= pi/2 a graded rule on [0, x] is used.  Beyond pi/2 the kernel
    has a layer of width pi - |x| next to y = x, so [pi/2, |x|] is integrated
    in tau = -log(pi - y), where it becomes a smooth exponential.
    """
    lp = fac.log_psi
    sgn = np.sign(xs)
    a = np.abs(xs)
    lpx = lp(a)[:, None]
    near = a <= np.pi / 2
    out = np.zeros(a.shape, complex)

    def Fs(y, sg):
        return F(sg[:, None] * y)

    if np.any(near):
        an, sn = a[near], sgn[near]
        y, wq = _per_point_rule(np.zeros_like(an), an, m, q)
        out[near] = np.sum(wq * (1.0 - np.exp(lpx[near] - lp(y))) * Fs(y, sn), axis=1)
    far = ~near
    if np.any(far):
        af, sf = a[far], sgn[far]
        y, wq = _per_point_rule(np.zeros_like(af), np.full(af.shape, np.pi / 2), m, q)
        body = np.sum(wq * (1.0 - np.exp(lpx[far] - lp(y))) * Fs(y, sf), axis=1)
        with np.errstate(divide="ignore"):
            t_end = -np.log(np.pi - af)
        # pi - exp(-36) already rounds to pi; what is left beyond is below 1e-15
        t_end = np.minimum(t_end, 36.0)
        tau, wt = _per_point_rule(np.full(af.shape, -np.log(np.pi / 2)), t_end, m, q)
        y = np.pi - np.exp(-tau)
        jac = np.exp(-tau)
        tail = np.sum(wt * jac * (1.0 - np.exp(lpx[far] - lp(y))) * Fs(y, sf), axis=1)
        out[far] = body + tail
    # x < 0: int_0^x = -int_0^{|x|} with F reflected
    return sgn * out


def solve_inhomogeneous(
    fac: IntegratingFactor, F: Callable, x, k: complex = 0.0, m: int = 16, q: int = 16, check: bool = True
):
    """u(x) = int_0^x (1 - psi(x)/psi(y)) F(y) dy + k at the points x in [-pi, pi].

    F is a callable.  At x = +-pi the kernel reduces to 1 (psi vanishes there).
    A PeriodicityWarning is issued when <F, 1> is not zero, since then
    u(pi-) - u(-pi+) = <F, 1>.
    """
    if check:
        mean, norm = _mean_defect(F)
        if abs(mean) > 1e-10 * max(norm, 1e-300):
            warnings.warn(
                f"<F, 1> = {mean:.3g} != 0: the solution is not periodic "
                f"(u(pi-) - u(-pi+) = <F, 1>)",
                PeriodicityWarning,
                stacklevel=2,
            )
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if np.any(np.abs(flat) > np.pi):
        raise ValueError("x must lie in [-pi, pi]")
    out = np.full(flat.shape, complex(k))
    live = flat != 0
    if np.any(live):
        out[live] += _volterra(fac, F, flat[live], m, q)
    if np.all(np.imag(out) == 0):
        out = out.real
    return out.reshape(x.shape) if x.ndim else out[0]


def apply_tilde(fac: IntegratingFactor, F: Callable, x, **kw):
    """T~ F at the points x: the solution of ell[u] = F with zero mean."""
    xq, wq = symmetric_rule(24, 16)
    mean = np.sum(wq * solve_inhomogeneous(fac, F, xq, check=False, **kw)) / (2 * np.pi)
    return solve_inhomogeneous(fac, F, x, **kw) - mean


# ---------------------------------------------------------------------------
# resolvent


class LambdaSolutions:
    """phi(x; lam) and the Wronskian-normalised psi(x; lam) on both half-intervals.

    phi is regular at 0 with phi(0) = 1; psi vanishes at +-pi and satisfies
    p (phi psi' - phi' psi) = 1 on each half.  The left half is obtained from
    the right one through u(x; lam) -> u(-x; -lam).
    """

    def __init__(self, fac: IntegratingFactor, lam: complex, rtol: float = RTOL):
        self.fac = fac
        self.lam = complex(lam)
        prof, eps = fac.profile, fac.epsilon
        pair = np.array([self.lam, -self.lam])
        self._phi = shoot_regular(prof, eps, pair, dense=True, rtol=rtol)
        self._psi = shoot_recessive(prof, eps, pair, dense=True, rtol=rtol)
        xm = np.array([np.pi / 2])
        ph = self._phi.state(xm)[:, :, 0]
        ps = self._psi.state(xm)[:, :, 0]
        # p (phi psi' - phi' psi) = (w / eps) (phi v_psi - v_phi psi)
        self._wronskian = (fac.w(xm[0]) / eps) * (ph[0] * ps[1] - ph[1] * ps[0])
        self.phi_pi = complex(self._phi.at_pi[0])
        self.phi_minus_pi = complex(self._phi.at_pi[1])

    def _half(self, shot, x, j, norm):
        # columns: j = 0 right half (lam), j = 1 left half (-lam) at |x|
        st = shot.state(np.abs(x))[:, j, :] / norm
        # v = eps f u' is even under the reflection (f and d/dx both flip sign)
        return st[0], st[1]

    def phi(self, x):
        """(phi, eps f phi') at x in (-pi, pi)."""
        return self._eval(self._phi, x, (1.0, 1.0))

    def psi(self, x):
        """(psi, eps f psi') at x in (-pi, pi)."""
        return self._eval(self._psi, x, tuple(self._wronskian))

    def _eval(self, shot, x, norms):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u = np.empty(x.shape, complex)
        v = np.empty(x.shape, complex)
        for j, mask in enumerate((x > 0, x < 0)):
            if np.any(mask):
                u[mask], v[mask] = self._half(shot, x[mask], j, norms[j])
        u[x == 0] = np.nan
        v[x == 0] = np.nan
        return u, v

    def wronskian(self, x):
        """p (phi psi' - phi' psi) at x; equals 1 up to integration error."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u1, v1 = self.phi(x)
        u2, v2 = self.psi(x)
        return (self.fac.w(x) / self.fac.epsilon) * (u1 * v2 - v1 * u2)

    @property
    def denominator(self) -> complex:
        return self.phi_pi - self.phi_minus_pi


def _resolvent_pieces(sols: LambdaSolutions, F: Callable, xs, m: int, q: int):
    """u and its quasi-derivative eps f u' at the points xs (none equal to 0 or +-pi)."""
    fac = sols.fac
    eps = fac.epsilon

    def r(y):
        return fac.w(y) / eps

    def quad_over(a, b, g):
        y, wq = _per_point_rule(a, b, m, q)
        return np.sum(wq * g(y.ravel()).reshape(y.shape), axis=1)

    def phi_rF(y):
        return sols.phi(y)[0] * r(y) * F(y)

    def psi_rF(y):
        return sols.psi(y)[0] * r(y) * F(y)

    # J = int_{-pi}^{pi} psi r F and B(0) = int_0^pi psi r F
    B0 = quad_over(np.zeros(1), np.full(1, np.pi), psi_rF)[0]
    J = B0 + quad_over(np.full(1, -np.pi), np.zeros(1), psi_rF)[0]
    C = sols.phi_minus_pi * J / sols.denominator

    A = quad_over(np.zeros_like(xs), xs, phi_rF)  # int_0^x phi r F
    B = np.empty(xs.shape, complex)
    right = xs > 0
    if np.any(right):
        B[right] = quad_over(xs[right], np.full(right.sum(), np.pi), psi_rF)
    if np.any(~right):
        B[~right] = B0 + quad_over(xs[~right], np.zeros((~right).sum()), psi_rF)
    phi, vphi = sols.phi(xs)
    psi, vpsi = sols.psi(xs)
    u = phi * (B + C) + psi * A
    v = vphi * (B + C) + vpsi * A
    return u, v, C, B0, J


def resolvent_at(
    fac: IntegratingFactor,
    lam: complex,
    F: Callable,
    x,
    m: int = 12,
    q: int = 16,
    pole_tol: float = 1e-8,
    sols: LambdaSolutions | None = None,
    return_derivative: bool = False,
):
    """Solution of i ell[u] - lam u = i F that is periodic on (-pi, pi).

    Built from phi(x; lam) and psi(x; lam):

        u = phi int_x^pi psi r F + psi int_0^x phi r F
            + phi(x) phi(-pi) / (phi(pi) - phi(-pi)) int_{-pi}^{pi} psi r F,

    with r = w/eps.  Raises NearEigenvalueError when
    |phi(pi) - phi(-pi)| < pole_tol |phi(pi)|.
    """
    sols = sols or LambdaSolutions(fac, lam)
    if abs(sols.denominator) < pole_tol * abs(sols.phi_pi):
        raise NearEigenvalueError(
            f"lambda = {lam} is within tolerance of an eigenvalue: |phi(pi) - phi(-pi)| = "
            f"{abs(sols.denominator):.3g}, |phi(pi)| = {abs(sols.phi_pi):.3g}"
        )
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if np.any(np.abs(flat) > np.pi):
        raise ValueError("x must lie in [-pi, pi]")
    inner = (flat != 0) & (np.abs(flat) < np.pi)
    u = np.empty(flat.shape, complex)
    v = np.zeros(flat.shape, complex)
    if np.any(inner):
        u[inner], v[inner], C, B0, J = _resolvent_pieces(sols, F, flat[inner], m, q)
    else:
        _, _, C, B0, J = _resolvent_pieces(sols, F, np.array([1.0]), m, q)
    # endpoint limits: psi A -> 0 at 0 and +-pi, phi(0) = 1, int_{-pi}^{pi} psi r F = J
    u[flat == np.pi] = sols.phi_pi * C
    u[flat == -np.pi] = sols.phi_minus_pi * (J + C)
    u[flat == 0] = B0 + C
    shape = x.shape
    if return_derivative:
        return u.reshape(shape), v.reshape(shape)
    return u.reshape(shape) if x.ndim else u[0]


def resolvent_residual(fac: IntegratingFactor, lam: complex, F: Callable, x=None, h: float = 1e-4, **kw) -> float:
    """Relative L2 residual of i ell[u] - lam u - i F on interior points.

    ell[u] is evaluated in quasi-derivative form, ell[u] = (eps f u')' + u',
    with eps f u' from the representation and its x-derivative by a 4th-order
    central difference.
    """
    if x is None:
        s = np.linspace(0.05, np.pi - 0.05, 120)
        x = np.concatenate([-s[::-1], s])
    x = np.asarray(x, dtype=float)
    sols = kw.pop("sols", None) or LambdaSolutions(fac, lam)
    offsets = np.array([-2, -1, 0, 1, 2]) * h
    pts = (x[:, None] + offsets[None, :]).ravel()
    u, v = resolvent_at(fac, lam, F, pts, sols=sols, return_derivative=True, **kw)
    u = u.reshape(x.size, 5)
    v = v.reshape(x.size, 5)
    dv = (v[:, 0] - 8 * v[:, 1] + 8 * v[:, 3] - v[:, 4]) / (12 * h)
    u0, v0 = u[:, 2], v[:, 2]
    ell = dv + v0 / (fac.epsilon * fac.profile(x))
    res = 1j * ell - lam * u0 - 1j * F(x)
    return float(np.linalg.norm(res) / np.linalg.norm(F(x)))


# ---------------------------------------------------------------------------
# output


def write_green_csv(path, k: GreenKernel, n: int = 129) -> Path:
    X, Y, G = green_grid(k, n)
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "y", "G"])
        for row in zip(X.ravel(), Y.ravel(), G.ravel()):
            wr.writerow([f"{v:.12g}" for v in row])
    return path


def write_singular_values_csv(path, svals) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "s_n"])
        for i, s in enumerate(svals, 1):
            wr.writerow([i, f"{s:.15g}"])
    return path
