"""Dyadic Schatten estimates for triangular separable kernels, and the split of T.

A Volterra operator S u(x) = int_0^x a(x) b(y) u(y) dy on (0, pi) is cut
into dyadic blocks: at level j the square I_{2k,j} x I_{2k-1,j} (x-cell just
right of the y-cell) carries the rank-one piece a chi_{2k,j} (x) b chi_{2k-1,j}.
The blocks of one level have disjoint supports in both variables, so their
norms alpha_{kj} = ||a||_{I_{2k,j}} ||b||_{I_{2k-1,j}} are the singular values of
that level and

    ||S||_p <= sum_j (sum_k alpha_{kj}^p)^(1/p).

The second half of the module splits the Green operator T into six pieces on
sub-triangles and a rectangle, with the factorisations S o R used to bound
their Schatten norms.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import roots_jacobi

from .quadrature import gauss_panels, graded_breaks
from .resolvent import DiscreteOperator, GreenKernel

CONVERGENCE_RATIO = 0.9


class DyadicQuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class SeparableKernel:
    """v(x, y) = a(x) b(y) on 0 < y < x < pi, with blow-up exponents alpha (at 0) and beta (at pi)."""

    a: Callable
    b: Callable
    alpha: float = 0.0
    beta: float = 0.0

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.zeros(x.shape)
        m = (0 < y) & (y < x) & (x < np.pi)
        out[m] = self.a(x[m]) * self.b(y[m])
        return out

    @property
    def threshold(self) -> float:
        """r(alpha, beta) = max(1/(1 - alpha), 1/(1 - beta))."""
        return max(1.0 / (1.0 - self.alpha), 1.0 / (1.0 - self.beta))


def power_kernel(alpha: float) -> SeparableKernel:
    """a(x) = x^(-alpha), b = 1."""
    return SeparableKernel(lambda x: np.asarray(x, float) ** (-alpha), np.ones_like, alpha=alpha)


@dataclass(frozen=True, eq=False)
class DyadicScheme:
    """alpha_{kj} for j = 1..jmax; coefficients[j - 1] has 2^(j-1) entries."""

    jmax: int
    coefficients: list = field(default_factory=list)

    def level(self, j: int) -> np.ndarray:
        return self.coefficients[j - 1]

    @staticmethod
    def intervals(j: int) -> np.ndarray:
        """Left and right ends of I_{i,j}, i = 1..2^j, as a (2^j, 2) array."""
        e = np.arange(2**j + 1) * np.pi / 2**j
        return np.column_stack([e[:-1], e[1:]])

    def level_norms(self, p: float) -> np.ndarray:
        return np.array([np.sum(c**p) ** (1.0 / p) for c in self.coefficients])


def _cell_integrals(g: Callable, edges: np.ndarray, chunk: int = 1 << 15) -> np.ndarray:
    """int |g|^2 over consecutive cells, Gauss 20 vs 40 with adaptive fallback."""
    x20, w20 = np.polynomial.legendre.leggauss(20)
    x40, w40 = np.polynomial.legendre.leggauss(40)
    lo_all, hi_all = edges[:-1], edges[1:]
    out = np.empty(lo_all.size)
    for s in range(0, lo_all.size, chunk):
        lo, hi = lo_all[s : s + chunk, None], hi_all[s : s + chunk, None]
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        with np.errstate(all="ignore"):
            g20 = np.sum(w20 * np.abs(g(mid + half * x20)) ** 2, axis=1) * half[:, 0]
            g40 = np.sum(w40 * np.abs(g(mid + half * x40)) ** 2, axis=1) * half[:, 0]
        bad = ~np.isfinite(g40) | (np.abs(g40 - g20) > 1e-10 * np.abs(g40) + 1e-300)
        for i in np.flatnonzero(bad):
            a, b = float(lo[i, 0]), float(hi[i, 0])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", IntegrationWarning)
                res = quad(
                    lambda t: abs(g(np.array([t]))[0]) ** 2, a, b, limit=200, epsabs=0.0, epsrel=1e-10, full_output=1
                )
            val, err = res[0], res[1]
            failed = len(res) > 3  # quad only appends a message when it flags a problem
            if failed or not np.isfinite(val) or val < 0 or err > 1e-6 * max(abs(val), 1e-300):
                raise DyadicQuadratureError(
                    f"|g|^2 is not integrable on [{a:.3g}, {b:.3g}] (estimate {val:.3g} +- {err:.2g})"
                )
            g40[i] = val
        out[s : s + chunk] = g40
    return out


def dyadic_coefficients(k: SeparableKernel, jmax: int) -> DyadicScheme:
    """alpha_{kj} = ||a||_{L2(I_{2k,j})} ||b||_{L2(I_{2k-1,j})} for all levels up to jmax.

    Cell integrals are computed once on the finest level and summed pairwise
    for the coarser ones.
    """
    jmax = int(jmax)
    if not 1 <= jmax <= 20:
        raise ValueError("jmax must lie in 1..20")
    edges = np.arange(2**jmax + 1) * np.pi / 2**jmax
    A = _cell_integrals(k.a, edges)
    B = _cell_integrals(k.b, edges)
    coeffs = [None] * jmax
    for j in range(jmax, 0, -1):
        # x-cells I_{2k,j} are the odd (0-based) cells, y-cells I_{2k-1,j} the even ones
        coeffs[j - 1] = np.sqrt(A[1::2] * B[0::2])
        A = A[0::2] + A[1::2]
        B = B[0::2] + B[1::2]
    return DyadicScheme(jmax, coeffs)


def dyadic_blocks(x: float, y: float, jmax: int = 60) -> list[tuple[int, int]]:
    """All (k, j), j <= jmax, whose block I_{2k,j} x I_{2k-1,j} contains (x, y)."""
    out = []
    for j in range(1, jmax + 1):
        ix = int(np.floor(x * 2**j / np.pi)) + 1
        iy = int(np.floor(y * 2**j / np.pi)) + 1
        if ix % 2 == 0 and iy == ix - 1:
            out.append((ix // 2, j))
    return out


@dataclass(frozen=True)
class DyadicBound:
    value: float  # sum_{j <= jmax} ||S_j||_p
    p: float
    converged: bool
    ratio: float  # ||S_jmax||_p / ||S_{jmax-1}||_p
    tail: float  # geometric estimate of the levels beyond jmax (inf unless ratio < 1)
    levels: np.ndarray

    @property
    def total(self) -> float:
        """value + tail, the estimate of the full dyadic sum."""
        return self.value + self.tail

    def __float__(self):
        return self.value


def dyadic_bound(s: DyadicScheme, p: float) -> DyadicBound:
    """Partial dyadic sum for ||S||_p and a convergence verdict at depth jmax.

    The series is declared convergent when the ratio of the last two level
    norms (the increments of the partial sums) is below 0.9.  A single level
    cannot be judged and is reported as not converged.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    lv = s.level_norms(p)
    value = float(np.sum(lv))
    if lv.size < 2 or lv[-2] == 0:
        ratio = np.nan if lv.size < 2 else 0.0
        return DyadicBound(value, p, bool(lv.size >= 2), float(ratio), 0.0 if lv.size >= 2 else np.inf, lv)
    ratio = float(lv[-1] / lv[-2])
    tail = lv[-1] * ratio / (1 - ratio) if ratio < 1 else np.inf
    return DyadicBound(value, p, ratio < CONVERGENCE_RATIO, ratio, float(tail), lv)


def discretize_separable(k: SeparableKernel, m: int = 32, q: int = 8) -> DiscreteOperator:
    """Nystroem matrix of S on a graded Gauss rule over (0, pi)."""
    x, w = gauss_panels(graded_breaks(m), q)
    K = k(x[:, None], x[None, :])
    return DiscreteOperator(x, w, K * w[None, :], "S")


def write_levels_csv(path, s: DyadicScheme, p: float) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["j", "sum_k_alpha_p", "level_norm"])
        for j, c in enumerate(s.coefficients, 1):
            sp = float(np.sum(c**p))
            wr.writerow([j, f"{sp:.15g}", f"{sp ** (1 / p):.15g}"])
    return path


# ---------------------------------------------------------------------------
# splitting of T


@dataclass(frozen=True, eq=False)
class TPiece:
    """One of the six pieces of T = sum_{s = +-} (T^s_1 + T^s_2 + T^s_3).

    `region(x, y)` is the indicator of the piece's support.  Pieces 1 and 3
    carry a factorisation T = S o R or T = R o S with S separable (see
    SeparableKernel) and R given by its kernel `r_kernel(z, y)`; piece 2 is
    rank two, T = sum_i |u_i><v_i|.
    """

    name: str
    sign: int
    index: int
    region: Callable
    G: GreenKernel
    S: SeparableKernel | None = None
    r_kernel: Callable | None = None
    rank_terms: tuple = ()
    exponent: float = 0.0

    def kernel(self, x, y):
        return self.G.eval(x, y) * self.region(np.asarray(x, float), np.asarray(y, float))

    def matrix(self, D: DiscreteOperator) -> np.ndarray:
        """Masked Nystroem matrix of the piece on the nodes of D."""
        x = D.nodes
        return self.kernel(x[:, None], x[None, :]) * D.weights[None, :]

    def apply_factored(self, u: Callable, x, n_quad: int = 48) -> np.ndarray:
        """Evaluate the piece on u through its factorisation (independent of G)."""
        x = np.asarray(x, float)
        s = self.sign
        xr = s * x  # reflect the minus pieces onto (0, pi)
        ur = (lambda y: u(s * y)) if s < 0 else u
        out = np.zeros(x.shape)
        if self.index == 2:
            for (uf, vf, lo, hi) in self.rank_terms:
                yq, wq = gauss_panels(graded_breaks(4, 2.0, lo, hi), 16)
                out += uf(xr) * np.sum(wq * vf(yq) * ur(yq))
            return s * out * (xr >= np.pi / 2)
        g, gw = np.polynomial.legendre.leggauss(n_quad)
        for i, xi in enumerate(xr):
            out[i] = self._factored_point(ur, xi, g, gw)
        return s * out

    def _factored_point(self, u, xi, g, gw):
        fac = self.G.factor
        if self.index == 1:
            if not 0 < xi < np.pi / 2:
                return 0.0
            # S_{1a} R_{1a} u (x) = int_0^x z^-a [z^a int_0^z K1(z, y) u(y) dy] dz
            zq, zw = gauss_panels(graded_breaks(6, 2.0, 0.0, xi), 16)
            inner = np.empty(zq.size)
            for i, z in enumerate(zq):
                yq, yw = gauss_panels(graded_breaks(4, 2.0, 0.0, z), 12)
                inner[i] = np.sum(yw * self.r_kernel(z, yq) * u(yq))
            return float(np.sum(zw * self.S.b(zq) * inner))
        if not np.pi / 2 < xi < np.pi:
            return 0.0
        # R_{3b} S_{3b} u (x) = int_{pi/2}^x r(x, z) (pi - z)^-b int_{pi/2}^z u dz, in tau = -log(pi - z)
        t0, t1 = -np.log(np.pi / 2), -np.log(np.pi - xi)
        tq, tw = gauss_panels(np.linspace(t0, t1, 9), 16)
        zq = np.pi - np.exp(-tq)
        jac = np.exp(-tq)
        Su = np.empty(zq.size)
        for i, z in enumerate(zq):
            yq, yw = gauss_panels(graded_breaks(2, 1.0, np.pi / 2, z), 12)
            Su[i] = self.S.a(z) * np.sum(yw * u(yq))
        return float(np.sum(tw * jac * self.r_kernel(xi, zq) * Su))


def _region(sign: int, index: int):
    h = np.pi / 2

    def reg(x, y):
        x, y = sign * np.asarray(x, float), sign * np.asarray(y, float)
        if index == 1:
            m = (0 < y) & (y < x) & (x < h)
        elif index == 2:
            m = (h <= x) & (x < np.pi) & (0 < y) & (y < h)
        else:
            m = (h <= y) & (y < x) & (x < np.pi)
        return m.astype(float)

    return reg


def split_T(k: GreenKernel, alpha: float = 0.05, beta: float = 0.05) -> dict[str, TPiece]:
    """Six pieces of T on the parts of {0 < +-y < +-x < +-pi}.

    With h = pi/2 the plus pieces live on
        1: 0 < y < x < h,   2: h <= x < pi, 0 < y < h,   3: h <= y < x < pi
    and the minus pieces on the reflections.  On piece 1,
    G(x, y) = int_y^x K1(z, y) dz with K1 = dG/dx = -psi'(z)/psi(y), giving
    T1 = S_{1a} R_{1a} with S_{1a} g(x) = int_0^x z^-a g(z) dz.  On piece 3,
    G(x, y) = -int_y^x K3(x, z) dz with K3 = dG/dy = psi(x) psi'(z)/psi(z)^2,
    giving T3 = R_{3b} S_{3b} with S_{3b} u(z) = (pi - z)^-b int_h^z u.
    Piece 2 is 1 (x) 1_{(0,h)} - psi (x) w 1_{(0,h)}: rank two.
    """
    fac = k.factor
    eps = fac.epsilon
    lp = fac.log_psi
    h = np.pi / 2

    def r1(z, y):
        # z^a K1(z, y) 1(y < z < h);  -psi'(z) = 1/(eps p(z)), so K1 = w(y)/(eps p(z))
        z, y = np.broadcast_arrays(np.asarray(z, float), np.asarray(y, float))
        m = (0 < y) & (y < z) & (z < h)
        out = np.zeros(z.shape)
        out[m] = z[m] ** alpha * np.exp(lp(z[m]) - lp(y[m])) / (eps * fac.profile(z[m]))
        return out

    def r3(x, z):
        # -K3(x, z) (pi - z)^b 1(h < z < x);  K3 = psi(x) psi'(z)/psi(z)^2 = -psi(x) w(z)/(eps f(z))
        x, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float))
        m = (h < z) & (z < x) & (x < np.pi)
        out = np.zeros(x.shape)
        out[m] = (np.pi - z[m]) ** beta * np.exp(lp(x[m]) - lp(z[m])) / (eps * fac.profile(z[m]))
        return out

    S1 = SeparableKernel(lambda x: (np.asarray(x) < h).astype(float), lambda z: np.asarray(z, float) ** (-alpha), alpha=alpha)
    S3 = SeparableKernel(
        lambda z: np.where(np.asarray(z) > h, (np.pi - np.asarray(z, float)) ** (-beta), 0.0),
        lambda y: (np.asarray(y) > h).astype(float),
        beta=beta,
    )
    rank = (
        (np.ones_like, np.ones_like, 0.0, h),
        (lambda x: -fac.psi(x), fac.w, 0.0, h),
    )
    pieces = {}
    for sign, tag in ((1, "+"), (-1, "-")):
        pieces[f"T{tag}1"] = TPiece(f"T{tag}1", sign, 1, _region(sign, 1), k, S1, r1, exponent=alpha)
        pieces[f"T{tag}2"] = TPiece(f"T{tag}2", sign, 2, _region(sign, 2), k, rank_terms=rank)
        pieces[f"T{tag}3"] = TPiece(f"T{tag}3", sign, 3, _region(sign, 3), k, S3, r3, exponent=beta)
    return pieces


def reassembly_error(k: GreenKernel, n: int = 256) -> float:
    """max |sum of the six masked piece matrices - Nystroem matrix of T|."""
    from .resolvent import assemble_T

    D = assemble_T(k, n, method="nystrom")
    total = sum(pc.matrix(D) for pc in split_T(k).values())
    return float(np.max(np.abs(total - D.matrix)))


def _jacobi01(n: int, left: float, right: float):
    """Nodes and weights on (0, 1) for the weight t^left (1 - t)^right."""
    x, w = roots_jacobi(n, right, left)
    return 0.5 * (1 + x), w * 0.5 ** (1 + left + right)


def _r_hs_squared(piece: TPiece, n: int) -> float:
    fac = piece.G.factor
    eps, lp, f = fac.epsilon, fac.log_psi, fac.profile
    a = piece.exponent
    e2 = 2.0 * fac.exponent
    h = np.pi / 2
    if piece.index == 1:
        # int_0^h z^{2a} / (eps f(z))^2 int_0^z (psi(z)/psi(y))^2 dy dz; the ratio is ~ (y/z)^{2/(eps c)}
        u, uw = _jacobi01(n, 2 * a - 1, 0.0)
        t, tw = _jacobi01(n, e2, 0.0)
        z = h * u
        ratio = np.exp(2 * (lp(z)[:, None] - lp(z[:, None] * t[None, :]))) / t[None, :] ** e2
        inner = z * (ratio @ tw)
        smooth = z * inner / (eps * f(z)) ** 2  # integrand / z^(2a - 1)
        return float(h ** (2 * a) * np.sum(uw * smooth))
    # int_h^pi (pi - z)^{2b} / (eps f(z))^2 int_z^pi (psi(x)/psi(z))^2 dx dz
    u, uw = _jacobi01(n, 0.0, 2 * a - 1)
    t, tw = _jacobi01(n, 0.0, e2)
    z = h + h * u
    sz = np.pi - z
    x = z[:, None] + sz[:, None] * t[None, :]
    ratio = np.exp(2 * (lp(x) - lp(z)[:, None])) / (1 - t[None, :]) ** e2
    inner = sz * (ratio @ tw)
    smooth = sz * inner / (eps * f(z)) ** 2
    return float(h ** (2 * a) * np.sum(uw * smooth))


def r_hs_norm(piece: TPiece, n: int = 64, rtol: float = 1e-6) -> float:
    """Hilbert-Schmidt norm of the R factor of piece 1 or 3.

    Nested Gauss-Jacobi rules absorb the algebraic behaviour at the singular
    corner: the outer integrand is ~ d^(2 exponent - 1) in the distance d to
    it.  The result is checked against a rule of twice the order.
    """
    if piece.index == 2:
        raise ValueError("piece 2 is rank two and has no R factor")
    if not piece.exponent > 0:
        return np.inf
    v1, v2 = _r_hs_squared(piece, n), _r_hs_squared(piece, 2 * n)
    if not abs(v1 - v2) <= rtol * abs(v2):
        raise DyadicQuadratureError(f"R Hilbert-Schmidt quadrature not converged: {v1:.10g} vs {v2:.10g}")
    return float(np.sqrt(v2))
