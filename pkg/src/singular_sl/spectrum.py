"""Eigenvalues of L = eps (f u')' + u' through the characteristic function rho.

phi(x; lam) denotes the solution of i ell[phi] = lam phi with phi(0) = 1.
Since ell has real coefficients, conj phi(x; lam) = phi(x; -conj lam), and the
reflection x -> -x gives phi(-x; lam) = phi(x; -lam).  A periodic eigenfunction
exists iff phi(pi; lam) = phi(-pi; lam) = phi(pi; -lam).  Writing lam = -i z^2,

    rho(z) = phi(pi; -i z^2) / phi(pi; i z^2),

and eigenvalues correspond to rho(z) = 1.  On the ray z = r e^{i pi/4} one has
lam = r^2 > 0, |rho| = 1, and the unwrapped phase Theta(r) of rho decreases
from 0; the m-th eigenvalue pair sits at Theta(r_m) = -2 pi m, with
L-eigenvalue -i r_m^2 (eigenfunction phi(x; r_m^2)) and its conjugate
+i r_m^2 (eigenfunction conj phi).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .quadrature import symmetric_rule
from .shooting import X0, HalfShot, phi_at_pi, shoot_left_direct, shoot_regular
from .singular_factor import IntegratingFactor

LAMBDA_MAX = 400.0
RAY = np.exp(1j * np.pi / 4)


class PoleError(ValueError):
    """rho evaluated too close to a pole (a zero of phi(pi; i z^2))."""


class BracketError(RuntimeError):
    """An eigenvalue or alpha root could not be bracketed within the scan cap."""


class ResidualGateError(RuntimeError):
    """A computed eigenfunction failed its periodicity or residual gate."""


class IllConditionedWarning(UserWarning):
    pass


class MissedRootWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# shooting


@dataclass(frozen=True, eq=False)
class ShootingSolution:
    """phi(x; lam) on (-pi, pi) from shots at lam (right half) and -lam (left half)."""

    lam: complex
    start_x: float
    phi_pi: complex
    phi_minus_pi: complex
    shot: HalfShot  # columns [lam, -lam]
    eps: float

    def state(self, x):
        """(phi, eps f phi') at the points x; v is even under the reflection."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u = np.empty(x.shape, complex)
        v = np.empty(x.shape, complex)
        for j, m in enumerate((x >= 0, x < 0)):
            if np.any(m):
                st = self.shot.state(np.maximum(np.abs(x[m]), 1e-300))
                u[m], v[m] = st[0, j], st[1, j]
        return u, v

    def __call__(self, x):
        return self.state(x)[0]

    def series_defect(self) -> float:
        """|phi(start_x) - (1 + a1 start_x)| from the dense output at the launch point."""
        a1 = -1j * self.lam / (1 + self.eps * self.shot.profile.c)
        u = self.shot.sol(self.shot.t_span[0])[0]
        return float(abs(u - (1 + a1 * self.start_x)))

    def table(self, n: int = 401, margin: float = 1e-6) -> np.ndarray:
        """Columns x, Re phi, Im phi, Re v, Im v on a uniform grid of (-pi, pi)."""
        x = np.linspace(-np.pi + margin, np.pi - margin, n)
        u, v = self.state(x)
        return np.column_stack([x, u.real, u.imag, v.real, v.imag])


def _check_lambda(lam, lam_max):
    if np.max(np.abs(lam)) > lam_max:
        raise ValueError(f"|lambda| = {np.max(np.abs(lam)):.4g} exceeds lambda_max = {lam_max:g}")


def shoot_phi(
    fac: IntegratingFactor, lam: complex, lam_max: float = LAMBDA_MAX, mirror: str = "identity"
) -> ShootingSolution:
    """Shoot phi(x; lam) from the series start at x0 = 1e-6 to both ends.

    mirror="identity" gets the left half from phi(-x; lam) = phi(x; -lam) (a
    second right-half shot at -lam); mirror="launch" also integrates directly
    toward -pi in the original variable and uses that value for phi(-pi).
    """
    lam = complex(lam)
    _check_lambda(lam, lam_max)
    prof, eps = fac.profile, fac.epsilon
    try:
        shot = shoot_regular(prof, eps, np.array([lam, -lam]), dense=True)
    except RuntimeError as exc:  # step-size collapse in the integrator
        raise RuntimeError(f"shooting failed near the endpoints for lambda={lam}: {exc}") from exc
    phi_pi, phi_mpi = shot.at_pi
    if mirror == "launch":
        phi_mpi = shoot_left_direct(prof, eps, lam)
    elif mirror != "identity":
        raise ValueError("mirror must be 'identity' or 'launch'")
    return ShootingSolution(lam, X0, complex(phi_pi), complex(phi_mpi), shot, eps)


def rho(fac: IntegratingFactor, z, pole_tol: float = 1e-12):
    """rho(z) = phi(pi; -i z^2) / phi(pi; i z^2) for scalar or array z."""
    z = np.asarray(z, dtype=complex)
    zz = z.ravel() ** 2
    vals = phi_at_pi(fac.profile, fac.epsilon, np.concatenate([-1j * zz, 1j * zz]))
    num, den = vals[: zz.size], vals[zz.size :]
    if np.any(np.abs(den) < pole_tol * np.maximum(1.0, np.abs(num))):
        raise PoleError(f"rho has a pole near z = {z.ravel()[np.argmin(np.abs(den))]}")
    out = (num / den).reshape(z.shape)
    return complex(out) if out.ndim == 0 else out


def _mu(fac: IntegratingFactor, r):
    return rho(fac, np.asarray(r, float) * RAY)


# ---------------------------------------------------------------------------
# phase


@dataclass(frozen=True)
class PhaseTrace:
    r: np.ndarray
    theta: np.ndarray
    mu: np.ndarray

    def at(self, r: float) -> float:
        return float(np.interp(r, self.r, self.theta))


def _local_slope(fac: IntegratingFactor, r, h: float = 1e-4):
    r = np.asarray(r, float)
    m = _mu(fac, np.concatenate([r - h, r + h]))
    return np.angle(m[r.size :] / m[: r.size]) / (2 * h)


def theta_trace(fac: IntegratingFactor, r_max: float, dr: float = 0.05, max_jump: float = np.pi / 2) -> PhaseTrace:
    """Continuously unwrapped phase of mu(r) = rho(r e^{i pi/4}) on [0, r_max], Theta(0) = 0.

    An interval is bisected while its wrapped phase increment exceeds max_jump
    or disagrees by more than max_jump with the trapezoidal prediction from
    local slopes; the second test catches increments aliased by 2 pi.
    """
    if r_max < 0:
        raise ValueError("r must be non-negative")
    n = max(2, int(np.ceil(r_max / dr)) + 1)
    r = np.linspace(0.0, r_max, n)
    mu = _mu(fac, r)
    slope = _local_slope(fac, np.maximum(r, 1e-4))
    for _ in range(30):
        d = np.angle(mu[1:] / mu[:-1])
        pred = 0.5 * (slope[1:] + slope[:-1]) * np.diff(r)
        bad = np.flatnonzero((np.abs(d) > max_jump) | (np.abs(d - pred) > max_jump))
        if not bad.size:
            break
        mids = 0.5 * (r[bad] + r[bad + 1])
        r = np.insert(r, bad + 1, mids)
        mu = np.insert(mu, bad + 1, _mu(fac, mids))
        slope = np.insert(slope, bad + 1, _local_slope(fac, mids))
    else:
        raise RuntimeError("phase unwrapping did not resolve; sampling too coarse")
    theta = np.concatenate([[0.0], np.cumsum(np.angle(mu[1:] / mu[:-1]))])
    return PhaseTrace(r, theta, mu)


def theta(fac: IntegratingFactor, r: float, dr: float = 0.05) -> float:
    """Theta(r), the unwrapped phase of mu along [0, r]."""
    if r == 0:
        return 0.0
    return float(theta_trace(fac, r, dr).theta[-1])


def theta_prime(fac: IntegratingFactor, r: float, h: float = 1e-4) -> float:
    """Central difference of the local phase at r."""
    return float(_local_slope(fac, np.array([r]), h)[0])


def theta_prime_product(r: float, alphas, tail: tuple[float, float] | None = None) -> float:
    """-4 r sum alpha_n^-2 / (1 + r^4/alpha_n^4), with an optional tail for alpha_n ~ a n + b beyond N."""
    al = np.asarray(alphas, float)
    val = -4 * r * np.sum(al**-2 / (1 + r**4 / al**4))
    if tail is not None:
        a, b = tail
        N = al.size
        val += -4 * r / (a * (a * (N + 0.5) + b))
    return float(val)


# ---------------------------------------------------------------------------
# eigenvalues


@dataclass(frozen=True)
class SpectralPoint:
    m: int
    r: float
    theta: float
    theta_prime: float
    residual: float = np.nan

    @property
    def z(self) -> complex:
        return self.r * RAY

    @property
    def lam(self) -> float:
        """The i L eigenvalue r^2 used for shooting."""
        return self.r**2

    @property
    def eigenvalue_L(self) -> complex:
        return -1j * self.r**2

    @property
    def conjugate_L(self) -> complex:
        return 1j * self.r**2


def find_eigenvalues(
    fac: IntegratingFactor, count: int, dr: float = 0.05, r_cap: float = 40.0, xtol: float = 1e-13
) -> list[SpectralPoint]:
    """First `count` roots of Theta(r) = -2 pi m, bracketed on the phase trace and refined by safeguarded secant."""
    if count < 1:
        raise ValueError("count must be at least 1")
    r_hi = max(2.0, 1.5 * np.sqrt(count))
    while True:
        tr = theta_trace(fac, r_hi, dr)
        if tr.theta[-1] < -2 * np.pi * (count + 0.25):
            break
        if r_hi >= r_cap:
            raise BracketError(f"only {int(-tr.theta[-1] // (2 * np.pi))} eigenvalues below r = {r_cap}")
        r_hi = min(r_cap, 1.6 * r_hi)
    if np.any(np.diff(tr.theta) >= 0):
        warnings.warn("Theta is not strictly decreasing on the sampled grid", RuntimeWarning)
    targets = -2 * np.pi * np.arange(1, count + 1)
    i = np.array([np.flatnonzero(tr.theta <= t)[0] for t in targets])
    ta, mua = tr.theta[i - 1], tr.mu[i - 1]

    def g(r):
        return ta + np.angle(_mu(fac, r) / mua) - targets

    ra, rb = tr.r[i - 1], tr.r[i]
    roots = _batched_illinois(g, ra, rb, g(ra), g(rb), xtol=xtol)
    th = g(roots) + targets
    return [
        SpectralPoint(m + 1, float(rm), float(t), theta_prime(fac, rm)) for m, (rm, t) in enumerate(zip(roots, th))
    ]


# ---------------------------------------------------------------------------
# eigenfunctions


@dataclass(frozen=True, eq=False)
class Eigenfunction:
    """Normalised phi_n for the L-eigenvalue -i r^2, or its conjugate partner."""

    point: SpectralPoint
    sol: ShootingSolution
    norm: float
    conjugate: bool = False

    @property
    def eigenvalue_L(self) -> complex:
        return self.point.conjugate_L if self.conjugate else self.point.eigenvalue_L

    def state(self, x):
        u, v = self.sol.state(x)
        u, v = u / self.norm, v / self.norm
        return (np.conj(u), np.conj(v)) if self.conjugate else (u, v)

    def __call__(self, x):
        return self.state(x)[0]

    def partner(self) -> "Eigenfunction":
        return Eigenfunction(self.point, self.sol, self.norm, not self.conjugate)

    @property
    def periodicity_defect(self) -> float:
        return abs(self.sol.phi_pi - self.sol.phi_minus_pi) / self.norm

    def residual(self, n: int = 400, margin: float = 0.01, h: float = 1e-4) -> float:
        """L2 norm of ell[phi] - mu phi on (-pi + margin, -margin) u (margin, pi - margin).

        ell[phi] = v' + v/(eps f) with v = eps f phi' from the integrator and v'
        by a fourth-order central difference.
        """
        s = np.linspace(margin, np.pi - margin, n)
        x = np.concatenate([-s[::-1], s])
        eps, f = self.sol.eps, self.sol.shot.profile
        off = np.array([-2, -1, 1, 2]) * h
        v = np.stack([self.state(x + o)[1] for o in off])
        dv = (v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * h)
        u0, v0 = self.state(x)
        r = dv + v0 / (eps * f(x)) - self.eigenvalue_L * u0
        dx = s[1] - s[0]
        return float(np.sqrt(np.sum(np.abs(r) ** 2) * dx))

    def table(self, n: int = 401, margin: float = 1e-6) -> np.ndarray:
        """Columns x, Re phi, Im phi."""
        x = np.linspace(-np.pi + margin, np.pi - margin, n)
        u = self(x)
        return np.column_stack([x, u.real, u.imag])


def _l2(u_fun, m: int = 32, q: int = 16) -> float:
    x, w = symmetric_rule(m, q)
    return float(np.sqrt(np.sum(w * np.abs(u_fun(x)) ** 2)))


def eigenfunction(
    fac: IntegratingFactor,
    pt: SpectralPoint,
    periodicity_tol: float = 1e-5,
    residual_tol: float = 1e-4,
    lam_max: float = LAMBDA_MAX,
) -> Eigenfunction:
    """Normalised eigenfunction phi(x; r^2) (L-eigenvalue -i r^2) with both gates checked."""
    sol = shoot_phi(fac, pt.lam, lam_max=lam_max)
    norm = _l2(sol)
    ef = Eigenfunction(pt, sol, norm)
    if ef.periodicity_defect > periodicity_tol:
        raise ResidualGateError(f"m={pt.m}: periodicity defect {ef.periodicity_defect:.3g} > {periodicity_tol:g}")
    res = ef.residual()
    if res > residual_tol:
        raise ResidualGateError(f"m={pt.m}: eigen-residual {res:.3g} > {residual_tol:g}")
    pt2 = SpectralPoint(pt.m, pt.r, pt.theta, pt.theta_prime, res)
    return Eigenfunction(pt2, sol, norm)


def eigen_system(fac: IntegratingFactor, count: int, **kw) -> list[Eigenfunction]:
    """[phi_1, conj phi_1, phi_2, conj phi_2, ...] for the first `count` pairs."""
    out = []
    for pt in find_eigenvalues(fac, count):
        ef = eigenfunction(fac, pt, **kw)
        out += [ef, ef.partner()]
    return out


# ---------------------------------------------------------------------------
# alpha sequence


@dataclass(frozen=True)
class AlphaSequence:
    alphas: np.ndarray
    residuals: np.ndarray  # |phi(pi; -i alpha^2)| / max |phi(pi; -i r^2)| near the root
    slope: float  # a in alpha_n ~ a n + b over the upper half
    intercept: float

    @property
    def ratios(self) -> np.ndarray:
        return self.alphas / np.arange(1, self.alphas.size + 1)

    def tail_sum(self, N: int | None = None) -> float:
        """sum_{n > N} alpha_n^-2 with alpha_n ~ a n + b (integral estimate)."""
        N = self.alphas.size if N is None else N
        return 1.0 / (self.slope * (self.slope * (N + 0.5) + self.intercept))


def _phi_neg(fac, r):
    return phi_at_pi(fac.profile, fac.epsilon, -1j * np.asarray(r, float) ** 2, batch=32)


def _batched_illinois(fun, a, b, fa, fb, xtol: float = 1e-13, maxit: int = 60):
    """Safeguarded secant (Illinois) on many sign-change brackets at once."""
    a, b, fa, fb = (np.array(v, dtype=float) for v in (a, b, fa, fb))
    side = np.zeros(a.size, int)
    for _ in range(maxit):
        c = b - fb * (b - a) / (fb - fa)
        c = np.where(np.isfinite(c) & (c > np.minimum(a, b)) & (c < np.maximum(a, b)), c, 0.5 * (a + b))
        fc = fun(c)
        left = np.sign(fc) == np.sign(fa)
        # keep the bracket [a, b] with opposite signs; halve the stale end value
        a_new = np.where(left, c, a)
        fa_new = np.where(left, fc, np.where(side == -1, 0.5 * fa, fa))
        b_new = np.where(left, b, c)
        fb_new = np.where(left, np.where(side == 1, 0.5 * fb, fb), fc)
        side = np.where(left, 1, -1)
        a, fa, b, fb = a_new, fa_new, b_new, fb_new
        if np.all((np.abs(b - a) < xtol * np.maximum(1.0, np.abs(c))) | (fc == 0)):
            return c
    return c


def alpha_sequence(fac: IntegratingFactor, count: int, dr: float = 0.1) -> AlphaSequence:
    """Positive roots alpha_1 < alpha_2 < ... of r -> phi(pi; -i r^2), a real function of r.

    A sign scan brackets the roots, then all brackets are refined together.
    |lambda| = r^2 may exceed the usual shooting cap here: along this ray the
    solution is non-oscillatory and the integrator stays well conditioned.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    r_hi = 1.0 + 0.7 * count
    step = dr
    r = np.arange(step, r_hi + step, step)
    vals = _phi_neg(fac, r)
    if np.max(np.abs(vals.imag)) > 1e-8 * np.max(np.abs(vals)):
        warnings.warn("phi(pi; -i r^2) is not real to working accuracy", RuntimeWarning)
    g = vals.real
    while np.count_nonzero(np.sign(g[1:]) != np.sign(g[:-1])) < count:
        extra = np.arange(r[-1] + step, r[-1] + 0.5 * r[-1], step)
        r = np.concatenate([r, extra])
        g = np.concatenate([g, _phi_neg(fac, extra).real])
        if r[-1] > 400:
            raise BracketError("alpha scan exceeded r = 400")
    idx = np.flatnonzero(np.sign(g[1:]) != np.sign(g[:-1]))[:count]
    roots = _batched_illinois(lambda x: _phi_neg(fac, x).real, r[idx], r[idx + 1], g[idx], g[idx + 1])
    local = np.array([max(abs(g[i]), abs(g[i + 1])) for i in idx])
    res = np.abs(_phi_neg(fac, roots)) / local
    gaps = np.diff(np.concatenate([[0.0], roots]))
    med = np.median(gaps)
    if np.any(gaps > 3 * med) or np.any(gaps < med / 3):
        warnings.warn("alpha spacing is irregular; a root may have been missed", MissedRootWarning)
    half = max(2, count // 2)
    n = np.arange(1, count + 1)
    a, b = np.polyfit(n[-half:], roots[-half:], 1) if count >= 4 else (med, 0.0)
    return AlphaSequence(roots, res, float(a), float(b))


def rho_product(alpha: AlphaSequence, z, N: int | None = None, tail: bool = True):
    """prod_{n <= N} (1 - z^2/alpha_n^2)/(1 + z^2/alpha_n^2), times exp(-2 z^2 sum_{n > N} alpha_n^-2)."""
    al = alpha.alphas if N is None else alpha.alphas[:N]
    z2 = np.asarray(z, complex) ** 2
    out = np.prod((1 - z2[..., None] / al**2) / (1 + z2[..., None] / al**2), axis=-1)
    if tail:
        out = out * np.exp(-2 * z2 * alpha.tail_sum(al.size))
    return out


# ---------------------------------------------------------------------------
# basis diagnostics


def gram_matrix(eigs, n: int, m: int = 48, q: int = 16) -> np.ndarray:
    """G[j, k] = <phi_j, phi_k> for the first n functions (L2 on (-pi, pi))."""
    if n > len(eigs):
        raise ValueError(f"only {len(eigs)} eigenfunctions available, asked for {n}")
    x, w = symmetric_rule(m, q)
    V = np.stack([e(x) for e in eigs[:n]])
    return (V * w) @ V.conj().T


def gram_condition(eigs, n: int) -> float:
    """2-norm condition number of the Gram matrix of the first n eigenfunctions."""
    return float(np.linalg.cond(gram_matrix(eigs, n)))


def biorthogonal_coeffs(eigs, g, n: int, m: int = 48, q: int = 16, cond_warn: float = 1e10) -> np.ndarray:
    """Coefficients c with sum_k c_k phi_k the L2-projection of g onto span{phi_1..phi_n}.

    The finite-section Gram solve G^T c = (<g, phi_j>)_j is the computable
    stand-in for pairing with the dual system.
    """
    x, w = symmetric_rule(m, q)
    V = np.stack([e(x) for e in eigs[:n]])
    G = (V * w) @ V.conj().T  # G[j, k] = <phi_j, phi_k>
    cond = np.linalg.cond(G)
    if cond > cond_warn:
        warnings.warn(f"Gram matrix condition number {cond:.3g} exceeds {cond_warn:g}", IllConditionedWarning)
    gx = g(x)
    b = (V.conj() * w) @ gx  # <g, phi_j>
    # sum_k c_k <phi_k, phi_j> = <g, phi_j>, i.e. G^T c = b
    return np.linalg.solve(G.T, b)


def reconstruction_error(eigs, g, coeffs, m: int = 48, q: int = 16) -> float:
    x, w = symmetric_rule(m, q)
    approx = sum(c * e(x) for c, e in zip(coeffs, eigs))
    return float(np.sqrt(np.sum(w * np.abs(g(x) - approx) ** 2)))


# ---------------------------------------------------------------------------
# output


def write_eigenvalues_csv(path, pts) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["m", "r", "im_lambda", "im_lambda_conj", "theta_prime", "residual"])
        for p in pts:
            wr.writerow([p.m, f"{p.r:.15g}", f"{-p.r**2:.15g}", f"{p.r**2:.15g}", f"{p.theta_prime:.10g}", f"{p.residual:.6g}"])
    return path


def write_theta_csv(path, tr: PhaseTrace) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["r", "theta", "abs_mu"])
        for r, t, m in zip(tr.r, tr.theta, tr.mu):
            wr.writerow([f"{r:.12g}", f"{t:.15g}", f"{abs(m):.15g}"])
    return path


def write_eigenfunction_csv(path, ef: Eigenfunction, n: int = 401) -> Path:
    path = Path(path)
    np.savetxt(path, ef.table(n), delimiter=",", header="x,re_phi,im_phi", comments="", fmt="%.12g")
    return path
