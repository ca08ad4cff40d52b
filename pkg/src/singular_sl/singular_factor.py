"""Integrating factor p, weight w = p/f and singular solution psi = 1/w.

On (0, pi) the integrating factor solves p'/p = f'/f + 1/(eps f).  Writing

    1/f(y) = 1/(c y) + 1/(c (pi - y)) + eta(y)

the two pole terms integrate to (1/c) log(y / (pi - y)) and only the bounded
remainder eta is integrated numerically.  Because f(pi - y) = f(y), eta is
symmetric about pi/2 and its antiderivative H (anchored at pi/2) is odd about
pi/2, so H is only tabulated on (0, pi/2].

Sign conventions: w > 0 and psi > 0 on both half-intervals, hence p = f w has
the sign of f.  With these choices psi is even and, for f = sin,
psi(x) = |cot(x/2)|^(1/eps).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import CubicHermiteSpline

from .model import ModelProfile, apply_ell, check_epsilon, derivatives


class FactorBuildError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class IntegratingFactor:
    profile: ModelProfile
    epsilon: float
    half_nodes: np.ndarray  # nodes on [0, pi/2]
    H: np.ndarray  # int_{pi/2}^{x} eta at half_nodes
    _spline: CubicHermiteSpline

    @property
    def exponent(self) -> float:
        """1/(eps c), the power of |x| in w near 0."""
        return 1.0 / (self.epsilon * self.profile.c)

    @property
    def log_f_mid(self) -> float:
        return float(np.log(self.profile(np.pi / 2)))

    @property
    def nodes(self) -> np.ndarray:
        """Strictly increasing grid on (-pi, 0) u (0, pi), clustered at 0 and +-pi."""
        h = self.half_nodes[1:]
        upper = np.pi - h[::-1][1:]
        pos = np.concatenate([h, upper])
        return np.concatenate([-pos[::-1], pos])

    def eta_integral(self, a):
        """H(a) = int_{pi/2}^{a} eta for a in [0, pi]."""
        a = np.asarray(a, dtype=float)
        s = np.pi - a
        lower = a <= np.pi / 2
        return np.where(lower, self._spline(np.where(lower, a, 0.0)), -self._spline(np.where(lower, 0.0, s)))

    def log_psi(self, x):
        """log psi(x); +inf at 0 and -inf at +-pi."""
        a = np.abs(np.asarray(x, dtype=float))
        s = np.pi - a
        with np.errstate(divide="ignore"):
            ratio = np.log(a) - np.log(s)
        return self.log_f_mid - ratio * self.exponent - self.eta_integral(a) / self.epsilon

    def psi(self, x):
        return np.exp(self.log_psi(x))

    def w(self, x):
        return np.exp(-self.log_psi(x))

    def p(self, x):
        x = np.asarray(x, dtype=float)
        return self.profile(x) * self.w(x)

    def q(self, x):
        """log|p|, the antiderivative of f'/f + 1/(eps f) anchored so that |p(+-pi/2)| = 1."""
        x = np.asarray(x, dtype=float)
        return np.log(np.abs(self.profile(x))) - self.log_psi(x)

    @property
    def q_plus(self) -> np.ndarray:
        x = self.nodes
        return self.q(x[x > 0])

    @property
    def q_minus(self) -> np.ndarray:
        x = self.nodes
        return self.q(x[x < 0])

    def table(self) -> np.ndarray:
        """Columns x, p, w, psi on the factor grid."""
        x = self.nodes
        return np.column_stack([x, self.p(x), self.w(x), self.psi(x)])


def _eta(profile: ModelProfile, y):
    c = profile.c
    return 1.0 / profile(y) - 1.0 / (c * y) - 1.0 / (c * (np.pi - y))


def build_factor(profile: ModelProfile, eps: float, n_nodes: int = 2048, tol: float = 1e-10) -> IntegratingFactor:
    """Tabulate the integrating factor for a profile and eps in (0, 2/c).

    The remainder eta is integrated cell by cell with adaptive quadrature on a
    grid graded quadratically toward 0; the tabulated antiderivative is
    interpolated by a cubic Hermite spline using eta itself as the slope.
    """
    eps = check_epsilon(profile, eps)
    if n_nodes < 128:
        raise ValueError("n_nodes must be at least 128")
    m = n_nodes // 4
    nodes = (np.pi / 2) * (np.arange(m + 1) / m) ** 2
    inner_kinks = [abs(k) for k in profile.kinks if 0 < abs(k) < np.pi / 2]
    nodes = np.unique(np.concatenate([nodes, inner_kinks]))

    cells = np.empty(nodes.size - 1)
    for i, (lo, hi) in enumerate(zip(nodes[:-1], nodes[1:])):
        with warnings.catch_warnings():
            # non-convergence is reported through the error estimate below
            warnings.simplefilter("ignore", IntegrationWarning)
            val, err = quad(lambda y: _eta(profile, y), lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
        if not np.isfinite(val) or err > tol:
            raise FactorBuildError(
                f"quadrature of 1/f - 1/(c y) - 1/(c (pi - y)) on [{lo:.3g}, {hi:.3g}] did not converge "
                f"(error estimate {err:.2g}); does f satisfy f = c x + O(x^(1+delta))?"
            )
        cells[i] = val
    # anchor at pi/2, the last node
    H = -np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
    slopes = _eta(profile, np.maximum(nodes, 0.5 * nodes[1]))
    spline = CubicHermiteSpline(nodes, H, slopes, extrapolate=True)
    return IntegratingFactor(profile, eps, nodes, H, spline)


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    bad = (np.abs(x) >= np.pi) | (x == 0)
    if np.any(bad):
        raise ValueError(f"psi is only defined on (-pi, 0) u (0, pi); got {x[bad].ravel()[:3]}")
    return x


def eval_psi(fac: IntegratingFactor, x):
    """psi(x) = f(x)/p(x) > 0 for x in (-pi, 0) u (0, pi)."""
    x = _check_domain(x)
    out = fac.psi(x)
    return float(out) if out.ndim == 0 else out


def endpoint_exponents(fac: IntegratingFactor, window=(1e-3, 1e-2), n: int = 21) -> tuple[float, float]:
    """Least-squares slopes of log w against log|x| near 0 and log|pi - x| near pi."""
    d = np.logspace(np.log10(window[0]), np.log10(window[1]), n)
    theta0 = np.polyfit(np.log(d), np.log(fac.w(d)), 1)[0]
    theta_pi = np.polyfit(np.log(d), np.log(fac.w(np.pi - d)), 1)[0]
    return float(theta0), float(theta_pi)


def default_check_grid(n: int = 2048, margin: float = 1e-3) -> np.ndarray:
    x = np.linspace(margin, np.pi - margin, n // 2)
    return np.concatenate([-x[::-1], x])


def homogeneous_residuals(fac: IntegratingFactor, grid=None) -> dict:
    """Finite-difference residuals of the two homogeneous identities.

    identity: max |p (f/p)' + 1/eps|; p (f/p)' equals -1/eps identically.
    ell_psi:  max of |eps (f psi')' + psi'| divided by the sum of the magnitudes
              of its terms (psi is unbounded near 0, so only a scaled residual
              is meaningful there).
    ell_one:  max |eps (f u')' + u'| for u = 1.

    Points within 5e-3 of a kink of f are dropped.
    """
    x = default_check_grid() if grid is None else np.asarray(grid, dtype=float)
    if np.any(np.minimum(np.abs(x), np.pi - np.abs(x)) < 1e-3 - 1e-15):
        raise ValueError("grid must stay at least 1e-3 away from 0 and +-pi")
    # stencils must not straddle a declared kink of f
    for k in fac.profile.kinks:
        x = x[np.abs(x - k) > 5e-3]
    dpsi, _ = derivatives(fac.psi, x)
    identity = float(np.max(np.abs(fac.p(x) * dpsi + 1.0 / fac.epsilon)))
    ell_psi = float(np.max(apply_ell(fac.profile, fac.epsilon, fac.psi, x, relative=True)))
    ell_one = float(np.max(np.abs(apply_ell(fac.profile, fac.epsilon, lambda y: np.ones_like(y), x))))
    return {"identity": identity, "ell_psi": ell_psi, "ell_one": ell_one}


def verify_homogeneous(fac: IntegratingFactor, grid=None) -> float:
    """Largest of the homogeneous-identity residuals (see homogeneous_residuals)."""
    r = homogeneous_residuals(fac, grid)
    return max(r["identity"], r["ell_psi"], r["ell_one"])
