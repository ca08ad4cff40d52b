"""Shooting for i*ell[u] = lam*u on (0, pi).

The state is (u, v) with v = eps f u', for which

    u' = v / (eps f),     v' = -i lam u - v / (eps f).

Both 0 and pi are regular singular points, so the system is integrated in the
logistic coordinate x = pi / (1 + exp(-t)).  With g = dx/dt = x (pi - x)/pi the
coefficient g/f stays bounded at both ends and the stiff modes become O(1)
exponential rates in t.  f is evaluated at min(x, pi - x), which uses
f(pi - x) = f(x) and keeps full relative accuracy next to pi.

Several values of lam can be integrated together; step-size control then
follows the hardest member of the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import expit

from .model import ModelProfile

X0 = 1e-6  # series launch point next to 0
S_END = 1e-12  # distance from pi where forward shots stop
S_START = 1e-10  # distance from pi where backward shots start
RTOL = 1e-10
ATOL = 1e-12


def t_of_x(a):
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(a) - np.log(np.pi - a)


def _geometry(profile: ModelProfile, t):
    x = np.pi * expit(t)
    s = np.pi * expit(-t)
    return x, s, x * s / np.pi, profile(np.minimum(x, s))


def _make_rhs(profile: ModelProfile, eps: float, lams: np.ndarray):
    k = lams.size

    def rhs(t, y):
        _, _, g, fx = _geometry(profile, t)
        u, v = y[:k], y[k:]
        q = g * v / (eps * fx)
        return np.concatenate([q, -1j * lams * g * u - q])

    return rhs


@dataclass(frozen=True, eq=False)
class HalfShot:
    """Solutions for a batch of lam on (0, pi) with dense output in t."""

    lams: np.ndarray
    eps: float
    profile: ModelProfile
    kind: str  # "regular" or "recessive"
    t_span: tuple[float, float]
    end_state: np.ndarray  # (2, K) state at the far end of the integration
    sol: object = None
    nsteps: int = 0

    @property
    def at_pi(self) -> np.ndarray:
        """u(pi) for regular shots, extrapolated as u + v (v = -B s^(1/(eps c)) next to pi)."""
        return self.end_state[0] + self.end_state[1]

    def state(self, x):
        """(u(x), v(x)) for 0 < x < pi, shape (2, K, len(x))."""
        if self.sol is None:
            raise ValueError("shot was run without dense output")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = self.lams.size
        t = t_of_x(x)
        lo, hi = min(self.t_span), max(self.t_span)
        y = self.sol(np.clip(t, lo, hi)).reshape(2, k, x.size)
        if self.kind == "regular":
            near0 = x < X0
            if np.any(near0):
                a1 = (-1j * self.lams / (1 + self.eps * self.profile.c))[:, None]
                xs = x[near0][None, :]
                y[0][:, near0] = 1 + a1 * xs
                y[1][:, near0] = self.eps * self.profile(xs) * a1
        else:
            near0 = x < X0
            if np.any(near0):
                # dominant x^(-1/(eps c)) behaviour below the stopping point
                a = 1.0 / (self.eps * self.profile.c)
                ratio = (X0 / x[near0])[None, :] ** a
                y0 = self.sol(lo).reshape(2, k, 1)
                y[0][:, near0] = y0[0] * ratio
                y[1][:, near0] = y0[1] * ratio
        return y


def shoot_regular(profile: ModelProfile, eps: float, lams, dense: bool = False, rtol: float = RTOL) -> HalfShot:
    """Solutions with u(0) = 1, launched from X0 with u = 1 + a1 x, a1 = -i lam/(1 + eps c)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    a1 = -1j * lams / (1 + eps * profile.c)
    y0 = np.concatenate([1 + a1 * X0, eps * profile(X0) * a1])
    span = (float(t_of_x(X0)), float(-t_of_x(S_END)))
    sol = solve_ivp(
        _make_rhs(profile, eps, lams), span, y0, method="DOP853", rtol=rtol, atol=ATOL, dense_output=dense
    )
    if sol.status != 0:
        raise RuntimeError(f"shooting failed for lam={lams}: {sol.message}")
    end = sol.y[:, -1].reshape(2, lams.size)
    return HalfShot(lams, eps, profile, "regular", span, end, sol.sol if dense else None, sol.t.size)


def shoot_recessive(profile: ModelProfile, eps: float, lams, dense: bool = True, rtol: float = RTOL) -> HalfShot:
    """Solutions vanishing like (pi - x)^(1/(eps c)) at pi, integrated from pi toward 0.

    Launched at S_START with (u, v) = (1, -1), the leading term of the series
    scaled to unit size; callers fix the normalisation.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    y0 = np.concatenate([np.ones(lams.size, complex), -np.ones(lams.size, complex)])
    span = (float(-t_of_x(S_START)), float(t_of_x(X0)))
    sol = solve_ivp(
        _make_rhs(profile, eps, lams), span, y0, method="DOP853", rtol=rtol, atol=ATOL, dense_output=dense
    )
    if sol.status != 0:
        raise RuntimeError(f"backward shooting failed for lam={lams}: {sol.message}")
    end = sol.y[:, -1].reshape(2, lams.size)
    return HalfShot(lams, eps, profile, "recessive", span, end, sol.sol if dense else None, sol.t.size)


def phi_at_pi(profile: ModelProfile, eps: float, lams, batch: int = 16) -> np.ndarray:
    """phi(pi; lam) for an array of lam, integrated in batches of similar size."""
    lams = np.asarray(lams, dtype=complex)
    flat = lams.ravel()
    out = np.empty_like(flat)
    order = np.argsort(np.abs(flat))
    for i in range(0, flat.size, batch):
        idx = order[i : i + batch]
        out[idx] = shoot_regular(profile, eps, flat[idx]).at_pi
    return out.reshape(lams.shape)


def shoot_left_direct(profile: ModelProfile, eps: float, lam: complex, s_end: float = 1e-9) -> complex:
    """phi(-pi; lam) by a separate launch toward -pi in the plain x variable.

    Independent of the logistic-coordinate path; intended for moderate |lam|
    only, where the stiffness next to -pi is mild.
    """
    a1 = -1j * lam / (1 + eps * profile.c)
    x0 = -X0

    def rhs(x, y):
        fx = profile(x)
        return [y[1] / (eps * fx), -1j * lam * y[0] - y[1] / (eps * fx)]

    sol = solve_ivp(
        rhs,
        (x0, -(np.pi - s_end)),
        [complex(1 + a1 * x0), complex(eps * profile(x0) * a1)],
        method="DOP853",
        rtol=1e-11,
        atol=1e-13,
    )
    if sol.status != 0:
        raise RuntimeError(sol.message)
    return complex(sol.y[0, -1] + sol.y[1, -1])
