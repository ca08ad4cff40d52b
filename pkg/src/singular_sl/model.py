"""Coefficient profiles f and their structural checks.

A profile must be 2pi-periodic, odd, anti-periodic (f(x + pi) = -f(x)) and
positive on (0, pi), with f(x) = c x + O(|x|^(1 + delta)) at the origin.
Oddness plus anti-periodicity force f(pi - x) = f(x), so every profile is
determined by its values on [0, pi/2]; the built-in kinds are evaluated through
that reduction wherever a closed form is not available.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

KINDS = ("sine", "perturbed-sine", "piecewise-linear-odd", "user-table")
ALIASES = {"pwlinear": "piecewise-linear-odd", "perturbed": "perturbed-sine", "table": "user-table"}

Array = np.ndarray


class ProfileError(ValueError):
    """Raised when a profile breaks one of the structural conditions on f."""


@dataclass(frozen=True)
class ModelProfile:
    """Coefficient f with derivative, slope c = f'(0) and Hoelder exponent delta.

    `kinks` lists the points in (-pi, pi] where f is not differentiable; they are
    declared by the constructor and never detected from samples.
    """

    kind: str
    f: Callable[[Array], Array]
    df: Callable[[Array], Array]
    c: float
    delta: float = 1.0
    kinks: tuple[float, ...] = ()
    params: dict = field(default_factory=dict)
    period: float = 2 * np.pi

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    def deriv(self, x):
        return self.df(np.asarray(x, dtype=float))

    @property
    def eps_max(self) -> float:
        return 2.0 / abs(self.c)

    def describe(self) -> dict:
        return {"kind": self.kind, "c": self.c, "delta": self.delta, **self.params}


def _fold(x):
    """Map x to (sign, a) with x = sign * a mod 2pi and a reflected into [0, pi/2]."""
    y = np.where(np.abs(x) <= np.pi, x, np.mod(x + np.pi, 2 * np.pi) - np.pi)
    sign = np.sign(y)
    a = np.abs(y)
    upper = a > np.pi / 2
    return sign, np.where(upper, np.pi - a, a), upper


def _from_half(half: Callable, dhalf: Callable):
    def f(x):
        sign, a, _ = _fold(x)
        return sign * half(a)

    def df(x):
        _, a, upper = _fold(x)
        return np.where(upper, -1.0, 1.0) * dhalf(a)

    return f, df


def _sine(params):
    return ModelProfile("sine", np.sin, np.cos, c=1.0, delta=1.0)


def _perturbed_sine(params):
    gamma = float(params.get("gamma", 0.5))
    if gamma <= -1.0:
        raise ProfileError(f"perturbed-sine with gamma={gamma} is not positive on (0, pi); need gamma > -1")

    def f(x):
        return np.sin(x) * (1.0 + gamma * np.cos(x) ** 2)

    def df(x):
        s, co = np.sin(x), np.cos(x)
        return co * (1.0 + gamma * co**2) - 2.0 * gamma * s**2 * co

    return ModelProfile("perturbed-sine", f, df, c=1.0 + gamma, delta=1.0, params={"gamma": gamma})


def _piecewise_linear(params):
    slope = float(params.get("slope", 1.0))
    if slope <= 0:
        raise ProfileError(f"piecewise-linear-odd needs slope > 0 for positivity on (0, pi), got {slope}")
    f, df = _from_half(lambda a: slope * a, lambda a: np.where(a < np.pi / 2, slope, 0.0))
    return ModelProfile(
        "piecewise-linear-odd", f, df, c=slope, delta=1.0, kinks=(-np.pi / 2, np.pi / 2), params={"slope": slope}
    )


def _user_table(params):
    x = np.asarray(params["x"], dtype=float)
    y = np.asarray(params["values"], dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 4:
        raise ProfileError("user-table needs matching 1-D 'x' and 'values' arrays with at least 4 samples")
    if abs(x[0]) > 1e-14 or abs(x[-1] - np.pi / 2) > 1e-12 or np.any(np.diff(x) <= 0):
        raise ProfileError("user-table samples must be increasing from 0 to pi/2")
    if abs(y[0]) > 1e-14:
        raise ProfileError("user-table needs f(0) = 0 for oddness")
    if np.any(y[1:] <= 0):
        raise ProfileError("user-table values must be positive on (0, pi/2]")
    spline = CubicSpline(x, y)
    d = spline.derivative()
    f, df = _from_half(lambda a: spline(a), lambda a: d(a))
    c = float(d(0.0))
    if c <= 0:
        raise ProfileError(f"user-table slope at 0 must be positive, got {c}")
    return ModelProfile("user-table", f, df, c=c, delta=1.0, kinks=(-np.pi / 2, np.pi / 2), params={"n_samples": x.size})


_BUILDERS = {
    "sine": _sine,
    "perturbed-sine": _perturbed_sine,
    "piecewise-linear-odd": _piecewise_linear,
    "user-table": _user_table,
}


def make_profile(kind: str, params: dict | None = None) -> ModelProfile:
    """Build a validated profile of the given kind.

    Raises ProfileError when the parameters break positivity on (0, pi) or
    anti-periodicity.
    """
    kind = ALIASES.get(kind, kind)
    if kind not in _BUILDERS:
        raise ProfileError(f"unknown profile kind {kind!r}; expected one of {KINDS}")
    prof = _BUILDERS[kind](dict(params or {}))
    rep = validate_profile(prof, 256)
    if not rep.passed:
        raise ProfileError(f"profile {kind} failed validation: {rep.failures()}")
    return prof


def check_epsilon(profile: ModelProfile, eps: float) -> float:
    """Return eps as a float if 0 < eps < 2/c, else raise ValueError."""
    eps = float(eps)
    if not (0.0 < eps < profile.eps_max):
        raise ValueError(f"epsilon={eps} outside (0, 2/c) = (0, {profile.eps_max:g})")
    return eps


@dataclass(frozen=True)
class ValidationReport:
    periodicity: float
    antiperiodicity: float
    oddness: float
    min_value: float
    linear_exponent: float
    condition3_ok: bool
    kinks: tuple[float, ...]
    kinks_ok: bool
    c: float
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return not self.failures()

    def failures(self) -> list[str]:
        out = []
        if self.periodicity > self.tol:
            out.append(f"periodicity violation {self.periodicity:.3g}")
        if self.antiperiodicity > self.tol:
            out.append(f"anti-periodicity violation {self.antiperiodicity:.3g}")
        if self.oddness > self.tol:
            out.append(f"oddness violation {self.oddness:.3g}")
        if not self.min_value > 0:
            out.append(f"f not positive on (0, pi): min {self.min_value:.3g}")
        if not self.condition3_ok:
            out.append(f"f - cx decays with exponent {self.linear_exponent:.3g} only")
        if not self.kinks_ok:
            out.append("kink at a multiple of pi")
        if self.c == 0:
            out.append("c = f'(0) vanishes")
        return out


def validate_profile(p: ModelProfile, grid_size: int = 1024) -> ValidationReport:
    """Measure violations of the four structural conditions on a uniform grid.

    The grid is the set of cell midpoints of a uniform partition of [-pi, pi],
    so it never hits 0 or +-pi when grid_size is even.
    """
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    n = 2 * (grid_size // 2)
    x = -np.pi + (np.arange(n) + 0.5) * (2 * np.pi / n)
    fx = p(x)
    periodicity = float(np.max(np.abs(p(x + 2 * np.pi) - fx)))
    anti = float(np.max(np.abs(p(x + np.pi) + fx)))
    odd = float(np.max(np.abs(p(-x) + fx)))
    pos = x[x > 0]
    min_value = float(np.min(p(pos)))

    xs = np.logspace(-4, -2, 25)
    dev = np.abs(p(xs) - p.c * xs)
    scale = np.abs(p.c) * xs
    if np.all(dev <= 1e-13 * scale):
        # exactly linear near 0
        slope, ok = np.inf, True
    else:
        good = dev > 1e-15 * scale
        slope = float(np.polyfit(np.log(xs[good]), np.log(dev[good]), 1)[0]) if good.sum() >= 3 else np.inf
        ok = slope >= 1 + p.delta / 2
    kinks_ok = all(abs(k / np.pi - round(k / np.pi)) > 1e-12 for k in p.kinks)
    return ValidationReport(periodicity, anti, odd, min_value, slope, ok, tuple(p.kinks), kinks_ok, p.c)


def _fd_steps(x, h):
    d = np.minimum(np.abs(x), np.pi - np.abs(x))
    return np.minimum(h, 0.01 * d)


def derivatives(u: Callable, x, h: float = 1e-3):
    """Fourth-order central estimates of u' and u'' at x.

    The step shrinks near 0 and +-pi so stencils never cross a singular point.
    """
    x = np.asarray(x, dtype=float)
    hh = _fd_steps(x, h)
    um2, um1, u0, up1, up2 = (u(x + k * hh) for k in (-2, -1, 0, 1, 2))
    d1 = (um2 - 8 * um1 + 8 * up1 - up2) / (12 * hh)
    d2 = (-um2 + 16 * um1 - 30 * u0 + 16 * up1 - up2) / (12 * hh**2)
    return d1, d2


def apply_ell(profile: ModelProfile, eps: float, u: Callable, x, h: float = 1e-3, relative: bool = False):
    """Finite-difference value of eps (f u')' + u' at the points x.

    With relative=True the result is divided pointwise by the sum of the
    magnitudes of the three terms, which measures cancellation independently of
    the size of u.
    """
    x = np.asarray(x, dtype=float)
    d1, d2 = derivatives(u, x, h)
    fx, dfx = profile(x), profile.deriv(x)
    t1, t2, t3 = eps * fx * d2, eps * dfx * d1, d1
    val = t1 + t2 + t3
    if relative:
        scale = np.abs(t1) + np.abs(t2) + np.abs(t3)
        return np.abs(val) / np.where(scale > 0, scale, 1.0)
    return val
