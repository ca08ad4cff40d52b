"""Composite Gauss-Legendre rules on graded panels."""

from __future__ import annotations

import numpy as np


def graded_breaks(m: int, gamma: float = 2.0, a: float = 0.0, b: float = np.pi) -> np.ndarray:
    """Panel breakpoints on [a, b] graded with exponent gamma toward both ends."""
    mid = 0.5 * (a + b)
    t = (np.arange(m + 1) / m) ** gamma
    left = a + (mid - a) * t
    right = b - (b - mid) * t[::-1]
    return np.concatenate([left, right[1:]])


def gauss_panels(breaks: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    g, gw = np.polynomial.legendre.leggauss(q)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g
    w = 0.5 * (hi - lo) * gw
    return x.ravel(), w.ravel()


def half_interval_rule(m: int, q: int = 8, gamma: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on (0, pi), 2m panels of q points graded toward 0 and pi."""
    return gauss_panels(graded_breaks(m, gamma), q)


def symmetric_rule(m: int, q: int = 8, gamma: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Rule on (-pi, 0) u (0, pi): the half-interval rule and its mirror image."""
    x, w = half_interval_rule(m, q, gamma)
    return np.concatenate([-x[::-1], x]), np.concatenate([w[::-1], w])


def interval_rule(a: float, b: float, m: int = 16, q: int = 16, gamma: float = 2.0):
    """Graded rule on a general [a, b]."""
    return gauss_panels(graded_breaks(m, gamma, a, b), q)


def local_integration_matrix(q: int) -> np.ndarray:
    """C[i, j] = int_{-1}^{g_i} l_j(t) dt for the Lagrange basis on q Gauss points g."""
    L = np.polynomial.legendre
    g, _ = L.leggauss(q)
    coef = np.linalg.inv(L.legvander(g, q - 1))  # l_j = sum_k coef[k, j] P_k
    C = np.zeros((q, q))
    for k in range(q):
        e = np.zeros(q)
        e[k] = 1.0
        C += np.outer(L.legval(g, L.legint(e, lbnd=-1)), coef[k])
    return C


def cumulative_matrix(breaks: np.ndarray, q: int):
    """Nodes, weights and the matrix V with (V F)_i ~ int_{breaks[0]}^{x_i} F.

    Full panels to the left of x_i use the Gauss weights, the panel holding x_i
    integrates the local interpolating polynomial.
    """
    x, w = gauss_panels(breaks, q)
    C = local_integration_matrix(q)
    n = x.size
    V = np.zeros((n, n))
    for p in range(breaks.size - 1):
        sl = slice(p * q, (p + 1) * q)
        V[sl, : p * q] = w[None, : p * q]
        V[sl, sl] = 0.5 * (breaks[p + 1] - breaks[p]) * C
    return x, w, V
