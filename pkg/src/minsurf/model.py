"""Objective, Euler-Lagrange operator and the shared stopping rule.

The objective is ``lam/2 * ||K u - f||^2 + sum sqrt(alpha + |grad u|^2)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .grid import as_image, divergence, gradient, norm_x
from .spectral import apply_blur


@dataclass(frozen=True)
class ModelParams:
    lam: float
    alpha: float = 0.01

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")


@dataclass(frozen=True)
class StopRule:
    rel_tol: float = 1e-5
    max_iter: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")


def regularizer(alpha, u):
    g = gradient(u)
    return float(np.sum(np.sqrt(alpha + g[0] * g[0] + g[1] * g[1])))


def energy(params, spectrum, f, u):
    """Value of the restoration objective at ``u``."""
    u = as_image(u, "u")
    f = as_image(f, "f")
    if u.shape != f.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {f.shape}")
    r = apply_blur(spectrum, u) - f
    return 0.5 * params.lam * float(np.sum(r * r)) + regularizer(params.alpha, u)


def euler_lagrange(params, u):
    """``div(grad u / sqrt(|grad u|^2 + alpha))``; requires ``alpha > 0``."""
    if not params.alpha > 0:
        raise ValueError("the Euler-Lagrange operator is singular at alpha = 0")
    g = gradient(as_image(u, "u"))
    return divergence(g / np.sqrt(g[0] * g[0] + g[1] * g[1] + params.alpha))


def conjugate_identity(alpha, t):
    """Return ``(sqrt(alpha + t^2), s*)`` where ``s*`` attains
    ``sup_{|s|<=1} t*s + sqrt(alpha*(1 - s^2))``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    value = math.sqrt(alpha + t * t)
    return value, t / value


def relative_change(u_prev, u_next, e_prev, e_next):
    """Largest of the relative iterate change and relative energy change.

    A zero denominator falls back to the absolute change.
    """
    du = norm_x(np.asarray(u_next) - np.asarray(u_prev))
    nu = norm_x(u_prev)
    ru = du / nu if nu > 0 else du
    de = abs(e_next - e_prev)
    re = de / abs(e_prev) if e_prev != 0 else de
    return max(ru, re)


def check_stop(rule, u_prev, u_next, e_prev, e_next, iteration):
    return relative_change(u_prev, u_next, e_prev, e_next) <= rule.rel_tol or iteration >= rule.max_iter
