"""Exact reference solution for inviscid Burgers with u(x,0) = sin x.

Characteristics give the implicit relation xi + t sin(xi) = x with
u(x,t) = sin(xi).  The wave breaks at t = 1; for t > 1 the entropy
solution carries a single stationary shock at x = pi (odd symmetry of
sin about pi makes the jump symmetric, so the shock does not move).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

_TWO_PI = 2.0 * np.pi


class NewtonError(RuntimeError):
    """Characteristic root solve failed to converge."""


@dataclass(frozen=True)
class CharacteristicSolution:
    t: float
    newton_tol: float = 1e-13
    max_iter: int = 100

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("time must be nonnegative")

    def __call__(self, x) -> np.ndarray:
        return eval_velocity(x, self.t, self.newton_tol, self.max_iter)

    def energy(self) -> float:
        return energy(self.t)


def _characteristic_root(x: float, t: float, tol: float, max_iter: int) -> float:
    """Root of g(xi) = xi + t sin(xi) - x on the entropic branch, x in [0, pi].

    For t <= 1, g is nondecreasing on [0, pi].  For t > 1, g increases up
    to xi* = arccos(-1/t) and then decreases while staying above g(pi) =
    pi - x >= 0, so the entropic root is the unique one on [0, xi*].
    """
    hi = np.pi if t <= 1.0 else float(np.arccos(-1.0 / t))
    lo = 0.0
    g = lambda xi: xi + t * np.sin(xi) - x
    glo, ghi = g(lo), g(hi)
    if glo > 0 or ghi < 0:
        # root pinned at an endpoint up to roundoff
        if abs(glo) <= tol:
            return lo
        if abs(ghi) <= tol:
            return hi
        raise NewtonError(f"no bracket for x={x}, t={t}")
    xi = min(hi, max(lo, x / (1.0 + t)))  # linearized guess
    for _ in range(max_iter):
        res = g(xi)
        if abs(res) <= tol:
            return xi
        if res > 0:
            hi = xi
        else:
            lo = xi
        deriv = 1.0 + t * np.cos(xi)
        step = res / deriv if deriv > 1e-14 else np.nan
        xi_new = xi - step
        if not np.isfinite(xi_new) or not (lo < xi_new < hi):
            xi_new = 0.5 * (lo + hi)  # bisection safeguard
        xi = xi_new
    if abs(g(xi)) <= 10 * tol:
        return xi
    raise NewtonError(f"no convergence for x={x}, t={t}")


def eval_velocity(x, t: float, newton_tol: float = 1e-13, max_iter: int = 100) -> np.ndarray:
    """Entropy solution u(x, t) for x in [0, 2pi)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite evaluation points")
    x = np.mod(x, _TWO_PI)
    out = np.empty_like(x)
    for i, xi_pos in enumerate(x):
        if xi_pos <= np.pi:
            root = _characteristic_root(xi_pos, t, newton_tol, max_iter)
            out[i] = np.sin(root)
        else:
            # odd symmetry about x = pi
            root = _characteristic_root(_TWO_PI - xi_pos, t, newton_tol, max_iter)
            out[i] = -np.sin(root)
    return out


def shock_foot(t: float, newton_tol: float = 1e-13, max_iter: int = 100) -> float:
    """Characteristic label xi_s feeding the shock: xi_s + t sin(xi_s) = pi."""
    return _characteristic_root(np.pi, t, newton_tol, max_iter)


def energy(t: float, newton_tol: float = 1e-13) -> float:
    """E1(t) = (1/2pi) int u(x,t)^2 dx, normalized to match sum |u_k|^2.

    Pre-shock the energy is conserved at exactly 1/2.  Post-shock the
    integral is mapped to the characteristic variable on the surviving
    branch, x = xi + t sin(xi) for xi in [0, xi_s], doubled by symmetry.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t <= 1.0:
        return 0.5
    xi_s = shock_foot(t, newton_tol)
    integrand = lambda xi: np.sin(xi) ** 2 * (1.0 + t * np.cos(xi))
    value, err = quad(integrand, 0.0, xi_s, epsabs=1e-13, epsrel=1e-12, limit=200)
    if not np.isfinite(value) or err > 1e-8:
        raise RuntimeError(f"quadrature failure at t={t} (err={err:.3e})")
    return value / np.pi
