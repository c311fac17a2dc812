"""Explicit time stepping for one or two coupled spectral systems.

Coupled systems (full + reduced) always share the accepted step: the
proposed step must satisfy every system's error estimate, and the next
proposal is the most conservative of the per-system suggestions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MIN_STEP = 1e-14


class StepUnderflow(RuntimeError):
    """Step size control collapsed below MIN_STEP (blow-up / singularity contact)."""


@dataclass(frozen=True)
class IntegratorSettings:
    mode: str = "adaptive"  # "adaptive" | "fixed"
    rtol: float = 1e-10
    atol: float = 1e-12
    dt: float | None = None  # fixed mode: explicit step; None -> stability-scaled
    cfl: float = 0.5  # safety factor on the systems' stable-step bound
    initial_dt: float = 1e-4

    def __post_init__(self):
        if self.mode not in ("adaptive", "fixed"):
            raise ValueError(f"unknown integrator mode {self.mode!r}")

    def fixed_step(self, systems, t: float) -> float:
        if self.dt is not None:
            return self.dt
        return self.cfl * min(s.stable_step(t) for s in systems)


# Cash-Karp 4(5) embedded pair
_C = np.array([0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [3 / 10, -9 / 10, 6 / 5],
    [-11 / 54, 5 / 2, -70 / 27, 35 / 27],
    [1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096],
]
_B5 = np.array([37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771])
_B4 = np.array([2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4])


def rk4_step(systems: Sequence, t: float, states: Sequence[np.ndarray], dt: float) -> list[np.ndarray]:
    """One classical fixed 4th-order step shared by all systems."""
    k1 = [s.rhs(t, y) for s, y in zip(systems, states)]
    k2 = [s.rhs(t + dt / 2, y + dt / 2 * k) for s, y, k in zip(systems, states, k1)]
    k3 = [s.rhs(t + dt / 2, y + dt / 2 * k) for s, y, k in zip(systems, states, k2)]
    k4 = [s.rhs(t + dt, y + dt * k) for s, y, k in zip(systems, states, k3)]
    return [
        y + dt / 6 * (a + 2 * b + 2 * c + d)
        for y, a, b, c, d in zip(states, k1, k2, k3, k4)
    ]


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    norm = float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))
    # NaN from an overflowed stage must reject the step, not slip past max()
    return norm if np.isfinite(norm) else np.inf


def cash_karp_attempt(systems, t, states, dt, rtol, atol):
    """Try one embedded 4(5) step; return (new_states, worst error norm)."""
    ks = [[] for _ in systems]
    for stage in range(6):
        for i, (s, y) in enumerate(zip(systems, states)):
            yi = y
            if stage:
                incr = sum(a * k for a, k in zip(_A[stage], ks[i]))
                yi = y + dt * incr
            ks[i].append(s.rhs(t + _C[stage] * dt, yi))
    new_states, worst = [], 0.0
    for y, k in zip(states, ks):
        y5 = y + dt * sum(b * ki for b, ki in zip(_B5, k))
        err = dt * sum((b5 - b4) * ki for b5, b4, ki in zip(_B5, _B4, k))
        worst = max(worst, _error_norm(err, y, y5, rtol, atol))
        new_states.append(y5)
    return new_states, worst


def adaptive_step(systems, t, states, dt_try, rtol, atol):
    """Advance all systems by one accepted embedded step.

    Returns (t_new, new_states, dt_used, dt_next).
    """
    dt = dt_try
    while True:
        if dt < MIN_STEP:
            raise StepUnderflow(f"step size underflow at t={t:.6g}")
        new_states, err = cash_karp_attempt(systems, t, states, dt, rtol, atol)
        if err <= 1.0 or not np.isfinite(err):
            if not np.isfinite(err):
                dt *= 0.2
                continue
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            return t + dt, new_states, dt, dt * factor
        dt *= max(0.2, 0.9 * err ** -0.25)
