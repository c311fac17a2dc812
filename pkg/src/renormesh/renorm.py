"""Renormalization diagnostics: quantity rates, matrices A and B, and the
eigenvalues of the matrix M solving A = M B.

The monitored quantities are E1 = sum |u_k|^2 and E2 = sum |u_k|^4 over
the resolved band.  Matrix entries are the per-term contributions to the
quantity rates, i.e. the sensitivities of dE_i/dt with respect to the
term coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import TermEvaluation
from .spectral import Band, SpectralField

SINGULAR_DET_THRESHOLD = 1e-28
MAX_DIGITS = 16


@dataclass(frozen=True)
class QuantityRates:
    dE1: float
    dE2: float
    contributions: np.ndarray  # 2x2, C[i, j] = term j's share of dE_{i+1}/dt


@dataclass(frozen=True)
class RenormState:
    A: np.ndarray
    B: np.ndarray
    M: np.ndarray
    detB: float
    eig: tuple[complex, complex]
    digits: tuple[int, int]
    time: float
    b_singular_flag: bool


def quantities(f: SpectralField, resolved: Band) -> tuple[float, float]:
    """(E1, E2) = (sum |u_k|^2, sum |u_k|^4) over the resolved band."""
    u = f.coefficients_on(resolved)
    sq = np.abs(u) ** 2
    return float(np.sum(sq)), float(np.sum(sq**2))


def quantities_array(u: np.ndarray) -> tuple[float, float]:
    sq = np.abs(u) ** 2
    return float(np.sum(sq)), float(np.sum(sq**2))


def rate_contributions(terms: TermEvaluation, f: SpectralField, resolved: Band) -> np.ndarray:
    """2x2 array C with C[i, j] = contribution of term j+1 to dE_{i+1}/dt.

    Row 1: 2 Re(r_j,k u_k^*) summed over the band; row 2 carries the
    extra |u_k|^2 weight and an overall factor 4.
    """
    u = f.coefficients_on(resolved)
    return rate_contributions_arrays(
        _slice_to(terms.r1, terms.target_range, resolved),
        _slice_to(terms.r2, terms.target_range, resolved),
        u,
    )


def _slice_to(values: np.ndarray, src: Band, dst: Band) -> np.ndarray:
    if src == dst:
        return values
    if dst.lo < src.lo or dst.hi > src.hi:
        raise ValueError(f"band {dst} not contained in term range {src}")
    return values[dst.lo - src.lo : dst.hi - src.lo]


def rate_contributions_arrays(r1: np.ndarray, r2: np.ndarray, u: np.ndarray) -> np.ndarray:
    uc = np.conj(u)
    w = np.abs(u) ** 2
    return np.array(
        [
            [2.0 * np.sum((r1 * uc).real), 2.0 * np.sum((r2 * uc).real)],
            [4.0 * np.sum((r1 * w * uc).real), 4.0 * np.sum((r2 * w * uc).real)],
        ]
    )


def build_matrices(full_C: np.ndarray, reduced_C: np.ndarray, time: float = 0.0) -> RenormState:
    """Assemble A (full) and B (reduced) and solve for M and its eigenvalues."""
    A = np.array(full_C, dtype=float)
    B = np.array(reduced_C, dtype=float)
    detB = float(B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0])
    flag = abs(detB) < SINGULAR_DET_THRESHOLD
    M, eig = solve_M(A, B)
    return RenormState(
        A=A, B=B, M=M, detB=detB, eig=eig, digits=(0, 0), time=time, b_singular_flag=flag
    )


def solve_M(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, tuple[complex, complex]]:
    """Direct 2x2 solve of A = M B, i.e. M = A adj(B) / det(B).

    A nearly singular B is solved as-is (never regularized); an exactly
    zero determinant yields the all-zero sentinel matrix.
    """
    detB = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    if detB == 0.0:
        M = np.zeros((2, 2))
    else:
        adj = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]])
        M = (A @ adj) / detB
    return M, eigenvalues_2x2(M)


def eigenvalues_2x2(M: np.ndarray) -> tuple[complex, complex]:
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    disc = complex(tr * tr - 4.0 * det) ** 0.5
    return (complex(tr + disc) / 2.0, complex(tr - disc) / 2.0)


def match_eigenvalues(
    previous: tuple[complex, complex], current: tuple[complex, complex]
) -> tuple[complex, complex]:
    """Order the current pair by continuity with the previous ordered pair."""
    straight = abs(current[0] - previous[0]) + abs(current[1] - previous[1])
    swapped = abs(current[1] - previous[0]) + abs(current[0] - previous[1])
    return current if straight <= swapped else (current[1], current[0])


def digits_agreement(x: float, y: float) -> int:
    """Matching significant digits of two reals (relative, clamped to [0, 16])."""
    if x == y:
        return MAX_DIGITS
    rel = abs(x - y) / max(abs(x), abs(y), 1e-300)
    if rel <= 0.0:
        return MAX_DIGITS
    d = int(np.floor(-np.log10(rel)))
    return max(0, min(MAX_DIGITS, d))
