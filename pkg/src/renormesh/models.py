"""Right-hand-side term families for the spectral Burgers hierarchy.

Every level of the hierarchy shares one functional form

    du_k/dt = a1 * r1_k + a2 * r2_k

where r1 is the quadratic convection term plus viscous damping and r2 is
the cubic memory term that drains energy into a designated band of
higher modes, carrying an explicit factor of elapsed time.  The full
system uses its padding band for r2 (with a2 = 0 in the dynamics); the
reduced closures use the unresolved band.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import (
    Band,
    ModePartition,
    SpectralField,
    convolve_fft,
    truncated_convolution,
)


@dataclass(frozen=True)
class CoefficientVector:
    a1: float
    a2: float

    def __post_init__(self):
        if not (np.isfinite(self.a1) and np.isfinite(self.a2)):
            raise ValueError("coefficients must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2])


@dataclass(frozen=True)
class ModelKind:
    """Reduced-model family: which coefficients weight the two terms."""

    name: str
    coefficients: CoefficientVector

    @staticmethod
    def t_model() -> "ModelKind":
        return ModelKind("t-model", CoefficientVector(1.0, 1.0))

    @staticmethod
    def galerkin() -> "ModelKind":
        return ModelKind("galerkin", CoefficientVector(1.0, 0.0))

    @staticmethod
    def identified(coeffs: CoefficientVector) -> "ModelKind":
        return ModelKind("identified", coeffs)


FULL_COEFFICIENTS = CoefficientVector(1.0, 0.0)


@dataclass(frozen=True)
class TermEvaluation:
    """Per-mode values of both term families on a target band."""

    r1: np.ndarray
    r2: np.ndarray
    target_range: Band

    def __post_init__(self):
        if self.r1.shape != (len(self.target_range),) or self.r2.shape != self.r1.shape:
            raise ValueError("term arrays must match the target range")


def _covers(qs: np.ndarray, q_bands: Sequence[Band]) -> np.ndarray:
    mask = np.zeros(qs.shape, dtype=bool)
    for qb in q_bands:
        mask |= (qs >= qb.lo) & (qs < qb.hi)
    return mask


def _check_disjoint(p: Band, q_bands: Sequence[Band]) -> None:
    for q in q_bands:
        if q.lo < p.hi and p.lo < q.hi:
            raise ValueError(f"band {q} overlaps the resolved band {p}")


def term1_array(u: np.ndarray, support: Band, nu: float) -> np.ndarray:
    """Quadratic + viscous term for coefficients u given exactly on `support`."""
    k = support.wavenumbers()
    conv = convolve_fft(u, u)
    # self-convolution support is [2 lo, 2 hi - 1); slice back onto `support`
    start = support.lo - 2 * support.lo
    c_k = conv[start : start + len(support)]
    return -0.5j * k * c_k - nu * k**2 * u


def term2_array(u: np.ndarray, support: Band, q_bands: Sequence[Band], t: float) -> np.ndarray:
    """Cubic memory term for coefficients u given exactly on `support`.

    Stage one builds w_q = -t (iq/2) [u*u]_q on the unresolved bands;
    stage two convolves u against w from both sides and reads the result
    back on `support`.
    """
    _check_disjoint(support, q_bands)
    if t == 0.0:
        return np.zeros(len(support), dtype=np.complex128)
    conv = convolve_fft(u, u)
    conv_band = Band(2 * support.lo, 2 * support.hi - 1)
    q = conv_band.wavenumbers()
    w = np.zeros_like(conv)
    for qb in q_bands:
        lo = max(qb.lo, conv_band.lo)
        hi = min(qb.hi, conv_band.hi)
        if hi > lo:
            sl = slice(lo - conv_band.lo, hi - conv_band.lo)
            w[sl] = -t * 0.5j * q[sl] * conv[sl]
    # a mode feeds the memory field only if its conjugate partner is also
    # unresolved; an unpaired edge mode is not part of a real field
    w[~_covers(-q, q_bands)] = 0.0
    d = convolve_fft(u, w)
    d_band = Band(support.lo + conv_band.lo, support.hi + conv_band.hi - 1)
    k = support.wavenumbers()
    start = support.lo - d_band.lo
    # u*w and w*u contribute identically, hence the factor 2
    return -1.0j * k * d[start : start + len(support)]


def _mirror_half(r_half: np.ndarray, h: int) -> np.ndarray:
    out = np.empty(2 * h, dtype=np.complex128)
    out[0] = 0.0
    out[h:] = r_half
    out[h - 1 : 0 : -1] = np.conj(r_half[1:])
    return out


def _hermitian_state(u: np.ndarray) -> bool:
    return u[0] == 0.0 and np.array_equal(u[1:], np.conj(u[:0:-1]))


def term1_hermitian(u: np.ndarray, h: int, nu: float) -> np.ndarray:
    """term1 via real-space products for a Hermitian state on [-h, h).

    The padded grid of 4h points holds the self-convolution (support
    2h - 2) without circular aliasing.
    """
    p = 4 * h
    half = np.zeros(p // 2 + 1, dtype=np.complex128)
    half[:h] = u[h:]
    y = np.fft.irfft(half, p) * p
    c = np.fft.rfft(y * y) / p
    k = np.arange(h)
    r_half = -0.5j * k * c[:h] - nu * k**2 * u[h:]
    return _mirror_half(r_half, h)


def term2_hermitian(u: np.ndarray, h: int, q_bands: Sequence[Band], t: float) -> np.ndarray:
    """term2 via real-space products for a Hermitian state on [-h, h).

    The positive-q mask determines w; the negative bands are its mirror
    image (conjugate-pairing excludes any unpaired edge mode, so the
    memory field is itself the spectrum of a real field).
    """
    if t == 0.0:
        return np.zeros(2 * h, dtype=np.complex128)
    p = 4 * h
    half = np.zeros(p // 2 + 1, dtype=np.complex128)
    half[:h] = u[h:]
    y = np.fft.irfft(half, p) * p
    c = np.fft.rfft(y * y) / p
    w_half = np.zeros_like(c)
    q = np.arange(p // 2 + 1)
    for qb in q_bands:
        lo, hi = max(qb.lo, 1), min(qb.hi, p // 2 + 1)
        if hi > lo:
            w_half[lo:hi] = -t * 0.5j * q[lo:hi] * c[lo:hi]
    paired = _covers(q, q_bands) & _covers(-q, q_bands)
    w_half[~paired] = 0.0
    z = np.fft.irfft(w_half, p) * p
    d_half = np.fft.rfft(y * z)[:h] / p
    k = np.arange(h)
    return _mirror_half(-1.0j * k * d_half, h)


def _mirrored_bands(q_bands: Sequence[Band]) -> bool:
    if len(q_bands) != 2:
        return False
    neg, pos = sorted(q_bands, key=lambda b: b.lo)
    return neg.lo == -pos.hi and neg.hi == -pos.lo


def term1(u: SpectralField, support: Band, nu: float) -> np.ndarray:
    """r1_k = -(ik/2) sum_{p+q=k; p,q in S} u_p u_q - nu k^2 u_k on S."""
    if nu < 0:
        raise ValueError("viscosity must be nonnegative")
    return term1_array(u.coefficients_on(support), support, nu)


def term2(u: SpectralField, resolved: Band, unresolved: Sequence[Band] | Band, t: float) -> np.ndarray:
    """r2_k on the resolved band, with energy routed through `unresolved`."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    q_bands = [unresolved] if isinstance(unresolved, Band) else list(unresolved)
    return term2_array(u.coefficients_on(resolved), resolved, q_bands, t)


def term2_direct(u: SpectralField, resolved: Band, unresolved: Sequence[Band] | Band, t: float) -> np.ndarray:
    """Brute-force triple-sum evaluation of the cubic term (test oracle)."""
    q_bands = [unresolved] if isinstance(unresolved, Band) else list(unresolved)
    _check_disjoint(resolved, q_bands)
    in_bands = lambda k: any(qb.lo <= k < qb.hi for qb in q_bands)
    q_set = sorted(
        {k for qb in q_bands for k in range(qb.lo, qb.hi) if in_bands(-k)}
    )
    w = {}
    for qk in q_set:
        acc = 0.0j
        for r in range(resolved.lo, resolved.hi):
            s = qk - r
            if s in resolved:
                acc += u.mode(r) * u.mode(s)
        w[qk] = -t * 0.5j * qk * acc
    out = np.zeros(len(resolved), dtype=np.complex128)
    for i, k in enumerate(resolved.wavenumbers()):
        acc = 0.0j
        for p in range(resolved.lo, resolved.hi):
            qk = k - p
            if qk in w:
                acc += u.mode(p) * w[qk]
        for p in q_set:
            qk = k - p
            if qk in resolved:
                acc += w[p] * u.mode(qk)
        out[i] = -0.5j * k * acc
    return out


class BurgersSystem:
    """One level of the hierarchy: modes on a band, memory term on q_bands.

    Instantiate with the full band and the padding set for the full
    system, or with the resolved band and the unresolved set for a
    reduced closure.  States passed to `rhs`/`terms` are centered
    coefficient arrays over `band`.
    """

    def __init__(self, band: Band, q_bands: Sequence[Band], coefficients: CoefficientVector, nu: float):
        if nu < 0:
            raise ValueError("viscosity must be nonnegative")
        _check_disjoint(band, list(q_bands))
        self.band = band
        self.q_bands = list(q_bands)
        self.coefficients = coefficients
        self.nu = nu
        # real-FFT fast path needs a symmetric band and mirrored q bands
        self._symmetric = band.lo == -band.hi and _mirrored_bands(self.q_bands)

    @staticmethod
    def full(partition: ModePartition, nu: float) -> "BurgersSystem":
        return BurgersSystem(partition.full, partition.padding, FULL_COEFFICIENTS, nu)

    @staticmethod
    def reduced(partition: ModePartition, model: ModelKind, nu: float) -> "BurgersSystem":
        return BurgersSystem(partition.resolved, partition.unresolved, model.coefficients, nu)

    @property
    def size(self) -> int:
        return len(self.band)

    def stable_step(self, t: float) -> float:
        """Explicit-step bound for this system at time t (unit-amplitude data).

        Convection limits dt to O(1/k_max); the active memory term behaves
        like a nonlinear diffusion with coefficient ~ t, limiting dt to
        O(1/(t k_max^2)); explicit viscosity adds the usual O(1/(nu k^2)).
        """
        k_max = max(abs(self.band.lo), self.band.hi - 1)
        dt = 1.0 / k_max
        if self.coefficients.a2 != 0.0:
            dt = min(dt, 3.0 / (max(t, 1e-6) * k_max**2))
        if self.nu > 0.0:
            dt = min(dt, 1.5 / (self.nu * k_max**2))
        return dt

    def _fast(self, y: np.ndarray) -> bool:
        return self._symmetric and _hermitian_state(y)

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        if self._fast(y):
            dy = self.coefficients.a1 * term1_hermitian(y, self.band.hi, self.nu)
            if self.coefficients.a2 != 0.0:
                dy += self.coefficients.a2 * term2_hermitian(y, self.band.hi, self.q_bands, t)
            return dy
        dy = self.coefficients.a1 * term1_array(y, self.band, self.nu)
        if self.coefficients.a2 != 0.0:
            dy = dy + self.coefficients.a2 * term2_array(y, self.band, self.q_bands, t)
        dy[0] = 0.0  # keep the unpaired Nyquist mode dormant
        return dy

    def terms(self, t: float, y: np.ndarray) -> TermEvaluation:
        """Both term families on demand (matrix assembly), regardless of a."""
        if self._fast(y):
            r1 = term1_hermitian(y, self.band.hi, self.nu)
            r2 = term2_hermitian(y, self.band.hi, self.q_bands, t)
        else:
            r1 = term1_array(y, self.band, self.nu)
            r2 = term2_array(y, self.band, self.q_bands, t)
            r1[0] = 0.0
            r2[0] = 0.0
        return TermEvaluation(r1=r1, r2=r2, target_range=self.band)


def rhs(
    u: SpectralField,
    partition: ModePartition,
    a: CoefficientVector,
    nu: float,
    t: float,
    role: str,
) -> np.ndarray:
    """Coefficient-weighted derivative on the role's target band."""
    if role == "full":
        system = BurgersSystem(partition.full, partition.padding, a, nu)
    elif role == "reduced":
        system = BurgersSystem(partition.resolved, partition.unresolved, a, nu)
    else:
        raise ValueError(f"unknown role {role!r}")
    if u.size != len(system.band):
        raise ValueError(f"field size {u.size} does not match {role} band {system.band}")
    return system.rhs(t, u.coefficients_on(system.band))
