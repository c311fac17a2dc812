"""Fourier-space fields on [0, 2pi) and exact truncated convolutions.

Wavenumbers of a size-M field live on the centered band [-M/2, M/2).
Coefficients are stored densely in that order: index i holds mode
k = i - M/2.  Real-valued solutions are represented by Hermitian
coefficient arrays (u[-k] = conj(u[k])); the unpaired mode at k = -M/2
is kept identically zero so the field stays real under refinement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Band:
    """Half-open contiguous wavenumber range [lo, hi)."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError(f"empty band bounds reversed: [{self.lo}, {self.hi})")

    def __len__(self) -> int:
        return self.hi - self.lo

    def __contains__(self, k: int) -> bool:
        return self.lo <= k < self.hi

    def wavenumbers(self) -> np.ndarray:
        return np.arange(self.lo, self.hi)

    @staticmethod
    def centered(m: int) -> "Band":
        return Band(-m // 2, m // 2)


def _require_grid_size(m: int, minimum: int = 4) -> None:
    if m < minimum or m & (m - 1) != 0:
        raise ValueError(f"grid size must be a power of two >= {minimum}, got {m}")


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier amplitudes of a real field at one instant.

    modes[i] is the coefficient of e^{ikx} with k = i - size/2.
    """

    modes: np.ndarray
    size: int
    time: float = 0.0

    def __post_init__(self):
        _require_grid_size(self.size)
        modes = np.asarray(self.modes, dtype=np.complex128)
        if modes.shape != (self.size,):
            raise ValueError(f"expected {self.size} modes, got shape {modes.shape}")
        if not np.all(np.isfinite(modes.view(np.float64))):
            raise ValueError("non-finite mode amplitudes")
        modes = modes.copy()
        modes[0] = 0.0  # unpaired Nyquist mode
        modes.flags.writeable = False
        object.__setattr__(self, "modes", modes)

    @property
    def band(self) -> Band:
        return Band.centered(self.size)

    def mode(self, k: int) -> complex:
        """Coefficient of wavenumber k (zero outside the stored band)."""
        if k not in self.band:
            return 0.0 + 0.0j
        return complex(self.modes[k + self.size // 2])

    def coefficients_on(self, band: Band) -> np.ndarray:
        """Coefficients on an arbitrary band, zero-filled outside the field."""
        out = np.zeros(len(band), dtype=np.complex128)
        lo = max(band.lo, -self.size // 2)
        hi = min(band.hi, self.size // 2)
        if hi > lo:
            c = self.size // 2
            out[lo - band.lo : hi - band.lo] = self.modes[lo + c : hi + c]
        return out

    def hermitian_defect(self) -> float:
        """Max |u_{-k} - conj(u_k)| over the paired modes."""
        c = self.size // 2
        pos = self.modes[c + 1 :]
        neg = self.modes[c - 1 : 0 : -1]
        defect = np.max(np.abs(neg - np.conj(pos))) if len(pos) else 0.0
        return float(max(defect, abs(self.modes[0])))


@dataclass(frozen=True)
class ModePartition:
    """Resolved band F, unresolved set G and auxiliary padding set I.

    F = [-N/2, N/2), G = [-M/2, M/2) \\ F, and I mirrors G's relation to F
    one level up: I = [-c*M/2, c*M/2) \\ [-M/2, M/2) with c = pad_factor + 1.
    pad_factor=1 gives |I| = M; pad_factor=3 doubles the band for
    sensitivity checks.
    """

    n_resolved: int
    n_total: int
    pad_factor: int = 1

    def __post_init__(self):
        _require_grid_size(self.n_resolved, minimum=2)
        _require_grid_size(self.n_total)
        if self.n_resolved > self.n_total:
            raise ValueError("resolved size exceeds total size")
        if self.pad_factor < 1:
            raise ValueError("pad_factor must be >= 1")

    @property
    def resolved(self) -> Band:
        return Band.centered(self.n_resolved)

    @property
    def full(self) -> Band:
        return Band.centered(self.n_total)

    @property
    def unresolved(self) -> tuple[Band, Band]:
        m, n = self.n_total, self.n_resolved
        return (Band(-m // 2, -n // 2), Band(n // 2, m // 2))

    @property
    def padding(self) -> tuple[Band, Band]:
        m = self.n_total
        outer = (self.pad_factor + 1) * m // 2
        return (Band(-outer, -m // 2), Band(m // 2, outer))


def field_from_sine(m: int) -> SpectralField:
    """Spectral representation of u(x, 0) = sin x on a size-m grid."""
    _require_grid_size(m)
    modes = np.zeros(m, dtype=np.complex128)
    modes[m // 2 + 1] = -0.5j
    modes[m // 2 - 1] = +0.5j
    return SpectralField(modes=modes, size=m, time=0.0)


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


def convolve_direct(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Reference linear convolution by direct summation, O(|a||b|)."""
    la, lb = len(a), len(b)
    out = np.zeros(la + lb - 1, dtype=np.complex128)
    for i in range(la):
        out[i : i + lb] += a[i] * b
    return out


def convolve_fft(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Linear convolution via circular convolution on a zero-padded grid.

    The grid is the smallest power of two >= |a|+|b|-1 so wraparound can
    never alias back into the valid output range.
    """
    n = len(a) + len(b) - 1
    size = _next_pow2(n)
    fa = np.fft.fft(a, size)
    fb = np.fft.fft(b, size)
    return np.fft.ifft(fa * fb)[:n]


def truncated_convolution(
    u: SpectralField,
    support_u: Band,
    v: SpectralField,
    support_v: Band,
    out: Band,
    method: str = "fast",
) -> np.ndarray:
    """c_k = sum_{p in A, q in B, p+q=k} u_p v_q for k in the output band.

    Modes of u outside A (and of v outside B) do not participate.  The
    result is exact: no aliasing for either method.
    """
    a = u.coefficients_on(support_u)
    b = v.coefficients_on(support_v)
    if method == "fast":
        c = convolve_fft(a, b)
    elif method == "direct":
        c = convolve_direct(a, b)
    else:
        raise ValueError(f"unknown method {method!r}")
    conv_band = Band(support_u.lo + support_v.lo, support_u.hi + support_v.hi - 1)
    result = np.zeros(len(out), dtype=np.complex128)
    lo = max(out.lo, conv_band.lo)
    hi = min(out.hi, conv_band.hi)
    if hi > lo:
        result[lo - out.lo : hi - out.lo] = c[lo - conv_band.lo : hi - conv_band.lo]
    return result


def spectral_interpolate(f: SpectralField, m_new: int) -> SpectralField:
    """Refine by appending zero-amplitude high modes (exact on the old grid)."""
    _require_grid_size(m_new)
    if m_new < f.size:
        raise ValueError(f"cannot interpolate {f.size} modes down to {m_new}")
    if m_new == f.size:
        return f
    modes = np.zeros(m_new, dtype=np.complex128)
    off = (m_new - f.size) // 2
    modes[off : off + f.size] = f.modes
    return SpectralField(modes=modes, size=m_new, time=f.time)


def restrict(f: SpectralField, n: int) -> SpectralField:
    """Project onto the resolved band [-n/2, n/2); the new Nyquist is zeroed."""
    _require_grid_size(n)
    if n > f.size:
        raise ValueError(f"cannot restrict {f.size} modes to {n}")
    off = (f.size - n) // 2
    modes = f.modes[off : off + n].copy()
    return SpectralField(modes=modes, size=n, time=f.time)


def eval_realspace(f: SpectralField, x) -> np.ndarray:
    """Evaluate the Fourier sum at positions x in [0, 2pi)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite evaluation points")
    k = f.band.wavenumbers()
    values = np.exp(1j * x[:, None] * k[None, :]) @ f.modes
    residual = np.max(np.abs(values.imag)) if len(values) else 0.0
    scale = max(1.0, float(np.max(np.abs(values.real))) if len(values) else 1.0)
    if residual > 1e-12 * scale:
        raise ValueError(f"imaginary residual {residual:.3e} exceeds 1e-12")
    return values.real


def realspace_grid(f: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """Field values on the M equispaced collocation points (via inverse FFT)."""
    std_order = np.fft.ifftshift(f.modes)
    u = f.size * np.fft.ifft(std_order)
    x = 2.0 * np.pi * np.arange(f.size) / f.size
    return x, u.real


def hermitianize(modes: np.ndarray) -> np.ndarray:
    """Project a centered coefficient array onto Hermitian symmetry in place."""
    m = len(modes)
    c = m // 2
    pos = modes[c + 1 :]
    avg = 0.5 * (pos + np.conj(modes[c - 1 : 0 : -1]))
    modes[c + 1 :] = avg
    modes[c - 1 : 0 : -1] = np.conj(avg)
    modes[c] = modes[c].real
    modes[0] = 0.0
    return modes
