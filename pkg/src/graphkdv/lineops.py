"""Whole-line pseudo-spectral operators: free group and Duhamel integral.

All operators act in the (d/dt + d^3/dx^3 + beta d/dx) convention: the group
multiplier is e^{i t (xi^3 - beta xi)}.  The spatial grid is periodic with
x = 0 at index 0 (FFT layout), so vertex traces are plain spectral sums.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson


class LineOpsError(ValueError):
    pass


@dataclass(frozen=True)
class LineGrid:
    """Periodic grid on [-X, X) with n_x points, FFT layout (x=0 first)."""

    half_width: float
    n_x: int

    def __post_init__(self):
        if self.n_x & (self.n_x - 1):
            raise LineOpsError("n_x must be a power of two")

    @property
    def h(self) -> float:
        return 2 * self.half_width / self.n_x

    @property
    def x(self) -> np.ndarray:
        xs = self.h * np.arange(self.n_x)
        return np.where(xs >= self.half_width, xs - 2 * self.half_width, xs)

    @property
    def xi(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_x, d=self.h)

    def index_of(self, x: float) -> int:
        j = int(round(x / self.h)) % self.n_x
        if abs(self.x[j] - x) > 1e-9 * (1 + abs(x)):
            raise LineOpsError(f"x={x} is not a grid node")
        return j


@dataclass
class LineField:
    """Real space-time samples on a periodic line grid."""

    grid: LineGrid
    t: np.ndarray
    values: np.ndarray  # (len(t), n_x)

    def __post_init__(self):
        if self.values.shape != (len(self.t), self.grid.n_x):
            raise LineOpsError("field shape inconsistent with grids")


def boundary_mass_fraction(phi: np.ndarray, grid: LineGrid, frac: float = 0.05) -> float:
    """Fraction of the L2 mass in the outer frac of the domain."""
    x = grid.x
    outer = np.abs(x) > (1 - frac) * grid.half_width
    total = float(np.sum(phi**2))
    if total == 0:
        return 0.0
    return float(np.sum(phi[outer] ** 2)) / total


def airy_group(phi: np.ndarray, t, beta: float, grid: LineGrid,
               mass_floor: float = 1e-8):
    """Free evolution e^{-t(d^3+beta d)} phi on the periodic grid.

    Exact per Fourier mode: multiply phi_hat by e^{i t (xi^3 - beta xi)}.
    Warns if phi carries mass near the domain edge (wrap-around risk).
    """
    phi = np.asarray(phi, dtype=float)
    if boundary_mass_fraction(phi, grid) > mass_floor:
        warnings.warn("initial data carries mass near the periodic boundary",
                      stacklevel=2)
    disp = grid.xi**3 - beta * grid.xi
    phat = np.fft.fft(phi)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((len(ts), grid.n_x))
    for k, tv in enumerate(ts):
        out[k] = np.fft.ifft(np.exp(1j * tv * disp) * phat).real
    return out[0] if np.isscalar(t) or np.asarray(t).ndim == 0 else out


def spectral_traces(phi_hat: np.ndarray, t, beta: float, grid: LineGrid,
                    orders=(0, 1, 2), x0: float = 0.0, coef_floor: float = 1e-17):
    """d^j/dx^j of the free evolution at x = x0 over a time grid.

    Direct frequency sums restricted to modes with non-negligible coefficients
    (smooth data decays fast, so this is cheap).
    """
    ts = np.asarray(t, dtype=float)
    xi = grid.xi
    keep = np.abs(phi_hat) > coef_floor * np.abs(phi_hat).max()
    xi_k = xi[keep]
    co = phi_hat[keep] * np.exp(1j * xi_k * x0) / grid.n_x
    disp = xi_k**3 - beta * xi_k
    out = []
    phase = np.exp(1j * np.outer(ts, disp))
    for j in orders:
        out.append((phase @ ((1j * xi_k) ** j * co)).real)
    return out


def duhamel_K(w: LineField, beta: float) -> LineField:
    """Variation-of-constants integral of the free group against w.

    K w(t) = S(t) * cumulative integral of S(-t') w(t'); composite Simpson in
    time, spectral in space.  K w(x, 0) = 0 by construction (time grid must
    contain t = 0).
    """
    t = w.t
    i0 = int(np.argmin(np.abs(t)))
    if abs(t[i0]) > 1e-12:
        raise LineOpsError("time grid must contain t = 0")
    disp = w.grid.xi**3 - beta * w.grid.xi
    what = np.fft.fft(w.values, axis=1)
    integrand = what * np.exp(-1j * np.outer(t, disp))
    acc = cumulative_simpson(integrand, x=t, axis=0, initial=0.0)
    acc = acc - acc[i0]  # anchor the antiderivative at t = 0
    out_hat = acc * np.exp(1j * np.outer(t, disp))
    return LineField(w.grid, t, np.fft.ifft(out_hat, axis=1).real)
