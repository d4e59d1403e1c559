"""Boundary potentials for the linearized equation on half lines.

All three potentials are time-Fourier multipliers built from the limit roots
of z^3 + beta*z + eps + i*tau:

    R  (x >= 0):  e^{r0 x}                       value trace h, slope r0 h
    L1 (x <= 0):  (r1 e^{r2 x} - r2 e^{r1 x})/(r1 - r2)   value f, slope 0
    L2 (x <= 0):  (e^{r1 x} - e^{r2 x})/(r1 - r2)         value 0, slope g

Transforms are evaluated on the damped contour tau - i*eta (eta > 0), which is
the eps = eta member of the defining family: boundary data supported in t >= 0
then yields causal fields and the DFT periodization error of the radiating
components is suppressed by e^{-eta * period}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .roots import cubic_roots_eps, cubic_roots_limit


class PotentialError(ValueError):
    pass


@dataclass
class TimeSeries:
    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.dt <= 0:
            raise PotentialError("dt must be positive")
        if len(self.values) < 16:
            raise PotentialError("need at least 16 samples")

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)


@dataclass
class SpaceTimeField:
    x: np.ndarray
    t: np.ndarray
    values: np.ndarray  # shape (len(x), len(t))

    def __post_init__(self):
        if self.values.shape != (len(self.x), len(self.t)):
            raise PotentialError("field shape inconsistent with grids")


def smooth_window(t, inner: float = 1.0, outer: float = 2.0):
    """C-infinity cutoff: 1 on |t|<=inner, 0 on |t|>=outer, bump transition."""
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    out = np.zeros_like(a)
    out[a <= inner] = 1.0
    mid = (a > inner) & (a < outer)
    s = (a[mid] - inner) / (outer - inner)
    rise = np.exp(-1.0 / s)
    fall = np.exp(-1.0 / (1.0 - s))
    out[mid] = fall / (rise + fall)
    return out


class TimeTransform:
    """Damped rfft pair on a uniform window, continuous-FT normalization.

    forward(f) approximates F[f e^{-eta t}](tau) = f_hat(tau - i eta) on the
    nonnegative DFT frequencies; inverse undoes it including the e^{+eta t}.
    """

    def __init__(self, t0: float, dt: float, n: int, eta: float = 1.0):
        if n % 2:
            raise PotentialError("window length must be even")
        self.t0, self.dt, self.n, self.eta = t0, dt, n, eta
        self.t = t0 + dt * np.arange(n)
        self.taus = 2 * np.pi * np.fft.rfftfreq(n, d=dt)
        self._shift = np.exp(1j * self.taus * (-t0))
        self._damp = np.exp(-eta * self.t)

    def forward(self, f: np.ndarray) -> np.ndarray:
        return np.fft.rfft(f * self._damp) * self.dt * self._shift

    def inverse(self, F: np.ndarray) -> np.ndarray:
        return np.fft.irfft(F / self._shift / self.dt, n=self.n) / self._damp

    def roots(self, beta: float):
        """Roots on the damped contour: the eps = eta member of the family."""
        if self.eta > 0:
            return cubic_roots_eps(self.taus, beta, self.eta)
        r0, r1, r2, _, _, _ = cubic_roots_limit(self.taus, beta)
        return r0, r1, r2


def multiplier_R(r0, x):
    """R multiplier at position x >= 0."""
    return np.exp(r0 * x)


def multiplier_L1(r1, r2, x):
    """L1 multiplier at x <= 0; removable r1 = r2 singularity via expansion."""
    den = r1 - r2
    small = np.abs(den) < 1e-8
    if np.any(small):
        # first-order expansion around the double root: (r e^{rx})' direction
        rs = (r1 + r2) / 2
        series = np.exp(rs * x) * (1 - rs * x)
        main = np.where(small, 1.0, den)
        out = (r1 * np.exp(r2 * x) - r2 * np.exp(r1 * x)) / main
        return np.where(small, series, out)
    return (r1 * np.exp(r2 * x) - r2 * np.exp(r1 * x)) / den


def multiplier_L2(r1, r2, x):
    """L2 multiplier at x <= 0; removable singularity via expansion."""
    den = r1 - r2
    small = np.abs(den) < 1e-8
    if np.any(small):
        rs = (r1 + r2) / 2
        series = x * np.exp(rs * x)
        main = np.where(small, 1.0, den)
        out = (np.exp(r1 * x) - np.exp(r2 * x)) / main
        return np.where(small, series, out)
    return (np.exp(r1 * x) - np.exp(r2 * x)) / den


TRACE_MULTIPLIERS = {
    # kind -> order -> callable(r0, r1, r2)
    "R": {0: lambda r0, r1, r2: np.ones_like(r0), 1: lambda r0, r1, r2: r0,
          2: lambda r0, r1, r2: r0**2},
    "L1": {0: lambda r0, r1, r2: np.ones_like(r0),
           1: lambda r0, r1, r2: np.zeros_like(r0),
           2: lambda r0, r1, r2: -r1 * r2},
    "L2": {0: lambda r0, r1, r2: np.zeros_like(r0),
           1: lambda r0, r1, r2: np.ones_like(r0),
           2: lambda r0, r1, r2: r1 + r2},
}


def _transform_for(ts: TimeSeries, eta: float) -> TimeTransform:
    return TimeTransform(ts.t0, ts.dt, ts.n, eta=eta)


def potential_R(h: TimeSeries, x: float, beta: float, eta: float = 1.0) -> TimeSeries:
    """R potential evaluated at a single x >= 0."""
    if x < 0:
        raise PotentialError("R potential is defined for x >= 0")
    if beta >= 0:
        raise PotentialError("beta must be negative")
    tr = _transform_for(h, eta)
    r0, r1, r2 = tr.roots(beta)
    out = tr.inverse(multiplier_R(r0, x) * tr.forward(np.asarray(h.values, float)))
    return TimeSeries(h.t0, h.dt, out)


def potential_L1(f: TimeSeries, x: float, beta: float, eta: float = 1.0) -> TimeSeries:
    """L1 potential evaluated at a single x <= 0."""
    if x > 0:
        raise PotentialError("L1 potential is defined for x <= 0")
    if beta >= 0:
        raise PotentialError("beta must be negative")
    tr = _transform_for(f, eta)
    r0, r1, r2 = tr.roots(beta)
    out = tr.inverse(multiplier_L1(r1, r2, x) * tr.forward(np.asarray(f.values, float)))
    return TimeSeries(f.t0, f.dt, out)


def potential_L2(g: TimeSeries, x: float, beta: float, eta: float = 1.0) -> TimeSeries:
    """L2 potential evaluated at a single x <= 0."""
    if x > 0:
        raise PotentialError("L2 potential is defined for x <= 0")
    if beta >= 0:
        raise PotentialError("beta must be negative")
    tr = _transform_for(g, eta)
    r0, r1, r2 = tr.roots(beta)
    out = tr.inverse(multiplier_L2(r1, r2, x) * tr.forward(np.asarray(g.values, float)))
    return TimeSeries(g.t0, g.dt, out)


def potential_traces(kind: str, data: TimeSeries, beta: float, order: int,
                     eta: float = 1.0) -> TimeSeries:
    """Exact frequency-domain vertex trace of a potential, derivative order 0..2."""
    if kind not in TRACE_MULTIPLIERS or order not in (0, 1, 2):
        raise PotentialError("kind in {R, L1, L2}, order in {0,1,2}")
    tr = _transform_for(data, eta)
    r0, r1, r2 = tr.roots(beta)
    mult = TRACE_MULTIPLIERS[kind][order](r0, r1, r2)
    out = tr.inverse(mult * tr.forward(np.asarray(data.values, float)))
    return TimeSeries(data.t0, data.dt, out)


@dataclass
class SigmaExtension:
    n: int
    coefficients: np.ndarray


def sigma_coefficients(n: int) -> SigmaExtension:
    """Coefficients c_0..c_n with sum_k c_k 2^{-dk} = (-1)^d for d = 0..n.

    With these, sigma(x) = sum_k c_k e^{-p x / 2^k} on x <= 0 matches e^{p x}
    in value and first n derivatives at 0.  The Vandermonde system in nodes
    2^{-k} degrades quickly; n > 12 is rejected.
    """
    if n < 0 or n > 12:
        raise PotentialError("n must be in [0, 12] (Vandermonde conditioning)")
    A = np.array([[2.0 ** (-d * k) for k in range(n + 1)] for d in range(n + 1)])
    b = np.array([(-1.0) ** d for d in range(n + 1)])
    return SigmaExtension(n=n, coefficients=np.linalg.solve(A, b))


def sigma_left_values(ext: SigmaExtension, p: float, x):
    """sigma(x) = sum_k c_k e^{-p x/2^k} for x <= 0 (matches e^{p x} at 0-)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for k, ck in enumerate(ext.coefficients):
        out += ck * np.exp(-p * x / 2.0**k)
    return out


def decaying_extension_factor(ext: SigmaExtension, p, x: float):
    """Bounded extension of e^{-p x} (x>=0, Re p>0) to x < 0: sum c_k e^{p x/2^k}.

    Matches value and first n derivatives at 0 via the same coefficient system,
    and decays as x -> -inf.  p may be a complex array.
    """
    p = np.asarray(p)
    out = np.zeros(p.shape, dtype=complex)
    for k, ck in enumerate(ext.coefficients):
        out += ck * np.exp(p * x / 2.0**k)
    return out


def extension_coefficients_hestenes(n: int = 4) -> np.ndarray:
    """Coefficients for reflecting samples across an endpoint with C^n matching.

    For data u on x >= 0, the extension u(-x) := sum_k c_k u(x / 2^k) matches
    value and n derivatives at 0; same linear system as sigma_coefficients.
    """
    return sigma_coefficients(n).coefficients
