"""Discrete space-time norms with dispersive Fourier weights, and empirical
probes of the linear/bilinear estimates used by the fixed-point argument.

The primal weight is

    nu(tau, xi) = (1 + |tau - xi^3 + beta xi|)^b + chi_[-1,1](xi) (1 + |tau|)^sigma

and the dual weight gamma replaces each term by its reciprocal (with exponent
1 - sigma on the low-frequency part).  Norms are plain weighted l2 sums of the
2D DFT over a periodic-in-x, windowed-in-t grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lineops import LineGrid, LineField, airy_group, duhamel_K
from .potentials import smooth_window


class BourgainError(ValueError):
    pass


@dataclass(frozen=True)
class BourgainWeights:
    s: float = 1.0
    b: float = 7.0 / 16
    sigma: float = 0.55
    beta: float = -1.0

    def __post_init__(self):
        if self.s < 0:
            raise BourgainError("s must be nonnegative")
        if not (0 < self.b < 0.5):
            raise BourgainError("b must lie in (0, 1/2)")
        if not (0.5 < self.sigma < 2.0 / 3):
            raise BourgainError("sigma must lie in (1/2, 2/3)")


def _weights_nu_gamma(taus, xis, w: BourgainWeights):
    T, X = np.meshgrid(taus, xis, indexing="ij")
    off = np.abs(T - X**3 + w.beta * X)
    low = (np.abs(X) <= 1.0).astype(float)
    nu = (1 + off) ** w.b + low * (1 + np.abs(T)) ** w.sigma
    gamma = 1.0 / (1 + off) ** w.b + low / (1 + np.abs(T)) ** (1 - w.sigma)
    sob = (1 + np.abs(X) + np.abs(T) ** (1.0 / 3)) ** w.s
    return nu, gamma, sob


def _field_fft(field: LineField):
    """Continuous-normalization 2D transform over (t, x)."""
    nt, nx = field.values.shape
    dt = field.t[1] - field.t[0]
    h = field.grid.h
    F = np.fft.fft2(field.values) * dt * h
    taus = 2 * np.pi * np.fft.fftfreq(nt, d=dt)
    xis = 2 * np.pi * np.fft.fftfreq(nx, d=h)
    return F, taus, xis, dt, h


def bourgain_norm(field: LineField, w: BourgainWeights) -> float:
    """Discrete X^{s,b,beta,sigma} norm of a space-time field."""
    F, taus, xis, dt, h = _field_fft(field)
    nu, _, sob = _weights_nu_gamma(taus, xis, w)
    dtau = 2 * np.pi / (len(taus) * dt)
    dxi = 2 * np.pi / (len(xis) * h)
    val = np.sum((sob * nu) ** 2 * np.abs(F) ** 2) * dtau * dxi / (2 * np.pi) ** 2
    return float(np.sqrt(val))


def dual_norm_Y(field: LineField, w: BourgainWeights) -> float:
    """Discrete Y^{s,b,beta,sigma} norm (reciprocal weight gamma)."""
    F, taus, xis, dt, h = _field_fft(field)
    _, gamma, sob = _weights_nu_gamma(taus, xis, w)
    dtau = 2 * np.pi / (len(taus) * dt)
    dxi = 2 * np.pi / (len(xis) * h)
    val = np.sum((sob * gamma) ** 2 * np.abs(F) ** 2) * dtau * dxi / (2 * np.pi) ** 2
    return float(np.sqrt(val))


def hs_norm_line(phi: np.ndarray, grid: LineGrid, s: float) -> float:
    """(1+|xi|)^s weighted L2 norm on the periodic line."""
    ph = np.fft.fft(phi) * grid.h
    dxi = 2 * np.pi / (grid.n_x * grid.h)
    val = np.sum((1 + np.abs(grid.xi)) ** (2 * s) * np.abs(ph) ** 2) * dxi / (2 * np.pi)
    return float(np.sqrt(val))


def random_smooth_profile(grid: LineGrid, rng, n_modes: int = 6,
                          width_range=(0.5, 2.0), amp: float = 1.0):
    """Random superposition of Gaussians (decays at the domain edge)."""
    x = grid.x
    out = np.zeros(grid.n_x)
    for _ in range(n_modes):
        c = rng.uniform(-grid.half_width / 4, grid.half_width / 4)
        w = rng.uniform(*width_range)
        a = rng.normal(scale=amp)
        out += a * np.exp(-((x - c) / w) ** 2)
    return out


@dataclass(frozen=True)
class ProbeGrids:
    half_width: float = 32.0
    n_x: int = 512
    t_pad: float = 4.0
    n_t: int = 256


def _window_grid(pg: ProbeGrids):
    grid = LineGrid(pg.half_width, pg.n_x)
    dt = 2 * pg.t_pad / pg.n_t
    t = -pg.t_pad + dt * np.arange(pg.n_t)
    return grid, t


def estimate_probes(w: BourgainWeights, n_samples: int = 50, seed: int = 0,
                    grids: ProbeGrids | None = None,
                    psi_prefactor: bool = False) -> dict:
    """Empirical constants for the group, Duhamel, time-localization and
    bilinear estimates over random smooth samples.

    Each block reports the sample ratios' max (the fitted constant) and a
    violation count for non-finite ratios (expected zero).  The localization
    block reports the log-log slope of ||psi_T f||_X against T for both the
    plain psi(t/T) localizer and the (1/T)-prefactored variant.
    """
    if n_samples < 50:
        raise BourgainError("need at least 50 samples")
    pg = grids or ProbeGrids()
    grid, t = _window_grid(pg)
    rng = np.random.default_rng(seed)
    psi = smooth_window(t)
    beta = w.beta

    group_ratios = []
    duhamel_ratios = []
    bilinear_ratios = []
    for _ in range(n_samples):
        phi = random_smooth_profile(grid, rng)
        flow = airy_group(phi, t, beta, grid)
        fld = LineField(grid, t, psi[:, None] * flow)
        group_ratios.append(bourgain_norm(fld, w) / max(hs_norm_line(phi, grid, w.s), 1e-300))

        forcing = random_smooth_profile(grid, rng)
        envelope = np.exp(-((t + 0.3 * rng.standard_normal()) ** 2))
        wfield = LineField(grid, t, envelope[:, None] * forcing[None, :])
        kw = duhamel_K(wfield, beta)
        kfld = LineField(grid, t, psi[:, None] * kw.values)
        duhamel_ratios.append(bourgain_norm(kfld, w)
                              / max(dual_norm_Y(wfield, w), 1e-300))

        v1 = random_smooth_profile(grid, rng)
        v2 = random_smooth_profile(grid, rng)
        env1 = np.exp(-(t / 1.5) ** 2)
        f1 = LineField(grid, t, env1[:, None] * v1[None, :])
        f2 = LineField(grid, t, env1[:, None] * v2[None, :])
        prod = f1.values * f2.values
        dprod = np.fft.ifft(1j * grid.xi * np.fft.fft(prod, axis=1), axis=1).real
        bfld = LineField(grid, t, psi[:, None] * dprod)
        bilinear_ratios.append(
            dual_norm_Y(bfld, w)
            / max(bourgain_norm(f1, w) * bourgain_norm(f2, w), 1e-300))

    # time-localization exponent probe on a fixed field
    phi = random_smooth_profile(grid, rng)
    flow = airy_group(phi, t, beta, grid)
    base = LineField(grid, t, psi[:, None] * flow)
    Ts = np.array([0.1, 0.2, 0.4, 0.8])
    norms_plain, norms_prefactor = [], []
    for T in Ts:
        loc = smooth_window(t / T)
        norms_plain.append(bourgain_norm(
            LineField(grid, t, loc[:, None] * base.values), w))
        norms_prefactor.append(bourgain_norm(
            LineField(grid, t, (loc / T)[:, None] * base.values), w))
    slope_plain = float(np.polyfit(np.log(Ts), np.log(norms_plain), 1)[0])
    slope_prefactor = float(np.polyfit(np.log(Ts), np.log(norms_prefactor), 1)[0])
    predicted = 0.5 - w.sigma - w.s / 3

    def block(ratios):
        arr = np.asarray(ratios)
        return {
            "constant": float(arr.max()),
            "mean": float(arr.mean()),
            "violations": int(np.sum(~np.isfinite(arr))),
        }

    return {
        "group": block(group_ratios),
        "duhamel": block(duhamel_ratios),
        "bilinear": block(bilinear_ratios),
        "psi_T": {
            "T_values": Ts.tolist(),
            "slope_plain": slope_plain,
            "slope_prefactor": slope_prefactor,
            "predicted_exponent": predicted,
            "prefactor_default": bool(psi_prefactor),
        },
        "samples": n_samples,
    }
