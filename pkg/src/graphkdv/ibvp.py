"""Linear initial-boundary value solvers on half lines.

Spectral route: free flow of an extended initial datum plus boundary-potential
corrections chosen so the vertex traces match the prescribed data (the trace
identities make the correction solve diagonal).  Finite-difference route: a
CN scheme on the truncated half line with the boundary data imposed as rows,
used as the independent oracle for the convergence cross-check.

Conventions follow the half-line problems of the linearized equation
(d/dt + d^3 + beta d) v = 0: the right problem (x > 0) takes one boundary
condition v(0,t) = f(t); the left problem (x < 0) takes v(0,t) = g(t) and
v_x(0,t) = h(t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .fd import fd_weights
from .lineops import LineGrid, spectral_traces
from .potentials import (
    TimeTransform,
    SpaceTimeField,
    TimeSeries,
    smooth_window,
    multiplier_R,
    multiplier_L1,
    multiplier_L2,
    sigma_coefficients,
)


class IBVPError(ValueError):
    pass


@dataclass(frozen=True)
class IBVPConfig:
    half_width: float = 64.0
    n_x: int = 4096
    t_pad: float = 8.0
    n_t: int = 1024
    eta: float = 1.0
    window_inner: float = 1.0
    extension_order: int = 4

    @property
    def dt(self) -> float:
        return 2 * self.t_pad / self.n_t


def _extend_halfline(v0, h_data: float, line: LineGrid, order: int, side: str):
    """Whole-line array from half-line samples or a callable."""
    x = line.x
    if callable(v0):
        return np.asarray(v0(x), dtype=float)
    from .graph_evolution import extend_samples

    vals = extend_samples(np.asarray(v0, float), h_data, line, order)
    if side == "left":
        vals = vals[(-np.arange(line.n_x)) % line.n_x]
    return vals


def _causal_window(t: np.ndarray, inner: float):
    return smooth_window(t, inner, 2 * inner) * (t >= -1e-12)


def linear_ibvp_right(v0, f: TimeSeries, beta: float,
                      x_out: np.ndarray, t_out: np.ndarray,
                      h_data: float | None = None,
                      config: IBVPConfig | None = None) -> SpaceTimeField:
    """Right half-line problem: v(0,t) = f(t), one boundary condition.

    v0 is a callable on R (already extended) or half-line outward samples with
    spacing h_data.  The correction R potential is driven by the causal
    windowed mismatch f - trace(S v0).
    """
    cfg = config or IBVPConfig()
    if beta >= 0:
        raise IBVPError("beta must be negative")
    line = LineGrid(cfg.half_width, cfg.n_x)
    tr = TimeTransform(-cfg.t_pad, cfg.dt, cfg.n_t, eta=cfg.eta)
    t = tr.t
    vals = _extend_halfline(v0, h_data, line, cfg.extension_order, "right")
    vhat = np.fft.fft(vals)
    trace0 = spectral_traces(vhat, t, beta, line, orders=(0,))[0]
    f_grid = np.interp(t, f.t, np.asarray(f.values, float), left=0.0, right=0.0)
    if abs(f_grid[np.argmin(np.abs(t))] - trace0[np.argmin(np.abs(t))]) > 1e-6:
        import warnings

        warnings.warn("corner data f(0) != v0(0); solution is generalized",
                      stacklevel=2)
    mism = (f_grid - trace0) * _causal_window(t, cfg.window_inner)
    hhat = tr.forward(mism)
    r0, r1, r2 = tr.roots(beta)
    disp = line.xi**3 - beta * line.xi
    t_idx = np.array([int(round((tv + cfg.t_pad) / cfg.dt)) for tv in t_out])
    out = np.empty((len(x_out), len(t_out)))
    idx = [line.index_of(float(xv)) for xv in x_out]
    for k, ti in enumerate(t_idx):
        free = np.fft.ifft(np.exp(1j * t[ti] * disp) * vhat).real
        out[:, k] = free[idx]
    for j, xv in enumerate(x_out):
        corr = tr.inverse(multiplier_R(r0, float(xv)) * hhat)
        out[j, :] += corr[t_idx]
    return SpaceTimeField(x=np.asarray(x_out, float), t=np.asarray(t_out, float),
                          values=out)


def linear_ibvp_left(w0, g: TimeSeries, h: TimeSeries, beta: float,
                     x_out: np.ndarray, t_out: np.ndarray,
                     h_data: float | None = None,
                     config: IBVPConfig | None = None) -> SpaceTimeField:
    """Left half-line problem: v(0,t) = g(t) and v_x(0,t) = h(t).

    The value correction rides on the L1 potential and the slope correction on
    L2; the trace identities make this exactly diagonal.
    """
    cfg = config or IBVPConfig()
    if beta >= 0:
        raise IBVPError("beta must be negative")
    line = LineGrid(cfg.half_width, cfg.n_x)
    tr = TimeTransform(-cfg.t_pad, cfg.dt, cfg.n_t, eta=cfg.eta)
    t = tr.t
    vals = _extend_halfline(w0, h_data, line, cfg.extension_order, "left")
    vhat = np.fft.fft(vals)
    tr0, tr1 = spectral_traces(vhat, t, beta, line, orders=(0, 1))
    g_grid = np.interp(t, g.t, np.asarray(g.values, float), left=0.0, right=0.0)
    h_grid = np.interp(t, h.t, np.asarray(h.values, float), left=0.0, right=0.0)
    win = _causal_window(t, cfg.window_inner)
    fhat = tr.forward((g_grid - tr0) * win)   # L1 carries the value trace
    ghat = tr.forward((h_grid - tr1) * win)   # L2 carries the slope trace
    r0, r1, r2 = tr.roots(beta)
    disp = line.xi**3 - beta * line.xi
    t_idx = np.array([int(round((tv + cfg.t_pad) / cfg.dt)) for tv in t_out])
    out = np.empty((len(x_out), len(t_out)))
    idx = [line.index_of(float(xv)) for xv in x_out]
    for k, ti in enumerate(t_idx):
        free = np.fft.ifft(np.exp(1j * t[ti] * disp) * vhat).real
        out[:, k] = free[idx]
    for j, xv in enumerate(x_out):
        m1 = multiplier_L1(r1, r2, float(xv))
        m2 = multiplier_L2(r1, r2, float(xv))
        corr = tr.inverse(m1 * fhat + m2 * ghat)
        out[j, :] += corr[t_idx]
    return SpaceTimeField(x=np.asarray(x_out, float), t=np.asarray(t_out, float),
                          values=out)


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------

def fd_ibvp_halfline(side: str, v0: np.ndarray, bdata, beta: float,
                     h: float, dt: float, T: float,
                     sponge_frac: float = 0.2, sponge_amp: float = 5.0):
    """CN finite-difference solution of the linear half-line problem.

    side='right': samples on x in [0, L], boundary rows v(0)=f(t) plus a ghost
    closed by the interior scheme; side='left': v(0)=g, v_x(0)=h.  Outward
    storage (index j <-> |x| = j*h) with the odd-derivative sign flip on the
    left problem.  Returns (times, values[n_steps+1, m]).
    """
    v0 = np.asarray(v0, dtype=float)
    m = len(v0)
    sgn = +1.0 if side == "right" else -1.0
    # physical d/dx = sgn * d/ds in outward coordinates
    w3 = np.array([-0.5, 1.0, 0.0, -1.0, 0.5]) / h**3
    w1 = np.array([-0.5, 0.0, 0.5]) / h
    n_bc = 1 if side == "right" else 2
    # DOFs: ghost(-1), 0..m-1
    N = m + 1

    def ix(j):
        return j + 1

    x = np.arange(m) * h
    L = (m - 1) * h
    wz = sponge_frac * L
    sigma = np.where(x > L - wz, ((x - (L - wz)) / wz) ** 2, 0.0) * sponge_amp

    kl = ku = 4
    A = np.zeros((kl + ku + 1, N))
    rows = np.arange(1, m - 2)
    for k in range(5):
        cols = rows - 2 + k
        np.add.at(A, (ku + rows + 1 - (cols + 1), cols + 1),
                  np.full(len(rows), -(w3[k]) * sgn))
    for k in range(3):
        cols = rows - 1 + k
        np.add.at(A, (ku + rows + 1 - (cols + 1), cols + 1),
                  np.full(len(rows), -(w1[k]) * beta * sgn))
    np.add.at(A, (np.full(len(rows), ku), rows + 1), -sigma[rows])
    # note: interior operator rows encode dv/dt = -(sgn)(d3 + beta d1)v - sponge
    n_steps = int(round(T / dt))
    times = dt * np.arange(n_steps + 1)
    out = np.empty((n_steps + 1, m))
    out[0] = v0
    u = np.zeros(N)
    u[1:] = v0
    u[0] = v0[1]  # ghost guess
    pde = np.zeros(N, dtype=bool)
    pde[rows + 1] = True

    def bvals(t):
        if side == "right":
            f = bdata
            return (np.interp(t, f.t, np.asarray(f.values, float), left=0.0, right=0.0),)
        g, hh = bdata
        return (np.interp(t, g.t, np.asarray(g.values, float), left=0.0, right=0.0),
                np.interp(t, hh.t, np.asarray(hh.values, float), left=0.0, right=0.0))

    d1g = np.array([-0.5, 0.0, 0.5]) / h  # ghost-centered outward first derivative

    for n in range(n_steps):
        lhs = -0.5 * A
        lhs[ku, :] += 1.0 / dt
        rhs = u / dt + 0.5 * _apply_banded(A, u, kl, ku)
        lhs[ku, ~pde] = 0.0
        rhs[~pde] = 0.0
        tn1 = (n + 1) * dt
        bv = bvals(tn1)
        # boundary rows
        r = ix(0)
        lhs[ku + r - r, r] = 1.0
        rhs[r] = bv[0]
        if side == "right":
            # ghost slot: CN row of the PDE applied at j=0 with the biased
            # one-sided stencils {-1..3} (closes the ghost at O(h^2))
            r = ix(-1)
            off = np.array([-1, 0, 1, 2, 3])
            a_off = -(sgn * fd_weights(off, 3) / h**3
                      + beta * sgn * fd_weights(off, 1) / h)
            rhs[r] = u[ix(0)] / dt
            lhs[ku + r - ix(0), ix(0)] += 1.0 / dt
            for k, o in enumerate(off):
                lhs[ku + r - ix(o), ix(o)] += -0.5 * a_off[k]
                rhs[r] += 0.5 * a_off[k] * u[ix(o)]
        else:
            # slope row at the ghost slot: physical v_x(0) = sgn * D1_s = h(t)
            r = ix(-1)
            for k, o in enumerate((-1, 0, 1)):
                lhs[ku + r - ix(o), ix(o)] = sgn * d1g[k]
            rhs[r] = bv[1]
        # far rows
        for j in (m - 2, m - 1):
            r = ix(j)
            lo = max(0, r - kl)
            hi = min(N, r + ku + 1)
            cols = np.arange(lo, hi)
            lhs[ku + r - cols, cols] = 0.0
            lhs[ku, r] = 1.0
            rhs[r] = 0.0
        u = solve_banded((kl, ku), lhs, rhs)
        out[n + 1] = u[1:]
    return times, out


def _apply_banded(band, u, kl, ku):
    out = np.zeros_like(u)
    N = len(u)
    for d in range(-kl, ku + 1):
        diag = band[ku - d]
        if d >= 0:
            out[: N - d] += diag[d:] * u[d:]
        else:
            out[-d:] += diag[: N + d] * u[: N + d]
    return out
