"""Limit roots of the cubic z^3 + beta*z + eps + i*tau as eps -> 0+.

For beta < 0 and eps > 0 the three roots split strictly by the sign of the
real part: one with Re < 0 (r0) and two with Re > 0 (r1, r2).  In the limit
r0 = -p + i q, r1 = p + i q and r2 = i k(tau) with k the inverse of
xi -> xi^3 - beta*xi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class RootError(ValueError):
    pass


def k_beta_inverse(tau, beta: float):
    """Unique real solution of xi^3 - beta*xi = tau (beta < 0), bracketed Newton."""
    if beta >= 0:
        raise RootError("beta must be negative")
    tau = np.asarray(tau, dtype=float)
    scalar = tau.ndim == 0
    t = np.atleast_1d(tau)
    # initial guess: exact for the pure-cubic and pure-linear regimes
    xi = np.where(np.abs(t) > 1.0, np.cbrt(t), t / (-beta))
    for _ in range(60):
        fx = xi**3 - beta * xi - t
        dfx = 3 * xi**2 - beta
        step = fx / dfx
        xi = xi - step
        if np.max(np.abs(step)) < 1e-16 * (1.0 + np.max(np.abs(xi))):
            break
    return float(xi[0]) if scalar else xi


def cubic_roots_eps(tau, beta: float, eps: float):
    """Classified roots of z^3 + beta*z + (eps + i*tau) = 0 at fixed eps > 0.

    Returns (r0, r1, r2) arrays; r0 has the most negative real part, and of the
    remaining two, r2 is the one closest to i*k(tau) (labels only matter for the
    r0 / {r1, r2} split, which is strict for eps > 0).
    """
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    n = len(t)
    comp = np.zeros((n, 3, 3), dtype=complex)
    comp[:, 0, 1] = 1.0
    comp[:, 1, 2] = 1.0
    comp[:, 2, 0] = -(eps + 1j * t)
    comp[:, 2, 1] = -beta
    r = np.linalg.eigvals(comp)
    order = np.argsort(r.real, axis=1)
    rs = np.take_along_axis(r, order, axis=1)
    r0 = rs[:, 0]
    kb = k_beta_inverse(t, beta)
    d1 = np.abs(rs[:, 1] - 1j * kb)
    d2 = np.abs(rs[:, 2] - 1j * kb)
    swap = d1 < d2
    r2 = np.where(swap, rs[:, 1], rs[:, 2])
    r1 = np.where(swap, rs[:, 2], rs[:, 1])
    if np.any(r0.real > 0):
        raise RootError("root classification failed: no root with Re < 0")
    return r0, r1, r2


@dataclass
class RootTriple:
    """Limit root triple with the p/q/k decomposition."""

    tau: float
    beta: float
    r0: complex
    r1: complex
    r2: complex
    p: float
    q: float
    k_beta: float


def cubic_roots_limit(tau, beta: float, eps: float = 1e-8):
    """Limit roots at eps -> 0+, one Richardson step from eps and eps/2.

    Roots are analytic in eps away from collisions; for beta < 0 on the real
    tau axis the extrapolation error is O(eps^2).
    Returns a RootTriple for scalar tau, else arrays (r0, r1, r2, p, q, k).
    """
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    a0, a1, a2 = cubic_roots_eps(t, beta, eps)
    b0, b1, b2 = cubic_roots_eps(t, beta, eps / 2)
    r0 = 2 * b0 - a0
    r1 = 2 * b1 - a1
    r2 = 2 * b2 - a2
    p = (r1.real - r0.real) / 2
    q = (r1.imag + r0.imag) / 2
    kb = k_beta_inverse(t, beta)
    if np.isscalar(tau) or np.asarray(tau).ndim == 0:
        return RootTriple(float(tau), beta, complex(r0[0]), complex(r1[0]),
                          complex(r2[0]), float(p[0]), float(q[0]), float(kb[0]))
    return r0, r1, r2, p, q, kb


def vieta_residuals(r0, r1, r2, tau, beta: float):
    """Scaled residuals of the three symmetric-function identities."""
    t = np.asarray(tau, dtype=float)
    scale = 1.0 + np.abs(t)
    e1 = np.abs(r0 + r1 + r2) / scale
    e2 = np.abs(r0 * r1 + r0 * r2 + r1 * r2 - beta) / scale
    e3 = np.abs(r0 * r1 * r2 + 1j * t) / scale
    return e1, e2, e3


def probe_root_bounds(beta: float, tau_grid, c_reference: float = 2.0) -> dict:
    """Empirical constants for the magnitude and lower bounds of the roots.

    Reports the smallest constant validating |r_j| <= c (|tau|^(1/3) + |beta|^(1/2)),
    the largest constant with p >= c (|tau|^(1/3) + |beta|^(1/2)), and the
    empirical minimum of q with its location.  q vanishes at tau = 0 for
    beta < 0 (real roots there), so no positive lower bound for q exists.
    """
    t = np.asarray(tau_grid, dtype=float)
    if t.size == 0 or not np.all(np.isfinite(t)):
        raise RootError("tau_grid must be nonempty and finite")
    r0, r1, r2, p, q, kb = cubic_roots_limit(t, beta)
    denom = np.abs(t) ** (1.0 / 3) + abs(beta) ** 0.5
    ratios = np.abs(np.stack([r0, r1, r2])) / denom
    c_upper = float(ratios.max())
    violations = int(np.sum(ratios > c_reference))
    c_lower_p = float((p / denom).min())
    iq = int(np.argmin(np.abs(q)))
    return {
        "c_upper": c_upper,
        "violations": violations,
        "c_reference": c_reference,
        "c_lower_p": c_lower_p,
        "q_min": float(q[iq]),
        "q_min_location": float(t[iq]),
    }
