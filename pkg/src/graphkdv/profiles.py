"""Closed-form solitary waves and the stationary bump/tail families on the graph."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .graph import GraphFunction, GraphGrid, StarGraph, GraphError


class ProfileError(ValueError):
    pass


def _arctanh(t: float) -> float:
    # explicit log form with a domain guard; |t|<1 is guaranteed by the
    # omega > Z^2/4 invariant but guard anyway
    if abs(t) >= 1.0:
        raise ProfileError(f"arctanh argument {t} outside (-1,1)")
    return 0.5 * math.log((1.0 + t) / (1.0 - t))


class ProfileKind(enum.Enum):
    BUMP = "bump"
    TAIL = "tail"


@dataclass(frozen=True)
class ProfileParams:
    """Parameters of the stationary half-soliton family."""

    alpha_plus: float = 1.0
    beta_plus: float = -1.0
    Z: float = 1.0

    def __post_init__(self):
        if self.alpha_plus <= 0:
            raise ProfileError("alpha_plus must be positive")
        if self.beta_plus >= 0:
            raise ProfileError("beta_plus must be negative")
        if self.Z == 0:
            raise ProfileError("Z must be nonzero")
        if self.omega <= self.Z**2 / 4:
            raise ProfileError(
                f"existence condition violated: omega={self.omega} <= Z^2/4={self.Z**2/4}"
            )

    @property
    def omega(self) -> float:
        return -self.beta_plus / self.alpha_plus

    @property
    def kind(self) -> ProfileKind:
        return ProfileKind.BUMP if self.Z > 0 else ProfileKind.TAIL

    @property
    def shift(self) -> float:
        """Argument shift arctanh(Z / (2 sqrt(omega)))."""
        return _arctanh(self.Z / (2.0 * math.sqrt(self.omega)))


def solitary_wave(c: float, xi):
    """Whole-line traveling profile of speed c>1: (3/2)(c-1) sech^2(sqrt(c-1)/2 xi)."""
    if c <= 1:
        raise ProfileError("speed must exceed 1")
    xi = np.asarray(xi, dtype=float)
    out = 1.5 * (c - 1) / np.cosh(math.sqrt(c - 1) / 2 * xi) ** 2
    return out if out.ndim else float(out)


def half_soliton(params: ProfileParams, side: str, x):
    """Stationary edge profile; side selects the sign convention of x."""
    x = np.asarray(x, dtype=float)
    if side == "plus":
        if np.any(x < -1e-12 * (1 + np.abs(x))):
            raise ProfileError("plus side requires x >= 0")
        xs = x
    elif side == "minus":
        if np.any(x > 1e-12 * (1 + np.abs(x))):
            raise ProfileError("minus side requires x <= 0")
        xs = -x
    else:
        raise ProfileError("side must be 'minus' or 'plus'")
    out = profile_value(params, xs)
    return out if out.ndim else float(out)


def profile_value(params: ProfileParams, x):
    """phi_+ evaluated on all of R (analytic continuation of the plus profile)."""
    x = np.asarray(x, dtype=float)
    th = math.sqrt(params.omega) / 2 * x - params.shift
    return -1.5 * params.beta_plus / np.cosh(th) ** 2


def profile_derivative(params: ProfileParams, x):
    """d/dx of profile_value on all of R."""
    x = np.asarray(x, dtype=float)
    s = math.sqrt(params.omega)
    th = s / 2 * x - params.shift
    return 1.5 * params.beta_plus * s * np.tanh(th) / np.cosh(th) ** 2


def build_UZ(params: ProfileParams, grid: GraphGrid, graph: StarGraph) -> GraphFunction:
    """Sample the stationary family on every edge (minus edges mirrored)."""
    vals = profile_value(params, grid.x)
    return GraphFunction(
        graph,
        grid,
        minus=[vals.copy() for _ in range(graph.n_minus)],
        plus=[vals.copy() for _ in range(graph.n_plus)],
    )


def elliptic_residual(f: GraphFunction, alpha: float, beta: float) -> GraphFunction:
    """Per-edge residual alpha*u'' + beta*u + u^2 at interior nodes (ends zeroed)."""
    if f.grid.points_per_edge < 5:
        raise GraphError("need at least 5 points per edge")
    h = f.grid.h

    def res(a):
        r = np.zeros_like(a)
        r[1:-1] = alpha * (a[2:] - 2 * a[1:-1] + a[:-2]) / h**2 + beta * a[1:-1] + a[1:-1] ** 2
        return r

    return GraphFunction(
        f.graph,
        f.grid,
        minus=[res(a) for a in f.minus],
        plus=[res(a) for a in f.plus],
    )


def traveling_wave(alpha: float, beta: float, c: float, xi):
    """Traveling wave of du/dt = alpha u''' + beta u' + 2 u u' with speed c.

    Derived from the stationarity relation in the co-moving frame:
    alpha w'' + (beta + c) w + w^2 = 0, requiring beta + c < 0.
    """
    if beta + c >= 0:
        raise ProfileError("need beta + c < 0 for a decaying traveling wave")
    om = -(beta + c) / alpha
    xi = np.asarray(xi, dtype=float)
    out = -1.5 * (beta + c) / np.cosh(math.sqrt(om) / 2 * xi) ** 2
    return out if out.ndim else float(out)


def profile_summary(params: ProfileParams) -> dict:
    """Headline numbers for the CLI sidecar."""
    vertex = float(profile_value(params, 0.0))
    max_value = float(-1.5 * params.beta_plus) if params.Z > 0 else vertex
    return {
        "alpha": params.alpha_plus,
        "beta": params.beta_plus,
        "Z": params.Z,
        "omega": params.omega,
        "kind": params.kind.value,
        "vertex_value": vertex,
        "max_value": max_value,
    }
