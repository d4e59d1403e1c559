"""Balanced star graph data model: per-edge grids, vertex traces, coupling checks, norms.

Edges are stored in outward coordinates: sample index j corresponds to physical
x = +j*h on a plus edge and x = -j*h on a minus edge, so index 0 is the vertex
on every edge and one stencil implementation serves both sides.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class StarGraph:
    """Balanced metric star graph: n_minus incoming half lines, n_plus outgoing."""

    n_minus: int = 1
    n_plus: int = 1

    def __post_init__(self):
        if self.n_minus < 1 or self.n_plus < 1:
            raise GraphError("star graph needs at least one edge on each side")
        if self.n_minus != self.n_plus:
            raise GraphError(
                f"unbalanced graph (n_minus={self.n_minus}, n_plus={self.n_plus}) "
                "is not supported by the delta-coupling family"
            )

    @property
    def n_pairs(self) -> int:
        return self.n_plus

    @property
    def n_edges(self) -> int:
        return self.n_minus + self.n_plus


@dataclass(frozen=True)
class GraphGrid:
    """Uniform per-edge grid, identical on all edges; x=0 is always a node."""

    h: float
    points_per_edge: int

    def __post_init__(self):
        if self.h <= 0:
            raise GraphError("step h must be positive")
        if self.points_per_edge < 8:
            raise GraphError("need at least 8 points per edge")

    @property
    def m(self) -> int:
        return self.points_per_edge

    @property
    def length(self) -> float:
        return (self.points_per_edge - 1) * self.h

    @property
    def x(self) -> np.ndarray:
        """Outward coordinates 0, h, ..., L."""
        return np.arange(self.points_per_edge) * self.h

    @classmethod
    def from_length(cls, length: float, h: float) -> "GraphGrid":
        m = int(round(length / h)) + 1
        return cls(h=h, points_per_edge=m)


def default_truncation_length(omega: float) -> float:
    """L = 40/sqrt(omega): sech^2 tails below 1e-14 at the cut."""
    return 40.0 / math.sqrt(omega)


@dataclass
class GraphFunction:
    """Real samples on every edge, indexed from the vertex outward."""

    graph: StarGraph
    grid: GraphGrid
    minus: list[np.ndarray] = field(default_factory=list)
    plus: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if len(self.minus) != self.graph.n_minus or len(self.plus) != self.graph.n_plus:
            raise GraphError("one value array per edge required")
        m = self.grid.points_per_edge
        arrays = []
        for a in list(self.minus) + list(self.plus):
            a = np.asarray(a, dtype=float)
            if a.shape != (m,):
                raise GraphError(f"edge array has shape {a.shape}, expected ({m},)")
            if not np.all(np.isfinite(a)):
                raise GraphError("edge arrays must be finite")
            arrays.append(a)
        self.minus = arrays[: self.graph.n_minus]
        self.plus = arrays[self.graph.n_minus:]

    @classmethod
    def from_callables(cls, graph, grid, f_minus, f_plus) -> "GraphFunction":
        """Sample physical-coordinate callables; f_minus gets x<=0, f_plus x>=0."""
        x = grid.x
        return cls(
            graph,
            grid,
            minus=[np.asarray(f_minus(-x), dtype=float)] * graph.n_minus,
            plus=[np.asarray(f_plus(x), dtype=float)] * graph.n_plus,
        )

    @classmethod
    def zeros(cls, graph, grid) -> "GraphFunction":
        m = grid.points_per_edge
        return cls(
            graph,
            grid,
            minus=[np.zeros(m)] * graph.n_minus,
            plus=[np.zeros(m)] * graph.n_plus,
        )

    def edges(self):
        """Iterate (side, index, values)."""
        for i, a in enumerate(self.minus):
            yield "minus", i, a
        for i, a in enumerate(self.plus):
            yield "plus", i, a

    def copy(self) -> "GraphFunction":
        return GraphFunction(
            self.graph,
            self.grid,
            minus=[a.copy() for a in self.minus],
            plus=[a.copy() for a in self.plus],
        )

    def __add__(self, other: "GraphFunction") -> "GraphFunction":
        return GraphFunction(
            self.graph,
            self.grid,
            minus=[a + b for a, b in zip(self.minus, other.minus)],
            plus=[a + b for a, b in zip(self.plus, other.plus)],
        )

    def __sub__(self, other: "GraphFunction") -> "GraphFunction":
        return GraphFunction(
            self.graph,
            self.grid,
            minus=[a - b for a, b in zip(self.minus, other.minus)],
            plus=[a - b for a, b in zip(self.plus, other.plus)],
        )

    def __mul__(self, c: float) -> "GraphFunction":
        return GraphFunction(
            self.graph,
            self.grid,
            minus=[c * a for a in self.minus],
            plus=[c * a for a in self.plus],
        )

    __rmul__ = __mul__


# one-sided stencils at the vertex node, outward direction, orders 2 and 4
_D1_STENCILS = {
    2: np.array([-1.5, 2.0, -0.5]),
    4: np.array([-25.0 / 12, 4.0, -3.0, 4.0 / 3, -0.25]),
}
_D2_STENCILS = {
    2: np.array([2.0, -5.0, 4.0, -1.0]),
    4: np.array([15.0 / 4, -77.0 / 6, 107.0 / 6, -13.0, 61.0 / 12, -5.0 / 6]),
}


@dataclass
class VertexTraces:
    """One-sided values and first two outward-stencil derivatives at x=0.

    Derivatives are reported in physical coordinates: on minus edges the
    outward first derivative is negated (d/dx = -d/ds), second left alone.
    """

    u0_minus: np.ndarray
    u0_plus: np.ndarray
    u1_minus: np.ndarray
    u1_plus: np.ndarray
    u2_minus: np.ndarray
    u2_plus: np.ndarray
    stencil_order: int = 4


def vertex_traces(f: GraphFunction, stencil_order: int = 4) -> VertexTraces:
    """One-sided values/derivatives at the vertex for every edge."""
    if stencil_order not in (2, 4):
        raise GraphError("stencil_order must be 2 or 4")
    h = f.grid.h
    d1 = _D1_STENCILS[stencil_order] / h
    d2 = _D2_STENCILS[stencil_order] / h**2
    need = max(len(d1), len(d2))
    if f.grid.points_per_edge < need + 2:
        raise GraphError("grid too coarse for requested stencil order")

    def one_side(arrays, sign):
        u0 = np.array([a[0] for a in arrays])
        u1 = np.array([sign * (d1 @ a[: len(d1)]) for a in arrays])
        u2 = np.array([d2 @ a[: len(d2)] for a in arrays])
        return u0, u1, u2

    m0, m1, m2 = one_side(f.minus, -1.0)
    p0, p1, p2 = one_side(f.plus, +1.0)
    return VertexTraces(m0, p0, m1, p1, m2, p2, stencil_order)


class CompatTier(enum.Enum):
    """Nested vertex compatibility tiers, largest regularity range last."""

    NONE = "none"
    CONTINUITY = "s in [1,3/2]"
    DELTA = "s in (3/2,5/2]"
    FULL = "s > 5/2"


def coupling_residuals(f: GraphFunction, Z: float, stencil_order: int = 4):
    """Residuals of the three delta-type vertex conditions, per edge pair.

    Condition 1: u(0-) = u(0+) (all edges share one vertex value).
    Condition 2: u'(0+) - u'(0-) = Z u(0-)       (per pair).
    Condition 3: (Z^2/2) u(0-) + Z u'(0-) = u''(0+) - u''(0-)  (per pair).
    """
    if Z == 0:
        raise GraphError("Z must be nonzero")
    tr = vertex_traces(f, stencil_order)
    vals = np.concatenate([tr.u0_minus, tr.u0_plus])
    r1 = vals - vals.mean()
    r2 = tr.u1_plus - tr.u1_minus - Z * tr.u0_minus
    r3 = (Z**2 / 2) * tr.u0_minus + Z * tr.u1_minus - (tr.u2_plus - tr.u2_minus)
    return r1, r2, r3


def compat_class(f: GraphFunction, Z: float, tol: float = 1e-8,
                 stencil_order: int = 4) -> CompatTier:
    """Largest nested compatibility tier whose conditions hold within tol."""
    r1, r2, r3 = coupling_residuals(f, Z, stencil_order)
    if np.abs(r1).max() > tol:
        return CompatTier.NONE
    if np.abs(r2).max() > tol:
        return CompatTier.CONTINUITY
    if np.abs(r3).max() > tol:
        return CompatTier.DELTA
    return CompatTier.FULL


def check_domain_AZ(f: GraphFunction, Z: float, tol: float = 1e-8,
                    stencil_order: int = 4):
    """All three delta-coupling conditions within tol; returns (ok, residuals)."""
    r1, r2, r3 = coupling_residuals(f, Z, stencil_order)
    res = {
        "continuity": float(np.abs(r1).max()),
        "derivative_jump": float(np.abs(r2).max()),
        "second_derivative_jump": float(np.abs(r3).max()),
    }
    ok = all(v <= tol for v in res.values())
    return ok, res


def edge_derivative(a: np.ndarray, h: float) -> np.ndarray:
    """Second-order derivative along one edge: centered interior, one-sided ends."""
    d = np.empty_like(a)
    d[1:-1] = (a[2:] - a[:-2]) / (2 * h)
    d[0] = (-1.5 * a[0] + 2 * a[1] - 0.5 * a[2]) / h
    d[-1] = (1.5 * a[-1] - 2 * a[-2] + 0.5 * a[-3]) / h
    return d


def _trapezoid_sq(a: np.ndarray, h: float) -> float:
    w = np.ones(len(a))
    w[0] = w[-1] = 0.5
    return float(h * np.sum(w * a * a))


def l2_inner(f: GraphFunction, g: GraphFunction) -> float:
    """L2(G) inner product by trapezoidal quadrature."""
    h = f.grid.h
    total = 0.0
    for (_, _, a), (_, _, b) in zip(f.edges(), g.edges()):
        w = np.ones(len(a))
        w[0] = w[-1] = 0.5
        total += h * float(np.sum(w * a * b))
    return total


def sobolev_norm(f: GraphFunction, s: int = 0) -> float:
    """Discrete H^s(G) norm, integer s in {0,1,2,3}.

    Built so that norm(f,1)^2 == norm(f,0)^2 + norm(f',0)^2 exactly, with the
    derivative taken by edge_derivative.
    """
    if s not in (0, 1, 2, 3):
        raise GraphError("only integer s in {0,1,2,3} supported")
    h = f.grid.h
    total = 0.0
    for _, _, a in f.edges():
        d = a
        total += _trapezoid_sq(d, h)
        for _ in range(s):
            d = edge_derivative(d, h)
            total += _trapezoid_sq(d, h)
    return math.sqrt(total)
