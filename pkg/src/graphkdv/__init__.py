"""Numerical laboratory for the KdV equation on a balanced metric star graph
with delta-type vertex coupling: stationary bump/tail profiles, boundary
potentials and the vertex trace system, two independent evolution solvers, and
the linear/nonlinear instability experiments."""

__version__ = "0.1.0"

from .graph import (  # noqa: F401
    StarGraph,
    GraphGrid,
    GraphFunction,
    VertexTraces,
    CompatTier,
    vertex_traces,
    compat_class,
    check_domain_AZ,
    sobolev_norm,
    l2_inner,
)
from .profiles import (  # noqa: F401
    ProfileParams,
    ProfileKind,
    solitary_wave,
    half_soliton,
    build_UZ,
    elliptic_residual,
)
from .roots import RootTriple, cubic_roots_limit, k_beta_inverse  # noqa: F401
