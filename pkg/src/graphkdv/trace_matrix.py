"""The 3x3 vertex coupling system: matrix, determinant, closed-form inverse,
boundary-data solve, and high-frequency bound probes.

Per frequency tau the unknown boundary data (h, f, g) of the two-edge reduction
satisfies M(tau; Z) [h, f, g]^T = rhs, where row 1 encodes vertex continuity,
row 2 the first-derivative jump and row 3 the second-derivative jump.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .roots import RootTriple, cubic_roots_limit, k_beta_inverse


class TraceSystemError(ValueError):
    pass


@dataclass
class TraceMatrix:
    tau: float
    Z: float
    entries: np.ndarray  # 3x3 complex


@dataclass
class InverseEntries:
    """Closed-form inverse data, valid for Z=1.

    The inverse has the pattern
        (1/n1) [[a11/n2, a12, a13], [a21/n2, a22, a23], [a31, a32, a33]].
    """

    n1: complex
    n2: complex
    a11: complex
    a21: complex
    a31: complex
    a12: complex
    a22: complex
    a32: complex
    a13: complex
    a23: complex
    a33: complex


@dataclass
class BoundaryRHS:
    """Vertex traces (time-frequency domain) of the two interior fields."""

    F1: np.ndarray
    dxF1: np.ndarray
    dx2F1: np.ndarray
    F2: np.ndarray
    dxF2: np.ndarray
    dx2F2: np.ndarray


def coupling_matrix_entries(r0, r1, r2, Z: float):
    """Stacked (..., 3, 3) coupling matrices from root arrays."""
    r0 = np.asarray(r0, dtype=complex)
    shape = r0.shape + (3, 3)
    M = np.zeros(shape, dtype=complex)
    M[..., 0, 0] = 1.0
    M[..., 0, 1] = -1.0
    M[..., 1, 0] = r0
    M[..., 1, 1] = -Z
    M[..., 1, 2] = -1.0
    M[..., 2, 0] = r0**2
    M[..., 2, 1] = r1 * r2 - Z**2 / 2
    M[..., 2, 2] = -(r1 + r2 + Z)
    return M


def build_M(roots: RootTriple, Z: float) -> TraceMatrix:
    if Z == 0:
        raise TraceSystemError("Z must be nonzero")
    M = coupling_matrix_entries(roots.r0, roots.r1, roots.r2, Z)
    return TraceMatrix(tau=roots.tau, Z=Z, entries=M)


def det_closed_form(p, q, k, Z: float):
    """Determinant of the coupling matrix in the p/q/k root decomposition.

    det = Z^2/2 + 2 Z p + 2 p^2 + i k (Z + 3 p); equal to the direct cofactor
    expansion (the real part is 2 (p + Z/2)^2 at Z=... it is positive for Z>0).
    """
    p = np.asarray(p, dtype=float)
    return Z**2 / 2 + 2 * Z * p + 2 * p**2 + 1j * np.asarray(k) * (Z + 3 * p)


def det_cofactor(M: np.ndarray):
    """Direct 3x3 cofactor expansion along the first row."""
    a, b = M[..., 0, 0], M[..., 0, 1]
    m11 = M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1]
    m12 = M[..., 1, 0] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 0]
    m13 = M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0]
    return a * m11 - b * m12 + M[..., 0, 2] * m13


def det_M(roots: RootTriple, Z: float, cross_check: bool = True,
          rtol: float = 1e-10) -> complex:
    """Closed-form determinant, cross-checked against the cofactor expansion."""
    d = complex(det_closed_form(roots.p, roots.q, roots.k_beta, Z))
    if cross_check:
        dc = complex(det_cofactor(build_M(roots, Z).entries))
        if abs(d - dc) > rtol * max(abs(d), abs(dc)):
            raise TraceSystemError(
                f"closed-form determinant {d} disagrees with cofactor value {dc}"
            )
    return d


def closed_form_inverse(roots: RootTriple) -> InverseEntries:
    """Closed-form inverse data for Z = 1.

    n1 and n2 follow the usual polynomial expressions; the a-entries are the
    adjugate cofactors scaled so that the pattern above reproduces the inverse
    exactly (n1 equals twice the determinant at Z=1).
    """
    r0, r1, r2 = roots.r0, roots.r1, roots.r2
    e2 = r1 + r2
    e11 = r1 * r2
    n1 = 2 * r0**2 - 2 * r0 * r1 - 2 * r0 - 2 * r0 * r2 + 2 * r1 + 2 * e11 + 2 * r2 + 1
    n2 = 1 - 2 * r0**2 - 2 * e11
    return InverseEntries(
        n1=n1,
        n2=n2,
        a11=n2 * (1 + 2 * e2 + 2 * e11),
        a21=2 * n2 * r0 * (e2 + 1 - r0),
        a31=r0 * (2 * e11 + 2 * r0 - 1),
        a12=-2 * (e2 + 1),
        a22=-2 * (e2 + 1),
        a32=n2,
        a13=2.0 + 0j,
        a23=2.0 + 0j,
        a33=2 * (r0 - 1),
    )


def inverse_from_entries(inv: InverseEntries) -> np.ndarray:
    """Assemble the inverse matrix from the closed-form pattern."""
    n1, n2 = inv.n1, inv.n2
    return np.array(
        [
            [inv.a11 / (n1 * n2), inv.a12 / n1, inv.a13 / n1],
            [inv.a21 / (n1 * n2), inv.a22 / n1, inv.a23 / n1],
            [inv.a31 / n1, inv.a32 / n1, inv.a33 / n1],
        ],
        dtype=complex,
    )


def assemble_rhs(rhs: BoundaryRHS, Z: float) -> np.ndarray:
    """Right-hand side vector(s) of the coupling system, shape (..., 3)."""
    row1 = rhs.F2 - rhs.F1
    row2 = -rhs.dxF1 + rhs.dxF2 + Z * rhs.F2
    row3 = -rhs.dx2F1 + rhs.dx2F2 + (Z**2 / 2) * rhs.F2 + Z * rhs.dxF2
    return np.stack([row1, row2, row3], axis=-1)


def solve_boundary_data(rhs: BoundaryRHS, Z: float, beta: float, taus,
                        roots=None, det_floor: float = 1e-12):
    """Per-frequency LU solve of the coupling system.

    Returns (h_hat, f_hat, g_hat) over the tau grid; raises if the determinant
    drops below det_floor (cannot occur for beta < 0 at the operating Z).
    """
    if Z == 0:
        raise TraceSystemError("Z must be nonzero")
    t = np.asarray(taus, dtype=float)
    if roots is None:
        r0, r1, r2, _, _, _ = cubic_roots_limit(t, beta)
    else:
        r0, r1, r2 = roots
    M = coupling_matrix_entries(r0, r1, r2, Z)
    if np.min(np.abs(det_cofactor(M))) < det_floor:
        raise TraceSystemError("coupling matrix numerically singular on the grid")
    b = assemble_rhs(rhs, Z)
    sol = np.linalg.solve(M, b[..., None])[..., 0]
    return sol[..., 0], sol[..., 1], sol[..., 2]


def solve_boundary_data_closed_form(rhs: BoundaryRHS, taus, beta: float):
    """Z=1 closed-form route through the inverse entries (validation path)."""
    t = np.asarray(taus, dtype=float)
    r0, r1, r2, _, _, _ = cubic_roots_limit(t, beta)
    b = assemble_rhs(rhs, 1.0)
    e2 = r1 + r2
    e11 = r1 * r2
    n1 = 2 * r0**2 - 2 * r0 * e2 - 2 * r0 + 2 * e2 + 2 * e11 + 1
    n2 = 1 - 2 * r0**2 - 2 * e11
    a11 = n2 * (1 + 2 * e2 + 2 * e11)
    a21 = 2 * n2 * r0 * (e2 + 1 - r0)
    a31 = r0 * (2 * e11 + 2 * r0 - 1)
    a12 = a22 = -2 * (e2 + 1)
    a32 = n2
    a13 = a23 = 2.0
    a33 = 2 * (r0 - 1)
    h = (a11 / (n1 * n2)) * b[..., 0] + (a12 / n1) * b[..., 1] + (a13 / n1) * b[..., 2]
    f = (a21 / (n1 * n2)) * b[..., 0] + (a22 / n1) * b[..., 1] + (a23 / n1) * b[..., 2]
    g = (a31 / n1) * b[..., 0] + (a32 / n1) * b[..., 1] + (a33 / n1) * b[..., 2]
    return h, f, g


# high-frequency ratio bounds: (name, claimed exponent of <tau>)
RATIO_CLAIMS = [
    ("a11/(n1*n2)", 0.0),
    ("a12/n1", -1.0 / 3),
    ("a13/n1", -2.0 / 3),
    ("a21/(n1*n2)", -1.0),
    ("a22/n1", -1.0 / 3),
    ("a31/n1", 1.0 / 3),
    ("a32/n1", 0.0),
    ("a33/n1", -2.0 / 3),
]
N1_LOWER_EXPONENT = 2.0 / 3


def probe_highfreq_bounds(beta: float, tau_grid, slope_margin: float = 0.15) -> dict:
    """Empirical check of the claimed high-frequency ratio bounds (Z=1 entries).

    For each ratio the log-log slope over the top decade of the grid is fitted
    and compared against the claimed exponent; a slope exceeding the claim by
    more than slope_margin counts as a violation.  The |n1| lower bound is
    checked the same way from below.  Fitted constants at the claimed exponent
    are reported for every ratio.
    """
    t = np.asarray(tau_grid, dtype=float)
    if np.any(np.abs(t) <= 2.0):
        raise TraceSystemError("probe grid must satisfy |tau| > 2")
    r0, r1, r2, _, _, _ = cubic_roots_limit(t, beta)
    e2, e11 = r1 + r2, r1 * r2
    n1 = 2 * r0**2 - 2 * r0 * e2 - 2 * r0 + 2 * e2 + 2 * e11 + 1
    n2 = 1 - 2 * r0**2 - 2 * e11
    entries = {
        "a11/(n1*n2)": np.abs(n2 * (1 + 2 * e2 + 2 * e11) / (n1 * n2)),
        "a12/n1": np.abs(-2 * (e2 + 1) / n1),
        "a13/n1": np.abs(2.0 / n1),
        "a21/(n1*n2)": np.abs(2 * n2 * r0 * (e2 + 1 - r0) / (n1 * n2)),
        "a22/n1": np.abs(-2 * (e2 + 1) / n1),
        "a31/n1": np.abs(r0 * (2 * e11 + 2 * r0 - 1) / n1),
        "a32/n1": np.abs(n2 / n1),
        "a33/n1": np.abs(2 * (r0 - 1) / n1),
    }
    br = np.sqrt(1.0 + t**2)
    log_br = np.log(br)
    top = br >= br.max() ** 0.5  # top half of the log range
    report = {"ratios": {}, "violations": 0}
    for name, claim in RATIO_CLAIMS:
        vals = entries[name]
        slope = float(np.polyfit(log_br[top], np.log(vals[top]), 1)[0])
        const = float(np.max(vals / br**claim))
        violated = slope > claim + slope_margin
        report["ratios"][name] = {
            "claimed_exponent": claim,
            "fitted_slope": slope,
            "fitted_constant": const,
            "violated": bool(violated),
        }
        report["violations"] += int(violated)
    n1_slope = float(np.polyfit(log_br[top], np.log(np.abs(n1[top])), 1)[0])
    n1_const = float(np.min(np.abs(n1) / br**N1_LOWER_EXPONENT))
    n1_violated = n1_slope < N1_LOWER_EXPONENT - slope_margin
    report["n1_lower"] = {
        "claimed_exponent": N1_LOWER_EXPONENT,
        "fitted_slope": n1_slope,
        "fitted_constant": n1_const,
        "violated": bool(n1_violated),
    }
    report["violations"] += int(n1_violated)
    return report
