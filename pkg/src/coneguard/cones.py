"""Second-order cone and semidefinite cone primitives.

Second-order cone vectors are split as z = (z0, zbar) with
K_m = {z : z0 >= ||zbar||} and K_1 the nonnegative reals.  Symmetric
matrices carry their own spectral decomposition, computed by a cyclic
Jacobi sweep so that results are deterministic and dependency-free.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EigenConvergenceError, SymmetryError

SYMMETRY_TOL = 1e-12


@dataclass(eq=False)
class SocVector:
    z0: float
    zbar: np.ndarray

    def __post_init__(self):
        self.z0 = float(self.z0)
        self.zbar = np.asarray(self.zbar, dtype=float).reshape(-1)

    @property
    def m(self):
        return 1 + self.zbar.size

    def as_array(self):
        return np.concatenate(([self.z0], self.zbar))

    def norm(self):
        return float(np.sqrt(self.z0**2 + self.zbar @ self.zbar))


def soc_from_array(values):
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size < 1:
        raise DimensionMismatchError("a cone vector needs at least one component")
    return SocVector(values[0], values[1:])


def jordan_product(y, s):
    """Symmetrized product (<y, s>, y0*sbar + s0*ybar) on K_m."""
    if y.m != s.m:
        raise DimensionMismatchError("cone dimensions differ: %d vs %d" % (y.m, s.m))
    top = float(y.as_array() @ s.as_array())
    return SocVector(top, y.z0 * s.zbar + s.z0 * y.zbar)


def jordan_identity(m):
    return SocVector(1.0, np.zeros(m - 1))


def reflect(z):
    """Multiply by the reflection diag(1, -1, ..., -1)."""
    return SocVector(z.z0, -z.zbar)


class SocRegion(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    VERTEX = "vertex"
    INFEASIBLE = "infeasible"


def classify_soc(z, tol_act=1e-8):
    """Locate z relative to K_m: interior, nonzero boundary, vertex, or outside."""
    nrm = float(np.linalg.norm(z.zbar))
    total = z.norm()
    if total <= tol_act:
        return SocRegion.VERTEX
    if z.m == 1:
        return SocRegion.INTERIOR if z.z0 > tol_act else SocRegion.INFEASIBLE
    if abs(z.z0 - nrm) <= tol_act * max(1.0, total):
        return SocRegion.BOUNDARY
    if z.z0 > nrm:
        return SocRegion.INTERIOR
    return SocRegion.INFEASIBLE


def project_soc(z):
    """Euclidean projection onto K_m."""
    nrm = float(np.linalg.norm(z.zbar))
    if z.z0 >= nrm:
        return SocVector(z.z0, z.zbar.copy())
    if z.z0 <= -nrm:
        return SocVector(0.0, np.zeros_like(z.zbar))
    t = 0.5 * (z.z0 + nrm)
    return SocVector(t, (t / nrm) * z.zbar)


def soc_distance(z):
    return float(np.linalg.norm(z.as_array() - project_soc(z).as_array()))


@dataclass(eq=False)
class SymMatrix:
    mat: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.mat, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatchError("expected a square matrix, got shape %r" % (a.shape,))
        scale = float(np.linalg.norm(a, "fro"))
        skew = float(np.max(np.abs(a - a.T))) if a.size else 0.0
        if skew > SYMMETRY_TOL * max(1.0, scale):
            raise SymmetryError(
                "matrix is not symmetric: max asymmetry %.3e exceeds %.3e"
                % (skew, SYMMETRY_TOL * max(1.0, scale))
            )
        self.mat = 0.5 * (a + a.T)

    @property
    def dim(self):
        return self.mat.shape[0]

    def norm(self):
        return float(np.linalg.norm(self.mat, "fro"))


@dataclass(eq=False)
class SpectralData:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns, matching order


def _jacobi(a, max_sweeps=64):
    """Cyclic Jacobi diagonalization of a symmetric array.

    Returns (eigenvalues, eigenvector columns), both unordered.  Rotations
    are applied in a fixed row-major order, so the result is deterministic
    for a given input.
    """
    m = a.shape[0]
    v = np.eye(m)
    if m == 1:
        return a.ravel().copy(), v
    a = a.copy()
    scale = max(1.0, float(np.linalg.norm(a, "fro")))
    for _ in range(max_sweeps):
        off = float(np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0))
        if off <= 1e-14 * scale:
            return np.diag(a).copy(), v
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        a = 0.5 * (a + a.T)
    off = float(np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0))
    raise EigenConvergenceError(off)


def eig_sym(a):
    """Spectral decomposition with ascending eigenvalues.

    Eigenvector signs follow a fixed convention (first component of
    noticeable magnitude is positive) so repeated calls agree bitwise.
    """
    mat = a.mat if isinstance(a, SymMatrix) else SymMatrix(a).mat
    vals, vecs = _jacobi(mat)
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        top = float(np.max(np.abs(col)))
        if top == 0.0:
            continue
        for comp in col:
            if abs(comp) > 1e-12 * top:
                if comp < 0.0:
                    vecs[:, j] = -col
                break
    return SpectralData(vals, vecs)


def project_psd(a, spectral=None):
    """Euclidean (Frobenius) projection onto the positive semidefinite cone."""
    mat = a.mat if isinstance(a, SymMatrix) else SymMatrix(a).mat
    sd = spectral if spectral is not None else eig_sym(mat)
    clipped = np.clip(sd.eigenvalues, 0.0, None)
    out = (sd.eigenvectors * clipped) @ sd.eigenvectors.T
    return SymMatrix(0.5 * (out + out.T))


def psd_distance(a, spectral=None):
    mat = a.mat if isinstance(a, SymMatrix) else SymMatrix(a).mat
    sd = spectral if spectral is not None else eig_sym(mat)
    neg = np.clip(sd.eigenvalues, None, 0.0)
    return float(np.linalg.norm(neg))


def svec_dim(m):
    return m * (m + 1) // 2


_SQRT2 = float(np.sqrt(2.0))


def svec(mat):
    """Row-major upper-triangle vectorization with sqrt(2)-scaled off-diagonals.

    Chosen so the Euclidean inner product of two svec images equals the
    Frobenius inner product of the matrices.
    """
    m = mat.shape[0]
    i, j = np.triu_indices(m)
    w = np.where(i == j, 1.0, _SQRT2)
    return mat[i, j] * w


def smat(vec, m):
    i, j = np.triu_indices(m)
    w = np.where(i == j, 1.0, _SQRT2)
    out = np.zeros((m, m))
    out[i, j] = vec / w
    out = out + np.triu(out, 1).T
    return out
