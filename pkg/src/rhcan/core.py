"""Core numerical primitives: intervals, quadrature grids, matrix helpers.

Matrices are plain complex128 numpy arrays throughout the library.  All
norms are max-abs entry norms and all tolerances are absolute unless a
docstring says otherwise.  Containers defined here are frozen dataclasses
whose array fields are made read-only at construction, so instances can be
shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, NotPSDError, ShapeMismatchError

# Default tolerances. Absolute, on max-abs entry norms.
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
JMOD_TOL = 1e-8
FACTOR_TOL = 1e-8
RANK_TOL = 1e-9          # relative to ||D(x)||
DIAG_TOL = 1e-10         # vanishing-diagonal bound for smooth kernels
OP_TOL = 1e-12
SOLVE_TOL = 1e-8
COND_LIMIT = 1e12
OFF_CUT_MARGIN = 1e-8    # relative to interval length
HERM_DRIFT_TOL = 1e-7
MONO_TOL = 1e-6
PSD_FAIL_TOL = 1e-6
ODE_TOL = 1e-8
ODE_MARGIN = 1e-3        # relative to interval length
MAX_HALVINGS = 12
FD_CONSISTENCY_TOL = 1e-3  # trapezoid-vs-FD roundtrip is O(h^2): ~2e-4 at 64 points
WEIGHT_SUM_RTOL = 1e-12


def max_abs(m) -> float:
    """Max-abs entry norm; the norm used for every tolerance check."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m)))


def hermitian_defect(m) -> float:
    """``max_abs(M - M*)`` for a square matrix."""
    m = np.asarray(m)
    return max_abs(m - m.conj().T)


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    return hermitian_defect(m) <= tol


def hermitian_part(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + m.conj().T)


def _as_square(m, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatchError(f"{name} must be a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class Interval:
    """Closed finite interval [a, b] with a < b."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise InvalidArgumentError("interval endpoints must be finite")
        if not self.a < self.b:
            raise InvalidArgumentError(f"interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, x: float, strict: bool = False) -> bool:
        if strict:
            return self.a < x < self.b
        return self.a <= x <= self.b


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class QuadratureGrid:
    """Quadrature nodes and weights on an interval.

    Nodes are strictly increasing and strictly inside (a, b); weights are
    positive and sum to the interval length (relative tolerance 1e-12).
    Only the Gauss-Legendre rule is supported.
    """

    interval: Interval
    nodes: np.ndarray
    weights: np.ndarray
    rule: str = "gauss-legendre"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if self.rule != "gauss-legendre":
            raise InvalidArgumentError(f"unsupported quadrature rule: {self.rule!r}")
        if nodes.ndim != 1 or weights.shape != nodes.shape:
            raise ShapeMismatchError("nodes and weights must be 1-d arrays of equal length")
        if nodes.size < 2:
            raise InvalidArgumentError("need at least 2 quadrature nodes")
        if np.any(np.diff(nodes) <= 0):
            raise InvalidArgumentError("nodes must be strictly increasing")
        a, b = self.interval.a, self.interval.b
        if nodes[0] <= a or nodes[-1] >= b:
            raise InvalidArgumentError("nodes must lie strictly inside the interval")
        if np.any(weights <= 0):
            raise InvalidArgumentError("weights must be positive")
        length = self.interval.length
        if abs(weights.sum() - length) > WEIGHT_SUM_RTOL * length:
            raise InvalidArgumentError("weights must sum to the interval length")
        object.__setattr__(self, "nodes", _freeze(nodes))
        object.__setattr__(self, "weights", _freeze(weights))

    @property
    def n(self) -> int:
        return self.nodes.size


def gauss_legendre_grid(interval: Interval, n: int) -> QuadratureGrid:
    """Gauss-Legendre rule with n nodes mapped onto the interval.

    Exact for polynomials of degree <= 2n - 1.
    """
    if n < 2:
        raise InvalidArgumentError(f"need n >= 2 nodes, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    mid = 0.5 * (interval.a + interval.b)
    half = 0.5 * interval.length
    return QuadratureGrid(interval, mid + half * x, half * w)


@dataclass(frozen=True)
class SampledMatrixFunction:
    """Matrix-valued function known at the nodes of a quadrature grid.

    values has shape (n, rows, cols), one matrix per node.
    """

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 3:
            raise ShapeMismatchError(f"values must be (n, rows, cols), got shape {values.shape}")
        if values.shape[0] != self.grid.n:
            raise ShapeMismatchError(
                f"expected {self.grid.n} samples, got {values.shape[0]}")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def shape(self) -> tuple:
        return self.values.shape[1:]

    def integrate(self) -> np.ndarray:
        """Quadrature integral over the interval, an (rows, cols) matrix."""
        return np.einsum("i,ijk->jk", self.grid.weights, self.values)


def check_signature(j, tol: float = HERMITIAN_TOL) -> bool:
    """True iff J is a signature matrix: J = J* and J^2 = I within tol."""
    j = np.asarray(j, dtype=complex)
    if j.ndim != 2 or j.shape[0] != j.shape[1]:
        return False
    if hermitian_defect(j) > tol:
        return False
    return max_abs(j @ j - np.eye(j.shape[0])) <= tol


def principal_sqrt_psd(m, tol: float = PSD_TOL) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix via eigendecomposition.

    Eigenvalues in [-tol, 0) are clamped to zero; an eigenvalue below -tol
    raises NotPSDError.  The result P is Hermitian PSD with
    ``max_abs(P @ P - M) <= 1e-10 * (1 + max_abs(M))``.
    """
    m = _as_square(m, "matrix")
    if hermitian_defect(m) > tol * (1.0 + max_abs(m)):
        raise NotPSDError("matrix is not Hermitian")
    vals, vecs = np.linalg.eigh(hermitian_part(m))
    if vals.min(initial=0.0) < -tol:
        raise NotPSDError(f"matrix has negative eigenvalue {vals.min():.3e}")
    vals = np.clip(vals, 0.0, None)
    root = (vecs * np.sqrt(vals)) @ vecs.conj().T
    return hermitian_part(root)
