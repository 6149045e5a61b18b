"""Signature-matrix modules and defect factorization.

A field here is a pair (J, R(x)) on an interval: J is a signature matrix
(J = J*, J^2 = I), R(x) satisfies the symmetry JR(x) = R(x)*J and has
spectrum in the right half plane.  The object of interest is the defect

    D(x) = J (R(x) - R(x)^{-1}),

a Hermitian positive semidefinite matrix whose pointwise factorization
D = F1* F1 supplies the vector function generating the integral kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    FACTOR_TOL,
    Interval,
    JMOD_TOL,
    PSD_TOL,
    RANK_TOL,
    SampledMatrixFunction,
    check_signature,
    gauss_legendre_grid,
    hermitian_defect,
    hermitian_part,
    max_abs,
)
from .errors import (
    InvalidArgumentError,
    InvalidJModuleError,
    NotPSDError,
    ShapeMismatchError,
    SingularJModuleError,
)

# Defective (unipotent) R perturbs computed eigenvalues by ~sqrt(machine eps),
# so the imaginary-part test cannot sit at JMOD_TOL itself.
_SPECTRUM_IMAG_TOL = 1e-6


def _check_field_point(j: np.ndarray, r: np.ndarray, tol: float) -> None:
    scale = 1.0 + max_abs(r)
    if max_abs(j @ r - r.conj().T @ j) > tol * scale:
        raise InvalidJModuleError("JR = R*J violated")
    eigvals = np.linalg.eigvals(r)
    if np.any(eigvals.real <= 0):
        raise InvalidJModuleError(f"R has non-positive spectrum: {eigvals}")
    if np.any(np.abs(eigvals.imag) > _SPECTRUM_IMAG_TOL * scale):
        raise InvalidJModuleError(f"R has non-real spectrum: {eigvals}")


@dataclass(frozen=True)
class JModuleField:
    """Signature matrix J with R(x) sampled on a quadrature grid.

    Construction validates the signature property, the J-symmetry of every
    sample and positivity of every sample's spectrum.
    """

    J: np.ndarray
    R: SampledMatrixFunction
    interval: Interval
    tol: float = JMOD_TOL

    def __post_init__(self):
        j = np.asarray(self.J, dtype=complex)
        object.__setattr__(self, "J", j)
        if not check_signature(j):
            raise InvalidJModuleError("J is not a signature matrix (J = J*, J^2 = I required)")
        rows, cols = self.R.shape
        if rows != cols or rows != j.shape[0]:
            raise ShapeMismatchError("R samples must be square and match J's size")
        for r in self.R.values:
            _check_field_point(j, r, self.tol)

    @classmethod
    def from_callable(cls, j, r_of_x, interval: Interval, n: int = 64,
                      tol: float = JMOD_TOL) -> "JModuleField":
        grid = gauss_legendre_grid(interval, n)
        samples = np.array([np.asarray(r_of_x(x), dtype=complex) for x in grid.nodes])
        return cls(np.asarray(j, dtype=complex), SampledMatrixFunction(grid, samples),
                   interval, tol)


def _defect_point(j: np.ndarray, r: np.ndarray, psd_tol: float = PSD_TOL) -> np.ndarray:
    """D = J(R - R^{-1}) for one sample, validated Hermitian PSD."""
    sing = np.linalg.svd(r, compute_uv=False)
    if sing[-1] < 1e-14 * (1.0 + sing[0]):
        raise SingularJModuleError("R sample is numerically singular")
    rinv = np.linalg.inv(r)
    d = j @ (r - rinv)
    scale = 1.0 + max_abs(d)
    if hermitian_defect(d) > 1e3 * psd_tol * scale:
        raise InvalidJModuleError("defect matrix is not Hermitian")
    d = hermitian_part(d)
    if np.linalg.eigvalsh(d).min() < -psd_tol * scale:
        raise NotPSDError("defect matrix has a negative eigenvalue")
    return d


def defect_matrix(field: JModuleField) -> SampledMatrixFunction:
    """Defect D(x) = J(R(x) - R(x)^{-1}) at every grid node.

    Each sample is Hermitian positive semidefinite; outside the interval the
    defect is identically zero by definition and is not sampled.
    """
    vals = np.array([_defect_point(field.J, r) for r in field.R.values])
    return SampledMatrixFunction(field.R.grid, vals)


@dataclass(frozen=True)
class DefectFactor:
    """Gauge-fixed factorization D(x) = F1(x)* F1(x).

    F1 has k rows, where k is the maximal thresholded rank of D over the
    grid; samples of lower rank are padded with zero rows.  node_ranks
    records the per-node rank.
    """

    F1: SampledMatrixFunction
    k: int
    node_ranks: np.ndarray

    def __post_init__(self):
        if self.k > self.F1.shape[1]:
            raise InvalidArgumentError("rank k cannot exceed the module size")


def _factor_point(d: np.ndarray, threshold: float) -> tuple:
    """Rows sqrt(lam) v* for eigenvalues above threshold, descending.

    Gauge: each eigenvector's first component of magnitude above 1e-12 is
    rotated to be real positive, making the output deterministic.
    """
    vals, vecs = np.linalg.eigh(hermitian_part(d))
    order = np.argsort(vals)[::-1]
    rows = []
    for idx in order:
        lam = vals[idx]
        if lam <= threshold:
            break
        v = vecs[:, idx]
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if nz.size:
            phase = v[nz[0]] / abs(v[nz[0]])
            v = v * phase.conjugate()
        rows.append(np.sqrt(lam) * v.conj())
    return rows


def factor_defect(d: SampledMatrixFunction, rank_tol: float = RANK_TOL,
                  factor_tol: float = FACTOR_TOL) -> DefectFactor:
    """Factor a sampled defect into F1 with F1* F1 = D.

    The rank threshold is rank_tol relative to the largest sample norm, so
    identically-zero samples do not pick up spurious rank.  Raises
    NotPSDError if any sample reconstructs worse than factor_tol.
    """
    m = d.shape[0]
    if d.shape[0] != d.shape[1]:
        raise ShapeMismatchError("defect samples must be square")
    scale = max(max_abs(v) for v in d.values)
    threshold = rank_tol * max(scale, 1e-300)
    per_node = [_factor_point(v, threshold) for v in d.values]
    ranks = np.array([len(rows) for rows in per_node])
    k = int(ranks.max(initial=0))
    n = d.grid.n
    f1 = np.zeros((n, max(k, 1), m), dtype=complex)
    for i, rows in enumerate(per_node):
        for r_idx, row in enumerate(rows):
            f1[i, r_idx] = row
        recon = f1[i].conj().T @ f1[i]
        if max_abs(recon - d.values[i]) > factor_tol * (1.0 + max_abs(d.values[i])):
            raise NotPSDError(f"defect factorization failed at node {i}")
    return DefectFactor(SampledMatrixFunction(d.grid, f1), k, ranks)


def unipotent_residual(r2: np.ndarray) -> float:
    """``max_abs((R^2 - I)^2)`` for a single sample of R squared."""
    r2 = np.asarray(r2, dtype=complex)
    m = r2 - np.eye(r2.shape[0])
    return max_abs(m @ m)


def check_unipotent_class(field: JModuleField, tol: float = JMOD_TOL) -> bool:
    """True iff (R(x)^2 - I)^2 vanishes within tol at every node."""
    return all(unipotent_residual(r @ r) <= tol for r in field.R.values)
