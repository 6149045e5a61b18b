"""Integrable-operator kernels and their Nystrom discretization.

The operator acting on k-vector functions over [a, xi] is

    (S f)(x) = L(x) f(x) + (i/2pi) PV int_a^xi  F1(x) J F1(t)* / (x - t) f(t) dt

with multiplicative weight L(x) = [I + (F1 J F1*)^2 / 4]^{1/2}.  When the
numerator vanishes on the diagonal (every built-in example) the kernel is
smooth, L = I, and plain Nystrom quadrature applies.  Otherwise the
principal value is discretized by singularity subtraction: the analytically
integrated Cauchy weight log((x-a)/(xi-x)) lands on the diagonal together
with the subtracted quadrature sum, which keeps the weight-symmetrized
matrix exactly Hermitian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    COND_LIMIT,
    DIAG_TOL,
    Interval,
    PSD_TOL,
    QuadratureGrid,
    SOLVE_TOL,
    SampledMatrixFunction,
    check_signature,
    gauss_legendre_grid,
    hermitian_part,
    max_abs,
    principal_sqrt_psd,
)
from .errors import (
    DegenerateWeightError,
    IllConditionedError,
    InvalidArgumentError,
    PVDiagonalError,
    ShapeMismatchError,
)

_I2PI = 1j / (2.0 * np.pi)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel data: interval, signature matrix J, and F1(x) of shape (k, m).

    F1_deriv supplies the analytic derivative used for the removable
    diagonal limit; build specs through make_kernel_spec, which fills in a
    finite-difference fallback and validates the smooth_diagonal claim.
    """

    interval: Interval
    J: np.ndarray
    F1: object
    F1_deriv: object
    smooth_diagonal: bool
    k: int
    m: int
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def f1(self, x: float) -> np.ndarray:
        v = np.asarray(self.F1(x), dtype=complex)
        if v.shape != (self.k, self.m):
            raise ShapeMismatchError(f"F1({x}) has shape {v.shape}, expected {(self.k, self.m)}")
        return v

    def f1_deriv(self, x: float) -> np.ndarray:
        return np.asarray(self.F1_deriv(x), dtype=complex).reshape(self.k, self.m)

    def sample(self, xs) -> np.ndarray:
        return np.array([self.f1(float(x)) for x in np.asarray(xs).ravel()])


def make_kernel_spec(interval: Interval, j, f1, f1_deriv=None,
                     smooth_diagonal=None, name: str = "custom",
                     params: dict | None = None,
                     diag_tol: float = DIAG_TOL) -> KernelSpec:
    """Validate and assemble a KernelSpec.

    smooth_diagonal=None autodetects by sampling F1 J F1* at 101 points;
    an explicit True is verified against the same bound.  A missing
    derivative falls back to central differences with step 1e-6 times the
    interval length.
    """
    j = np.asarray(j, dtype=complex)
    if not check_signature(j):
        raise InvalidArgumentError("J is not a signature matrix (J = J*, J^2 = I required)")
    probe = np.asarray(f1(interval.a + 0.5 * interval.length), dtype=complex)
    if probe.ndim == 1:
        raw = f1
        f1 = lambda x, _raw=raw: np.atleast_2d(_raw(x))
        probe = np.atleast_2d(probe)
    k, m = probe.shape
    if j.shape != (m, m):
        raise ShapeMismatchError(f"J must be {m}x{m} to match F1's columns, got {j.shape}")
    xs = np.linspace(interval.a, interval.b, 101)
    diag_max = 0.0
    for x in xs:
        e = np.asarray(f1(x), dtype=complex)
        diag_max = max(diag_max, max_abs(e @ j @ e.conj().T))
    if smooth_diagonal is None:
        smooth_diagonal = diag_max <= diag_tol
    elif smooth_diagonal and diag_max > diag_tol:
        raise InvalidArgumentError(
            f"smooth_diagonal claimed but max |F1 J F1*| = {diag_max:.3e} > {diag_tol:.1e}")
    if f1_deriv is None:
        h = 1e-6 * interval.length
        f1_deriv = lambda x, _f=f1, _h=h: (np.asarray(_f(x + _h), dtype=complex)
                                           - np.asarray(_f(x - _h), dtype=complex)) / (2 * _h)
    return KernelSpec(interval, j, f1, f1_deriv, bool(smooth_diagonal), k, m,
                      name=name, params=dict(params or {}))


def scalar_weight(spec: KernelSpec, x: float) -> np.ndarray:
    """Multiplicative weight L(x) = [I + (F1 J F1*)^2 / 4]^{1/2}.

    The numerator F1 J F1* is Hermitian for genuine signature data, so the
    radicand has spectrum >= 1; an eigenvalue below PSD_TOL means the input
    is degenerate and raises DegenerateWeightError.
    """
    e = spec.f1(x)
    c = e @ spec.J @ e.conj().T
    radicand = np.eye(spec.k) + 0.25 * (c @ c)
    vals, vecs = np.linalg.eigh(hermitian_part(radicand))
    if vals.min() < PSD_TOL:
        raise DegenerateWeightError(
            f"weight radicand has eigenvalue {vals.min():.3e} at x = {x}")
    return hermitian_part((vecs * np.sqrt(vals)) @ vecs.conj().T)


def _numerator(spec: KernelSpec, x: float, t: float) -> np.ndarray:
    return spec.f1(x) @ spec.J @ spec.f1(t).conj().T


def kernel_value(spec: KernelSpec, x: float, t: float) -> np.ndarray:
    """Kernel block (i/2pi) F1(x) J F1(t)* / (x - t).

    On the diagonal returns the removable limit
    -(i/2pi) F1(x) J F1'(x)* for smooth kernels and raises
    PVDiagonalError otherwise.
    """
    if x == t:
        if not spec.smooth_diagonal:
            raise PVDiagonalError("kernel diagonal is a principal value only")
        return -_I2PI * (spec.f1(x) @ spec.J @ spec.f1_deriv(x).conj().T)
    return _I2PI * _numerator(spec, x, t) / (x - t)


@dataclass(frozen=True)
class DiscretizedOperator:
    """Nystrom matrix of S on the clipped interval [a, xi].

    matrix is (n k, n k) in node-major blocks and already carries the
    quadrature weights on its columns (weights_applied).
    """

    grid: QuadratureGrid
    xi: float
    k: int
    m: int
    matrix: np.ndarray
    spec: KernelSpec
    weights_applied: bool = True

    @property
    def n(self) -> int:
        return self.grid.n

    def block(self, i: int, j: int) -> np.ndarray:
        k = self.k
        return self.matrix[i * k:(i + 1) * k, j * k:(j + 1) * k]

    def symmetrized(self) -> np.ndarray:
        """Similarity transform by sqrt(weights); Hermitian for valid kernels."""
        sw = np.sqrt(np.repeat(self.grid.weights, self.k))
        return (sw[:, None] * self.matrix) / sw[None, :]

    def min_symmetrized_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(hermitian_part(self.symmetrized())).min())


def build_nystrom(spec: KernelSpec, xi: float, n: int) -> DiscretizedOperator:
    """Discretize S on [a, xi] with an n-point Gauss-Legendre rule.

    Smooth kernels use plain Nystrom including the diagonal limit.  The
    principal-value path subtracts the singularity: off-diagonal blocks are
    unchanged and the diagonal receives

        L(x_i) + (i/2pi) N(x_i,x_i) [log((x_i-a)/(xi-x_i)) - sum_{j!=i} w_j/(x_i-x_j)]

    which is the analytically integrated Cauchy weight plus the subtracted
    quadrature sum applied to f(x_i).
    """
    a = spec.interval.a
    if not (a < xi <= spec.interval.b):
        raise InvalidArgumentError(f"xi must lie in ({a}, {spec.interval.b}], got {xi}")
    grid = gauss_legendre_grid(Interval(a, xi), n)
    x = grid.nodes
    w = grid.weights
    e = spec.sample(x)                       # (n, k, m)
    nmat = np.einsum("iab,bc,jdc->ijad", e, spec.J, e.conj())   # N[i,j] = F1_i J F1_j*
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    kmat = _I2PI * nmat / diff[:, :, None, None]
    kmat *= w[None, :, None, None]
    k = spec.k
    for i in range(grid.n):
        diag = scalar_weight(spec, x[i])
        if spec.smooth_diagonal:
            lim = -_I2PI * (e[i] @ spec.J @ spec.f1_deriv(x[i]).conj().T)
            diag = diag + w[i] * lim
        else:
            others = np.arange(grid.n) != i
            sub = np.sum(w[others] / (x[i] - x[others]))
            logw = np.log((x[i] - a) / (xi - x[i]))
            diag = diag + _I2PI * hermitian_part(nmat[i, i]) * (logw - sub)
        kmat[i, i] = diag
    matrix = kmat.transpose(0, 2, 1, 3).reshape(grid.n * k, grid.n * k)
    return DiscretizedOperator(grid, float(xi), k, spec.m, matrix, spec)


def solve_phi(op: DiscretizedOperator, rhs_samples: np.ndarray | None = None,
              solve_tol: float = SOLVE_TOL,
              cond_limit: float = COND_LIMIT) -> SampledMatrixFunction:
    """Solve S Phi = F1 (or a supplied right-hand side) on the grid.

    Raises IllConditionedError when cond(S) >= cond_limit or the residual
    exceeds solve_tol.
    """
    if rhs_samples is None:
        rhs_samples = op.spec.sample(op.grid.nodes)
    rhs_samples = np.asarray(rhs_samples, dtype=complex)
    n, k = op.n, op.k
    cols = rhs_samples.shape[2]
    rhs = rhs_samples.reshape(n * k, cols)
    cond = np.linalg.cond(op.matrix)
    if not np.isfinite(cond) or cond >= cond_limit:
        raise IllConditionedError(f"operator condition number {cond:.3e} >= {cond_limit:.1e}")
    sol = np.linalg.solve(op.matrix, rhs)
    residual = max_abs(op.matrix @ sol - rhs)
    if residual > solve_tol * (1.0 + max_abs(rhs)):
        raise IllConditionedError(f"solve residual {residual:.3e} exceeds {solve_tol:.1e}")
    return SampledMatrixFunction(op.grid, sol.reshape(n, k, cols))


def compute_F2(spec: KernelSpec, n: int) -> SampledMatrixFunction:
    """F2 = S^{-1}(F1 J) on the full interval (xi = b)."""
    op = build_nystrom(spec, spec.interval.b, n)
    rhs = spec.sample(op.grid.nodes) @ spec.J
    return solve_phi(op, rhs)


def commutator_identity_residual(op: DiscretizedOperator) -> float:
    """Max over i != j of |(x_i - x_j) S_ij - (i/2pi) F1(x_i) J F1(x_j)* w_j|.

    Zero by construction for the implemented discretization; nonzero values
    flag an inconsistent matrix.
    """
    x = op.grid.nodes
    w = op.grid.weights
    e = op.spec.sample(x)
    nmat = np.einsum("iab,bc,jdc->ijad", e, op.spec.J, e.conj())
    worst = 0.0
    for i in range(op.n):
        for j in range(op.n):
            if i == j:
                continue
            res = (x[i] - x[j]) * op.block(i, j) - _I2PI * nmat[i, j] * w[j]
            worst = max(worst, max_abs(res))
    return worst


def interpolate_solution(op: DiscretizedOperator, samples, x: float,
                         rhs=None) -> np.ndarray:
    """Natural Nystrom interpolation of a solved density at an off-grid x.

    Uses the integral equation itself to extend the node values: exact at
    the nodes and spectrally accurate in between for smooth kernels.  rhs
    must be the same right-hand side the samples solve for (default F1;
    pass ``lambda t: spec.f1(t) @ spec.J`` for an F2 sample set).
    """
    if isinstance(samples, SampledMatrixFunction):
        samples = samples.values
    samples = np.asarray(samples, dtype=complex)
    a, xi = op.grid.interval.a, op.xi
    if not (a <= x <= xi):
        raise InvalidArgumentError(f"interpolation point {x} outside [{a}, {xi}]")
    spec = op.spec
    if rhs is None:
        rhs = spec.f1
    nodes = op.grid.nodes
    w = op.grid.weights
    nearest = int(np.argmin(np.abs(nodes - x)))
    if abs(nodes[nearest] - x) < 1e-12 * spec.interval.length:
        return samples[nearest]
    ex = spec.f1(x)
    nrow = np.einsum("ab,bc,jdc->jad", ex, spec.J, spec.sample(nodes).conj())
    coef = w / (x - nodes)
    integral = _I2PI * np.einsum("j,jab,jbc->ac", coef, nrow, samples)
    lw = scalar_weight(spec, x)
    b = np.asarray(rhs(x), dtype=complex) - integral
    if spec.smooth_diagonal:
        return np.linalg.solve(lw, b)
    nxx = hermitian_part(ex @ spec.J @ ex.conj().T)
    amat = lw + _I2PI * nxx * (np.log((x - a) / (xi - x)) - float(np.sum(coef)))
    return np.linalg.solve(amat, b)


def build_nystrom_from_samples(grid: QuadratureGrid, g: np.ndarray, j,
                               l_values: np.ndarray, sign: float = -1.0) -> np.ndarray:
    """Nystrom matrix for a kernel sign*(i/2pi) G(x) J G(t)*/(x - t) given samples.

    Used to realize the inverse operator, whose kernel is built from F2 with
    the opposite sign.  The diagonal limit uses a second-order derivative
    estimate of the samples on the (non-uniform) grid; the numerator must
    vanish on the diagonal for this to be meaningful.
    """
    g = np.asarray(g, dtype=complex)
    j = np.asarray(j, dtype=complex)
    n, k, _ = g.shape
    x = grid.nodes
    w = grid.weights
    nmat = np.einsum("iab,bc,jdc->ijad", g, j, g.conj())
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    kmat = sign * _I2PI * nmat / diff[:, :, None, None]
    kmat *= w[None, :, None, None]
    gprime = np.gradient(g, x, axis=0)
    for i in range(n):
        lim = -sign * _I2PI * (g[i] @ j @ gprime[i].conj().T)
        kmat[i, i] = l_values[i] + w[i] * lim
    return kmat.transpose(0, 2, 1, 3).reshape(n * k, n * k)
