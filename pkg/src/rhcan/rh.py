"""Cauchy-transform solution of the jump problem on a segment.

Given the density F(x) = F2(x)* F1(x) on [a, b], the sectionally analytic
matrix

    W(z) = I + (1/2pi i) int_a^b F(x) / (x - z) dx

is normalized at infinity, jumps by W+ - W- = F across the segment, and
satisfies the signature symmetry W(z)* J W(conj z) = J together with a
positivity bound in the upper half plane.  This module evaluates W off the
cut, its boundary values on the cut, and the residuals of those identities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    OFF_CUT_MARGIN,
    Interval,
    SampledMatrixFunction,
    hermitian_part,
    max_abs,
)
from .errors import (
    EndpointSingularityError,
    InvalidArgumentError,
    OnCutError,
    ShapeMismatchError,
)
from .intop import (
    DiscretizedOperator,
    KernelSpec,
    build_nystrom,
    interpolate_solution,
    solve_phi,
)

_PANEL_ORDER = 16


def cut_distance(interval: Interval, z: complex) -> float:
    """Euclidean distance from z to the segment [a, b] on the real axis."""
    z = complex(z)
    dx = max(interval.a - z.real, 0.0, z.real - interval.b)
    return float(np.hypot(dx, z.imag))


@dataclass(frozen=True)
class RHSolution:
    """Solved jump data: node samples of F1, F2 and the density F = F2* F1.

    Keeps the discretized operator so off-grid evaluation can interpolate
    through the integral equation instead of through polynomials.
    """

    spec: KernelSpec
    op: DiscretizedOperator
    F1: SampledMatrixFunction
    F2: SampledMatrixFunction
    F: SampledMatrixFunction

    @property
    def interval(self) -> Interval:
        return self.spec.interval

    @property
    def J(self) -> np.ndarray:
        return self.spec.J

    @property
    def grid(self):
        return self.op.grid


def density(f1: SampledMatrixFunction, f2: SampledMatrixFunction) -> SampledMatrixFunction:
    """Pointwise F(x) = F2(x)* F1(x); both inputs are (k, m) on a shared grid."""
    if f1.values.shape != f2.values.shape:
        raise ShapeMismatchError(
            f"F1 and F2 sample shapes differ: {f1.values.shape} vs {f2.values.shape}")
    if f1.grid.n != f2.grid.n or not np.array_equal(f1.grid.nodes, f2.grid.nodes):
        raise ShapeMismatchError("F1 and F2 must be sampled on the same grid")
    vals = np.einsum("nka,nkb->nab", f2.values.conj(), f1.values)
    return SampledMatrixFunction(f1.grid, vals)


def solve_problem(spec: KernelSpec, n: int = 128) -> RHSolution:
    """Build S on the full interval, solve for F2 = S^{-1}(F1 J), form F."""
    op = build_nystrom(spec, spec.interval.b, n)
    f1_vals = spec.sample(op.grid.nodes)
    f1 = SampledMatrixFunction(op.grid, f1_vals)
    f2 = solve_phi(op, f1_vals @ spec.J)
    f = density(f1, f2)
    if not np.all(np.isfinite(f.values)):
        raise InvalidArgumentError("density F has non-finite entries")
    return RHSolution(spec, op, f1, f2, f)


def interpolate_density(sol: RHSolution, x: float) -> np.ndarray:
    """F(x) off the grid, via Nystrom interpolation of F2 and direct F1."""
    f2x = interpolate_solution(sol.op, sol.F2, x,
                               rhs=lambda t: sol.spec.f1(t) @ sol.spec.J)
    return f2x.conj().T @ sol.spec.f1(x)


def _local_spacing(sol: RHSolution) -> float:
    return sol.interval.length / sol.grid.n


def _refined_panels(interval: Interval, x0: float, d: float) -> list:
    """Panel splits of [a, b] geometrically graded toward x0."""
    a, b = interval.a, interval.b
    length = interval.length
    delta = max(d, 1e-12 * length)
    pts = {a, b}
    if a < x0 < b:
        pts.add(x0)
    off = delta
    while off <= 4.0 * length:
        if x0 - off > a:
            pts.add(x0 - off)
        if x0 + off < b:
            pts.add(x0 + off)
        if x0 - off <= a and x0 + off >= b:
            break
        off *= 2.0
    cuts = sorted(pts)
    return [(u, v) for u, v in zip(cuts, cuts[1:]) if v - u > 1e-15 * length]


def cauchy_eval(sol: RHSolution, z: complex,
                off_cut_margin: float = OFF_CUT_MARGIN) -> np.ndarray:
    """W(z) = I + (1/2pi i) int F(x)/(x - z) dx for z off the cut.

    Within a tenth of the node spacing of the cut the stored-grid sum loses
    accuracy, so the integral is recomputed on panels graded toward the
    near point, with F interpolated through the integral equation.
    """
    z = complex(z)
    d = cut_distance(sol.interval, z)
    length = sol.interval.length
    if d <= off_cut_margin * length:
        raise OnCutError(
            f"z = {z} is within {off_cut_margin:g} * length of the cut; "
            "use boundary_values for on-cut evaluation")
    m = sol.spec.m
    eye = np.eye(m, dtype=complex)
    if d >= 0.1 * _local_spacing(sol):
        coef = sol.grid.weights / (sol.grid.nodes - z)
        acc = np.einsum("j,jab->ab", coef, sol.F.values)
        return eye + acc / (2j * np.pi)
    x0 = min(max(z.real, sol.interval.a), sol.interval.b)
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(_PANEL_ORDER)
    acc = np.zeros((m, m), dtype=complex)
    for (u, v) in _refined_panels(sol.interval, x0, d):
        half = 0.5 * (v - u)
        mid = 0.5 * (v + u)
        for t, wt in zip(mid + half * ref_nodes, half * ref_weights):
            acc += wt * interpolate_density(sol, float(t)) / (t - z)
    return eye + acc / (2j * np.pi)


def boundary_values(sol: RHSolution, x: float,
                    pv_margin: float | None = None) -> tuple:
    """(W+, W-) at an interior point by the principal-value split.

        W+-(x) = I + (1/2pi i) PV int F(t)/(t - x) dt  +-  F(x)/2

    The PV integral is discretized by singularity subtraction, the same
    device the operator diagonal uses: subtract F(x) from the numerator and
    integrate the Cauchy weight analytically to log((b - x)/(x - a)).
    """
    a, b = sol.interval.a, sol.interval.b
    length = sol.interval.length
    if not (a < x < b):
        raise InvalidArgumentError(f"boundary point {x} not inside ({a}, {b})")
    if pv_margin is None:
        pv_margin = 2.0 * (sol.grid.nodes[0] - a)
    if x - a < pv_margin or b - x < pv_margin:
        raise EndpointSingularityError(
            f"x = {x} is within {pv_margin:g} of an endpoint, where boundary "
            "values blow up logarithmically")
    fx = interpolate_density(sol, x)
    nodes = sol.grid.nodes
    w = sol.grid.weights
    diffs = nodes - x
    collision = np.abs(diffs) < 1e-9 * length
    safe = ~collision
    acc = np.einsum("j,jab->ab", w[safe] / diffs[safe], sol.F.values[safe] - fx)
    if np.any(collision):
        h = 1e-6 * length
        fprime = (interpolate_density(sol, x + h) - interpolate_density(sol, x - h)) / (2 * h)
        acc = acc + np.sum(w[collision]) * fprime
    pv = (acc + fx * np.log((b - x) / (x - a))) / (2j * np.pi)
    eye = np.eye(sol.spec.m, dtype=complex)
    return eye + pv + 0.5 * fx, eye + pv - 0.5 * fx


def jump_residual(sol: RHSolution, r2_of_x, xs=None) -> float:
    """Max over sample points of |W+(x) - W-(x) R2(x)|."""
    a, b = sol.interval.a, sol.interval.b
    if xs is None:
        xs = a + np.array([0.25, 0.5, 0.75]) * (b - a)
    worst = 0.0
    for x in np.asarray(xs, dtype=float):
        wp, wm = boundary_values(sol, float(x))
        r2 = np.asarray(r2_of_x(float(x)), dtype=complex)
        worst = max(worst, max_abs(wp - wm @ r2))
    return worst


def j_property_residuals(sol: RHSolution, z: complex) -> tuple:
    """Residuals of the signature symmetry and the half-plane positivity.

    Returns (|W(z)* J W(conj z) - J|, positivity defect), the latter being
    max(0, -lambda_min) of (W(z)* J W(z) - J) / (2 Im z) and zero for real z.
    """
    z = complex(z)
    wz = cauchy_eval(sol, z)
    j = sol.J
    if z.imag == 0.0:
        sym = max_abs(wz.conj().T @ j @ wz - j)
        return sym, 0.0
    wzbar = cauchy_eval(sol, np.conj(z))
    sym = max_abs(wz.conj().T @ j @ wzbar - j)
    pos_matrix = hermitian_part((wz.conj().T @ j @ wz - j) / (2.0 * z.imag))
    lam_min = float(np.linalg.eigvalsh(pos_matrix).min())
    return sym, max(0.0, -lam_min)


def normalization_residual(sol: RHSolution, radius: float = 1e6) -> float:
    """Max of |W(z) - I| on two far-field rays (z -> infinity limit check)."""
    mid = 0.5 * (sol.interval.a + sol.interval.b)
    scale = max(1.0, sol.interval.length)
    worst = 0.0
    for theta in (np.pi / 4, 3 * np.pi / 4):
        z = mid + radius * scale * np.exp(1j * theta)
        worst = max(worst, max_abs(cauchy_eval(sol, z) - np.eye(sol.spec.m)))
    return worst


def mean_value_residual(sol: RHSolution, z0: complex, radius: float = 0.1,
                        points: int = 16) -> float:
    """Analyticity probe: W(z0) minus the trapezoid average on a circle.

    The circle must stay off the cut; exact for analytic W up to quadrature
    error, which is spectrally small for the trapezoid rule on a circle.
    """
    z0 = complex(z0)
    if cut_distance(sol.interval, z0) <= radius:
        raise InvalidArgumentError("mean-value circle touches the cut")
    angles = 2 * np.pi * np.arange(points) / points
    avg = np.zeros((sol.spec.m, sol.spec.m), dtype=complex)
    for t in angles:
        avg += cauchy_eval(sol, z0 + radius * np.exp(1j * t))
    avg /= points
    return max_abs(avg - cauchy_eval(sol, z0))
