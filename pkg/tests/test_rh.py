import numpy as np
import pytest

from rhcan.core import max_abs
from rhcan.errors import (
    EndpointSingularityError,
    InvalidArgumentError,
    OnCutError,
)
from rhcan.examples import (
    jump_matrix_squared,
    rank_one_spec,
    sine_gamma_spec,
    sine_spec,
)
from rhcan.rh import (
    boundary_values,
    cauchy_eval,
    interpolate_density,
    j_property_residuals,
    jump_residual,
    mean_value_residual,
    normalization_residual,
    solve_problem,
)

C_Q = 0.23347110346212993 + 1.4669422069242598j  # q(x) = x + C_Q


def _exact_rank_one_W(z):
    """Cauchy transform of the closed-form density, entrywise.

    F(t) = F2*(t) F1(t) has quadratic polynomial entries; the transform
    reduces to I_j(z) = int_0^1 t^j/(t-z) dt with elementary closed forms.
    """
    i0 = np.log((1.0 - z) / (-z))
    i1 = 1.0 + z * i0
    i2 = 0.5 + z + z * z * i0

    def entry(alpha, beta, gamma):
        return alpha * i2 + beta * i1 + gamma * i0

    cb = np.conj(C_Q)
    f = np.empty((2, 2), dtype=complex)
    f[0, 0] = entry(-1.0, -(cb + 1j), -1j * cb)
    f[0, 1] = entry(-1.0, -(cb - 1j), 1j * cb)
    f[1, 0] = entry(1.0, C_Q + 1j, 1j * C_Q)
    f[1, 1] = entry(1.0, C_Q - 1j, -1j * C_Q)
    return np.eye(2) + f / (2j * np.pi)


@pytest.fixture(scope="module")
def rank_one_sol():
    spec, _ = rank_one_spec()
    return solve_problem(spec, 256)


def test_density_closed_form(rank_one_sol):
    spec, exact = rank_one_spec()
    sol = rank_one_sol
    for i in (0, 80, 255):
        x = sol.grid.nodes[i]
        expect = exact.f2(x).conj().T @ spec.f1(x)
        assert max_abs(sol.F.values[i] - expect) < 1e-12


def test_interpolate_density_off_grid(rank_one_sol):
    spec, exact = rank_one_spec()
    x = 0.377
    expect = exact.f2(x).conj().T @ spec.f1(x)
    assert max_abs(interpolate_density(rank_one_sol, x) - expect) < 1e-10


def test_cauchy_eval_far_matches_closed_form(rank_one_sol):
    for z in (0.5 + 0.3j, 2.0j, -3.0 + 1.0j, 5.0 + 0.0j):
        expect = _exact_rank_one_W(z)
        got = cauchy_eval(rank_one_sol, z)
        assert max_abs(got - expect) < 1e-9, z


def test_cauchy_eval_near_cut_refined_path(rank_one_sol):
    # y = 1e-4 lies below the plain-sum trigger at n=256, so this drives
    # the panel-refined path near the log singularity at the endpoint
    for z in (1e-3j, 1e-4j, 0.3 + 1e-4j):
        expect = _exact_rank_one_W(z)
        got = cauchy_eval(rank_one_sol, z)
        assert max_abs(got - expect) < 1e-7, z


def test_cauchy_eval_on_cut_raises(rank_one_sol):
    with pytest.raises(OnCutError):
        cauchy_eval(rank_one_sol, 0.5 + 0.0j)


def test_boundary_jump_is_density(rank_one_sol):
    # W+ - W- = F pointwise, exactly as interpolated
    for x in (0.25, 0.5, 0.75):
        wp, wm = boundary_values(rank_one_sol, x)
        f = interpolate_density(rank_one_sol, x)
        assert max_abs((wp - wm) - f) < 1e-13


def test_boundary_values_validation(rank_one_sol):
    with pytest.raises(InvalidArgumentError):
        boundary_values(rank_one_sol, 1.5)
    with pytest.raises(EndpointSingularityError):
        boundary_values(rank_one_sol, 1e-9)


def test_multiplicative_jump_small():
    for spec in (sine_spec(u=1.0), sine_gamma_spec(gamma=0.5, u=1.0)):
        sol = solve_problem(spec, 128)
        r2 = jump_matrix_squared(spec)
        assert jump_residual(sol, r2, xs=[0.25, 0.5, 0.75]) < 1e-4


def test_j_symmetry_and_positivity(rank_one_sol):
    sym, pos = j_property_residuals(rank_one_sol, 2.0j)
    assert sym < 1e-6
    assert pos < 1e-6
    sol = solve_problem(sine_spec(), 128)
    sym, pos = j_property_residuals(sol, 1.0 + 1.0j)
    assert sym < 1e-6
    assert pos < 1e-6
    # real z: only the symmetry part is defined
    sym, pos = j_property_residuals(rank_one_sol, 5.0 + 0.0j)
    assert sym < 1e-6 and pos == 0.0


def test_normalization(rank_one_sol):
    assert normalization_residual(rank_one_sol) < 1e-5


def test_mean_value_property(rank_one_sol):
    assert mean_value_residual(rank_one_sol, 0.5 + 0.5j, radius=0.1) < 1e-6
    with pytest.raises(InvalidArgumentError):
        mean_value_residual(rank_one_sol, 0.5 + 0.05j, radius=0.1)


def test_continuity_across_axis_off_cut(rank_one_sol):
    # W extends analytically through the real axis outside [a, b]
    eps = 1e-6
    up = cauchy_eval(rank_one_sol, 2.0 + 1j * eps)
    dn = cauchy_eval(rank_one_sol, 2.0 - 1j * eps)
    assert max_abs(up - dn) < 1e-6
