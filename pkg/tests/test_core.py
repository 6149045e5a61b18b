import numpy as np
import pytest

from rhcan.core import (
    Interval,
    QuadratureGrid,
    SampledMatrixFunction,
    check_signature,
    gauss_legendre_grid,
    hermitian_defect,
    hermitian_part,
    max_abs,
    principal_sqrt_psd,
)
from rhcan.errors import InvalidArgumentError, NotPSDError


def test_interval_validation():
    iv = Interval(0.0, 2.0)
    assert iv.length == 2.0
    with pytest.raises(InvalidArgumentError):
        Interval(1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        Interval(2.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        Interval(0.0, float("inf"))


def test_two_point_rule_nodes_and_weights():
    # closed form on [0,1]: nodes (1 -+ 1/sqrt(3))/2, weights 1/2
    g = gauss_legendre_grid(Interval(0.0, 1.0), 2)
    s = 1.0 / np.sqrt(3.0)
    assert np.allclose(g.nodes, [(1 - s) / 2, (1 + s) / 2], atol=1e-15)
    assert np.allclose(g.weights, [0.5, 0.5], atol=1e-15)


def test_quadrature_degree_exactness():
    # n points integrate polynomials through degree 2n-1 exactly
    g = gauss_legendre_grid(Interval(0.0, 1.0), 4)
    for deg in range(8):
        val = float(np.sum(g.weights * g.nodes**deg))
        assert abs(val - 1.0 / (deg + 1)) < 1e-14, deg


def test_quadrature_first_moment_large_n():
    g = gauss_legendre_grid(Interval(0.0, 1.0), 64)
    assert abs(float(np.sum(g.weights * g.nodes)) - 0.5) < 1e-14
    assert abs(float(np.sum(g.weights)) - 1.0) < 1e-14
    assert np.all(g.weights > 0)
    assert np.all(np.diff(g.nodes) > 0)


def test_grid_rejects_tiny_n():
    with pytest.raises(InvalidArgumentError):
        gauss_legendre_grid(Interval(0.0, 1.0), 1)


def test_sampled_matrix_function_shapes_and_integrate():
    g = gauss_legendre_grid(Interval(0.0, 1.0), 16)
    vals = np.stack([np.array([[x, 0.0], [0.0, x**2]], dtype=complex)
                     for x in g.nodes])
    f = SampledMatrixFunction(g, vals)
    assert f.shape == (2, 2)
    integral = f.integrate()
    assert abs(integral[0, 0] - 0.5) < 1e-14
    assert abs(integral[1, 1] - 1.0 / 3.0) < 1e-14
    with pytest.raises(Exception):
        SampledMatrixFunction(g, vals[:5])


def test_hermitian_helpers():
    a = np.array([[1.0, 2.0 + 1j], [2.0 - 1j, 3.0]])
    assert hermitian_defect(a) < 1e-15
    b = a + np.array([[0, 1e-3], [0, 0]])
    assert hermitian_defect(b) > 1e-4
    assert max_abs(hermitian_part(b) - hermitian_part(b).conj().T) < 1e-15


def test_check_signature_accepts_and_rejects():
    assert check_signature(np.diag([-1.0, 1.0]))
    assert check_signature(np.eye(3))
    assert not check_signature(np.diag([2.0, 1.0]))  # squares to 4
    assert not check_signature(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert not check_signature(np.ones((2, 3)))


def test_principal_sqrt_psd_roundtrip():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    p = a @ a.conj().T  # PSD
    r = principal_sqrt_psd(p)
    assert max_abs(r @ r - p) < 1e-9 * (1 + max_abs(p))
    assert hermitian_defect(r) < 1e-10
    assert float(np.linalg.eigvalsh(r).min()) >= -1e-12


def test_principal_sqrt_rejects_indefinite():
    with pytest.raises(NotPSDError):
        principal_sqrt_psd(np.diag([1.0, -1.0]))
