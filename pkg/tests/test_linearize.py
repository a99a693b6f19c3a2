import numpy as np
import pytest

from emuinertia import (EquilibriumPoint, LinearCipsModel, NonlinearCipsModel, droop_model,
                        find_equilibrium, linearize)
from emuinertia.errors import (DimensionError, EliminationError, EquilibriumNotFoundError,
                               SingularJacobianError)
from emuinertia.linearize import jacobian_fd


def _model(F, G=None, H=None, n_x=1, n_y=0, n_v=0, V=None):
    G = G or (lambda x, y, v, dw, r: np.zeros(0))
    H = H or (lambda x, y, v, dw, r: x[0])
    return NonlinearCipsModel(n_x, n_y, n_v, F, G, H, V)


def test_droop_equilibrium_and_linearization():
    tau, kdr, kie = 0.05, -20.0, -1.5
    nl = droop_model(tau, kdr, kie, P_ref=0.5)
    ep = find_equilibrium(nl, [0.3])
    assert ep.x[0] == pytest.approx(0.5, abs=1e-12)
    lin = linearize(nl, ep)
    assert lin.A[0, 0] == pytest.approx(-1 / tau, rel=1e-8)
    assert lin.B1[0, 0] == pytest.approx(kdr / tau, rel=1e-8)
    assert lin.B2[0, 0] == pytest.approx(kie / tau, rel=1e-8)
    assert lin.C[0, 0] == pytest.approx(1.0, rel=1e-8)
    assert abs(lin.D1) < 1e-8 and abs(lin.D2) < 1e-8


def test_converged_guess_returned_unchanged():
    nl = droop_model(P_ref=0.5)
    ep = find_equilibrium(nl, [0.5])
    assert ep.iterations == 0
    assert ep.x[0] == 0.5


def test_algebraic_consistency():
    m = _model(lambda x, y, v, dw, r: 1.0 - y, lambda x, y, v, dw, r: y - x ** 2, n_y=1)
    ep = find_equilibrium(m, [1.3], [0.0])
    assert ep.x[0] == pytest.approx(1.0, abs=1e-10)
    assert ep.y[0] == pytest.approx(ep.x[0] ** 2, abs=1e-10)


def test_linear_model_is_its_own_linearization():
    A = np.array([[-1.0, 0.4], [-0.3, -2.0]])
    b1, b2, c = np.array([0.5, -1.0]), np.array([2.0, 0.1]), np.array([1.0, -0.7])
    m = _model(lambda x, y, v, dw, r: A @ x + b1 * dw + b2 * r,
               H=lambda x, y, v, dw, r: c @ x + 0.3 * dw - 0.2 * r, n_x=2)
    lin = linearize(m, find_equilibrium(m, [0.1, 0.1]))
    np.testing.assert_allclose(lin.A, A, atol=1e-8)
    np.testing.assert_allclose(lin.B1[:, 0], b1, atol=1e-8)
    np.testing.assert_allclose(lin.B2[:, 0], b2, atol=1e-8)
    np.testing.assert_allclose(lin.C[0], c, atol=1e-8)
    assert lin.D1 == pytest.approx(0.3, abs=1e-8)
    assert lin.D2 == pytest.approx(-0.2, abs=1e-8)


def test_schur_elimination_with_voltage_map():
    # x' = -x + y + V + 2 dw, 0 = y - 0.5 x - rocof, V = 0.1 x, P = y + V
    # => x' = -0.4 x + 2 dw + rocof, P = 0.6 x + rocof
    m = NonlinearCipsModel(
        1, 1, 1,
        lambda x, y, v, dw, r: -x + y + v + 2.0 * dw,
        lambda x, y, v, dw, r: y - 0.5 * x - r,
        lambda x, y, v, dw, r: y[0] + v[0],
        lambda x, y, dw, r: 0.1 * x)
    lin = linearize(m, find_equilibrium(m, [0.2], [0.1]))
    np.testing.assert_allclose([lin.A[0, 0], lin.B1[0, 0], lin.B2[0, 0], lin.C[0, 0], lin.D1, lin.D2],
                               [-0.4, 2.0, 1.0, 0.6, 0.0, 1.0], atol=1e-9)


def test_central_difference_is_second_order():
    fun = lambda z: np.array([np.sin(3.0 * z[0]) * np.exp(z[1]), z[0] ** 3 * z[1]])
    z0 = np.array([0.4, -0.2])
    exact = np.array([[3 * np.cos(1.2) * np.exp(-0.2), np.sin(1.2) * np.exp(-0.2)],
                      [3 * 0.16 * -0.2, 0.064]])
    h = 1e-2
    e1 = np.max(np.abs(jacobian_fd(fun, z0, steps=h) - exact))
    e2 = np.max(np.abs(jacobian_fd(fun, z0, steps=h / 2) - exact))
    assert 3.5 < e1 / e2 < 4.5


def test_equilibrium_errors():
    m = _model(lambda x, y, v, dw, r: x ** 2 + 1.0)
    with pytest.raises(SingularJacobianError):
        find_equilibrium(m, [0.0])
    with pytest.raises(EquilibriumNotFoundError) as info:
        find_equilibrium(m, [1.0])
    assert info.value.residual_norm > 0
    with pytest.raises(DimensionError):
        find_equilibrium(droop_model(), [0.5, 0.5])


def test_singular_algebraic_block():
    m = _model(lambda x, y, v, dw, r: -x, lambda x, y, v, dw, r: y ** 2, n_y=1)
    with pytest.raises(EliminationError) as info:
        linearize(m, EquilibriumPoint(np.zeros(1), np.zeros(1), np.zeros(0)))
    assert 'condition' in str(info.value)


def test_not_an_equilibrium():
    with pytest.raises(ValueError):
        linearize(droop_model(), EquilibriumPoint(np.array([0.1]), np.zeros(0), np.zeros(0)))


def test_unstable_linearization_warns():
    m = _model(lambda x, y, v, dw, r: 0.5 * x)
    with pytest.warns(RuntimeWarning):
        lin = linearize(m, find_equilibrium(m, [0.0]))
    assert not lin.is_stable


def test_linear_model_validation_and_round_trip():
    lin = LinearCipsModel([[-1.0, 0.0], [1.0, -2.0]], [1.0, 2.0], [[0.0], [1.0]], [1.0, 1.0],
                          0.5, -0.5)
    assert lin.B1.shape == (2, 1) and lin.C.shape == (1, 2)
    back = LinearCipsModel.from_dict(lin.to_dict())
    for name in ('A', 'B1', 'B2', 'C'):
        np.testing.assert_array_equal(getattr(back, name), getattr(lin, name))
    with pytest.raises(DimensionError):
        LinearCipsModel(np.ones((2, 3)), [1, 2], [1, 2], [1, 2])
    with pytest.raises(DimensionError):
        LinearCipsModel(-np.eye(2), [1, 2, 3], [1, 2], [1, 2])
    with pytest.raises(ValueError):
        lin.A[0, 0] = 3.0
