"""Small-signal linearization of a converter DAE model.

The nonlinear model is

    x' = F(x, y, V, dw, dw_dot)
    0  = G(x, y, V, dw, dw_dot)
    P_gen = H(x, y, V, dw, dw_dot)

with the terminal voltage closed by a user-supplied map V = g(x, y, dw, dw_dot).
Linearizing at an equilibrium and eliminating y and V by a Schur complement
yields

    dx' = A dx + B1 dw + B2 dw_dot
    dP_gen = C dx + D1 dw + D2 dw_dot
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionError, EliminationError, EquilibriumNotFoundError,
                     SingularJacobianError)
from .lti_core import as_matrix

__all__ = ['NonlinearCipsModel', 'EquilibriumPoint', 'LinearCipsModel',
           'jacobian_fd', 'find_equilibrium', 'linearize']

_EMPTY = np.zeros(0)


def _const_voltage(x, y, dw, rocof):
    return _EMPTY


@dataclass(frozen=True, eq=False)
class NonlinearCipsModel:
    """Residual functions all take ``(x, y, V, dw, rocof)``; the voltage map
    takes ``(x, y, dw, rocof)``. ``n_y`` and ``n_v`` may be zero.
    """

    n_x: int
    n_y: int
    n_v: int
    residual_F: object
    residual_G: object
    output_H: object
    voltage_map: object = None
    name: str = 'custom'
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 0 or self.n_v < 0:
            raise DimensionError("need n_x >= 1 and n_y, n_v >= 0")
        if self.voltage_map is None:
            if self.n_v:
                raise DimensionError("a voltage_map is required when n_v > 0")
            object.__setattr__(self, 'voltage_map', _const_voltage)

    def voltage(self, x, y, dw=0.0, rocof=0.0):
        return np.asarray(self.voltage_map(x, y, dw, rocof), dtype=float).reshape(self.n_v)

    def f(self, x, y, dw=0.0, rocof=0.0):
        V = self.voltage(x, y, dw, rocof)
        return np.asarray(self.residual_F(x, y, V, dw, rocof), dtype=float).reshape(self.n_x)

    def g(self, x, y, dw=0.0, rocof=0.0):
        if self.n_y == 0:
            return _EMPTY
        V = self.voltage(x, y, dw, rocof)
        return np.asarray(self.residual_G(x, y, V, dw, rocof), dtype=float).reshape(self.n_y)

    def p_gen(self, x, y, dw=0.0, rocof=0.0):
        V = self.voltage(x, y, dw, rocof)
        return float(np.asarray(self.output_H(x, y, V, dw, rocof), dtype=float).reshape(-1)[0])


@dataclass(frozen=True, eq=False)
class EquilibriumPoint:
    x: np.ndarray
    y: np.ndarray
    V: np.ndarray
    iterations: int = 0
    residual_norm: float = 0.0


@dataclass(frozen=True, eq=False)
class LinearCipsModel:
    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C: np.ndarray
    D1: float = 0.0
    D2: float = 0.0
    equilibrium: EquilibriumPoint = None

    def __post_init__(self):
        A = as_matrix(self.A, 'A')
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got shape {A.shape}")
        B1 = _reshaped(self.B1, (n, 1), 'B1')
        B2 = _reshaped(self.B2, (n, 1), 'B2')
        C = _reshaped(self.C, (1, n), 'C')
        for name, M in (('A', A), ('B1', B1), ('B2', B2), ('C', C)):
            M.setflags(write=False)
            object.__setattr__(self, name, M)
        object.__setattr__(self, 'D1', float(self.D1))
        object.__setattr__(self, 'D2', float(self.D2))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def eigenvalues(self):
        return np.linalg.eigvals(self.A)

    @property
    def is_stable(self):
        return bool(np.all(self.eigenvalues.real < 0))

    def to_dict(self):
        return {'A': self.A.tolist(), 'B1': self.B1.tolist(), 'B2': self.B2.tolist(),
                'C': self.C.tolist(), 'D1': self.D1, 'D2': self.D2}

    @classmethod
    def from_dict(cls, d):
        return cls(d['A'], d['B1'], d['B2'], d['C'], d.get('D1', 0.0), d.get('D2', 0.0))


def _reshaped(M, shape, name):
    M = as_matrix(M, name)
    if M.size != shape[0] * shape[1]:
        raise DimensionError(f"{name} must be {shape[0]}x{shape[1]}, got shape {M.shape}")
    return M.reshape(shape)


def _steps(z, rel_step):
    return np.maximum(rel_step, rel_step * np.abs(z))


def jacobian_fd(fun, z0, rel_step=1e-6, steps=None):
    """Central-difference Jacobian, step max(rel_step, rel_step |z|) per coordinate."""
    z0 = np.asarray(z0, dtype=float).reshape(-1)
    f0 = np.asarray(fun(z0), dtype=float).reshape(-1)
    h = _steps(z0, rel_step) if steps is None else np.broadcast_to(steps, z0.shape)
    J = np.empty((f0.size, z0.size))
    for j in range(z0.size):
        zp = z0.copy()
        zm = z0.copy()
        zp[j] += h[j]
        zm[j] -= h[j]
        J[:, j] = (np.asarray(fun(zp), dtype=float).reshape(-1)
                   - np.asarray(fun(zm), dtype=float).reshape(-1)) / (2.0 * h[j])
    return J


def _stacked_residual(model):
    nx = model.n_x

    def res(z):
        x, y = z[:nx], z[nx:]
        return np.concatenate([model.f(x, y), model.g(x, y)])
    return res


def find_equilibrium(model, x_guess, y_guess=None, tol=1e-10, max_iter=50):
    """Newton iteration on [F; G] = 0 with dw = dw_dot = 0."""
    x_guess = np.array(x_guess, dtype=float).reshape(-1)
    if x_guess.size != model.n_x:
        raise DimensionError(f"x_guess has length {x_guess.size}, expected {model.n_x}")
    y_guess = np.zeros(model.n_y) if y_guess is None else np.array(y_guess, dtype=float).reshape(-1)
    if y_guess.size != model.n_y:
        raise DimensionError(f"y_guess has length {y_guess.size}, expected {model.n_y}")

    res = _stacked_residual(model)
    z = np.concatenate([x_guess, y_guess])
    r = res(z)
    norm = np.max(np.abs(r), initial=0.0)
    it = 0
    while norm > tol:
        if it == max_iter:
            raise EquilibriumNotFoundError(norm, it)
        J = jacobian_fd(res, z)
        try:
            if np.linalg.cond(J) > 1e14:
                raise np.linalg.LinAlgError
            z = z - np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise SingularJacobianError(
                f"Jacobian of [F; G] is singular at iteration {it}") from None
        it += 1
        r = res(z)
        norm = np.max(np.abs(r), initial=0.0)
        if not np.isfinite(norm):
            raise EquilibriumNotFoundError(norm, it)

    x, y = z[:model.n_x], z[model.n_x:]
    return EquilibriumPoint(x, y, model.voltage(x, y), it, float(norm))


def linearize(model, ep, rel_step=1e-6, check=True):
    """Jacobians by central differences, voltage substituted by the chain rule,
    algebraic variables removed by a Schur complement on dG/dy.
    """
    nx, ny, nv = model.n_x, model.n_y, model.n_v
    x0, y0 = np.asarray(ep.x, dtype=float), np.asarray(ep.y, dtype=float)
    V0 = model.voltage(x0, y0)
    if check:
        r = np.concatenate([model.f(x0, y0), model.g(x0, y0)])
        if np.max(np.abs(r), initial=0.0) > 1e-9:
            raise ValueError("point is not an equilibrium: |[F; G]|_inf = "
                             f"{np.max(np.abs(r)):.3e} > 1e-9")

    # raw Jacobians w.r.t. w = (x, y, V, dw, rocof)
    w0 = np.concatenate([x0, y0, V0, [0.0, 0.0]])
    sx, sy, sv = slice(0, nx), slice(nx, nx + ny), slice(nx + ny, nx + ny + nv)
    su = slice(nx + ny + nv, nx + ny + nv + 2)

    def raw(w):
        x, y, V, dw, rc = w[sx], w[sy], w[sv], w[su][0], w[su][1]
        parts = [np.asarray(model.residual_F(x, y, V, dw, rc), dtype=float).reshape(nx)]
        if ny:
            parts.append(np.asarray(model.residual_G(x, y, V, dw, rc), dtype=float).reshape(ny))
        parts.append(np.asarray(model.output_H(x, y, V, dw, rc), dtype=float).reshape(1))
        return np.concatenate(parts)

    J = jacobian_fd(raw, w0, rel_step)
    # voltage map Jacobian w.r.t. v = (x, y, dw, rocof)
    v0 = np.concatenate([x0, y0, [0.0, 0.0]])
    if nv:
        Jg = jacobian_fd(lambda v: model.voltage(v[:nx], v[nx:nx + ny], v[-2], v[-1]), v0, rel_step)
    else:
        Jg = np.zeros((0, nx + ny + 2))

    # chain rule: columns for (x, y, u) after V = g(x, y, u)
    Jxyu = np.concatenate([J[:, sx], J[:, sy], J[:, su]], axis=1) + J[:, sv] @ Jg
    rows_f, rows_g, row_h = slice(0, nx), slice(nx, nx + ny), nx + ny
    cx, cy, cu = slice(0, nx), slice(nx, nx + ny), slice(nx + ny, nx + ny + 2)

    Fx, Fy, Fu = Jxyu[rows_f, cx], Jxyu[rows_f, cy], Jxyu[rows_f, cu]
    Hx, Hy, Hu = Jxyu[row_h, cx], Jxyu[row_h, cy], Jxyu[row_h, cu]
    if ny:
        Gx, Gy, Gu = Jxyu[rows_g, cx], Jxyu[rows_g, cy], Jxyu[rows_g, cu]
        cond = np.linalg.cond(Gy)
        if not np.isfinite(cond) or cond > 1e12:
            raise EliminationError(cond)
        # dy = -Gy^{-1} (Gx dx + Gu du)
        Sx = np.linalg.solve(Gy, Gx)
        Su = np.linalg.solve(Gy, Gu)
        A = Fx - Fy @ Sx
        Bu = Fu - Fy @ Su
        C = Hx - Hy @ Sx
        Du = Hu - Hy @ Su
    else:
        A, Bu, C, Du = Fx, Fu, Hx, Hu

    lin = LinearCipsModel(A, Bu[:, [0]], Bu[:, [1]], C.reshape(1, nx), Du[0], Du[1],
                          EquilibriumPoint(x0, y0, V0, ep.iterations, ep.residual_norm))
    if not lin.is_stable:
        warnings.warn("linearized CIPS model is not asymptotically stable; "
                      "large-time limits of the emulation gains do not exist",
                      RuntimeWarning, stacklevel=2)
    return lin
