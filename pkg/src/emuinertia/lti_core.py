"""Dense LTI kernels: matrix exponentials and exact forced responses.

Forced responses against a template input are computed without quadrature.
The input u(tau) = sum_k c_k tau^k exp(-b tau) is itself the output of the
autonomous system w' = (N - b I) w, w(0) = e_0, with w_k = tau^k exp(-b tau)
and N[k, k-1] = k, so the convolution is a block of one matrix exponential.
"""

import numpy as np
import scipy.linalg

from .errors import DimensionError

__all__ = ['as_matrix', 'as_vector', 'expm', 'phi_functions', 'solve_homogeneous',
           'convolve_poly_exp', 'solve_forced']


def as_matrix(M, name='matrix'):
    M = np.array(M, dtype=float, ndmin=2)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-d array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def as_vector(x, n, name='state vector'):
    x = np.array(x, dtype=float).reshape(-1)
    if x.shape != (n,):
        raise DimensionError(f"{name} has length {x.size}, expected {n}")
    return x


def _square(M, name='matrix'):
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def expm(M, t=1.0):
    """exp(M t) by scaling and squaring with a Pade approximant."""
    M = _square(M)
    if t == 0:
        return np.eye(M.shape[0])
    return scipy.linalg.expm(M * t)


def phi_functions(M, t):
    """Return (exp(Mt), phi1(Mt), phi2(Mt)).

    phi1(Z) = sum Z^k/(k+1)!, phi2(Z) = sum Z^k/(k+2)!, read off a single
    exponential of [[Mt, I, 0], [0, 0, I], [0, 0, 0]]. They give
    I - exp(Mt) = -t M phi1(Mt) without the cancellation of the direct
    difference when |Mt| is small.
    """
    M = _square(M)
    n = M.shape[0]
    Z = np.zeros((3 * n, 3 * n))
    Z[:n, :n] = M * t
    Z[:n, n:2 * n] = np.eye(n)
    Z[n:2 * n, 2 * n:] = np.eye(n)
    E = scipy.linalg.expm(Z)
    return E[:n, :n], E[:n, n:2 * n], E[:n, 2 * n:]


def solve_homogeneous(A, x0, t):
    A = _square(A, 'A')
    x0 = as_vector(x0, A.shape[0], 'x0')
    if t < 0:
        raise ValueError("t must be non-negative")
    return expm(A, t) @ x0


def _input_block(A, B, tpl):
    A = _square(A, 'A')
    B = as_matrix(B, 'B')
    n = A.shape[0]
    if B.shape != (n, 1):
        raise DimensionError(f"B must be {n}x1, got shape {B.shape}")
    m = tpl.order + 1
    shift = np.diag(np.arange(1.0, m), -1) - tpl.b * np.eye(m)
    return A, B, n, m, shift


def convolve_poly_exp(A, B, tpl, t, drive='rocof'):
    """int_0^t exp(A (t - tau)) B u(tau) dtau for a template-shaped input.

    ``drive='rocof'`` uses u = template ROCOF; ``drive='deviation'`` uses its
    integral, realized by one extra integrator state between the template
    generator and the plant.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    A, B, n, m, shift = _input_block(A, B, tpl)
    c = np.asarray(tpl.coeffs)
    if t == 0 or not np.any(B) or not np.any(c):
        return np.zeros(n)
    if drive == 'rocof':
        M = np.zeros((n + m, n + m))
        M[:n, :n] = A
        M[:n, n:] = B @ c[None, :]
        M[n:, n:] = shift
        return scipy.linalg.expm(M * t)[:n, n]
    if drive == 'deviation':
        M = np.zeros((n + 1 + m, n + 1 + m))
        M[:n, :n] = A
        M[:n, n:n + 1] = B
        M[n, n + 1:] = c
        M[n + 1:, n + 1:] = shift
        return scipy.linalg.expm(M * t)[:n, n + 1]
    raise ValueError(f"drive must be 'rocof' or 'deviation', not {drive!r}")


def solve_forced(A, B1, B2, x0, tpl, t):
    """Superposition split of x' = A x + B1 dw + B2 dw_dot, x(0) = x0.

    Returns (homogeneous part, deviation-driven part, ROCOF-driven part).
    """
    A = _square(A, 'A')
    x0 = as_vector(x0, A.shape[0], 'x0')
    return (solve_homogeneous(A, x0, t),
            convolve_poly_exp(A, B1, tpl, t, 'deviation'),
            convolve_poly_exp(A, B2, tpl, t, 'rocof'))
