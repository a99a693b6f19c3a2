"""Independent references for cross-checking the exact kernels.

Nothing here is used by the main computations. Adaptive quadrature and
adaptive ODE integration share no code path with the block-exponential
convolution, so agreement between them is meaningful.
"""

import numpy as np
import scipy.linalg
from scipy.integrate import quad_vec, solve_ivp

from .linearize import LinearCipsModel
from .lti_core import as_vector

__all__ = ['relative_error', 'random_stable_matrix', 'random_linear_model', 'quad_mu',
           'reference_states', 'reference_power']


def relative_error(x, ref):
    """Normwise relative error ||x - ref|| / ||ref|| (absolute if ref = 0)."""
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    scale = np.linalg.norm(ref)
    err = np.linalg.norm(x - ref)
    return float(err / scale) if scale > 0 else float(err)


def random_stable_matrix(rng, n, re_range=(-5.0, -0.1), max_imag=3.0):
    """Real n x n matrix with eigenvalue real parts drawn from ``re_range``.

    Built as V L V^{-1}, L block diagonal with real 1x1 and complex 2x2
    blocks, V a mildly non-orthogonal change of basis.
    """
    lo, hi = re_range
    blocks = []
    i = 0
    while i < n:
        sig = rng.uniform(lo, hi)
        if n - i >= 2 and rng.random() < 0.4:
            w = rng.uniform(0.1, max_imag)
            blocks.append(np.array([[sig, w], [-w, sig]]))
            i += 2
        else:
            blocks.append(np.array([[sig]]))
            i += 1
    L = scipy.linalg.block_diag(*blocks)
    Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    V = Q @ (np.eye(n) + 0.3 * rng.standard_normal((n, n)))
    return V @ L @ np.linalg.inv(V)


def random_linear_model(rng, n, re_range=(-5.0, -0.1)):
    A = random_stable_matrix(rng, n, re_range)
    return LinearCipsModel(A, rng.standard_normal((n, 1)), rng.standard_normal((n, 1)),
                           rng.standard_normal((1, n)), rng.standard_normal(),
                           rng.standard_normal())


def quad_mu(model, tpl, t, channel, epsabs=1e-12, epsrel=1e-13):
    """mu by adaptive quadrature of the ratio integrand

        int_0^t exp(A (t - s)) B u(s) / u(t) ds

    with u the template deviation (channel 1) or ROCOF (channel 2).
    Dividing inside the integral keeps the integrand O(1) when u(t) is small
    from decay, which preserves relative accuracy. Returns n x 1.
    """
    if channel == 1:
        B, u = model.B1[:, 0], tpl.deviation
    elif channel == 2:
        B, u = model.B2[:, 0], tpl.rocof
    else:
        raise ValueError("channel must be 1 or 2")
    A = np.asarray(model.A)
    ut = float(u(t))

    def integrand(s):
        return scipy.linalg.expm(A * (t - s)) @ B * (float(u(s)) / ut)

    val, _ = quad_vec(integrand, 0.0, t, epsabs=epsabs, epsrel=epsrel)
    return val[:, None]


def reference_states(model, tpl, x0, times, rtol=1e-12, atol=1e-14):
    """x(t) of x' = A x + B1 dw + B2 dw_dot with template-driven inputs,
    integrated by DOP853. Rows follow ``times``."""
    times = np.asarray(times, dtype=float)
    x0 = as_vector(x0, model.n, 'x0')
    A, b1, b2 = np.asarray(model.A), model.B1[:, 0], model.B2[:, 0]

    def rhs(t, x):
        return A @ x + b1 * tpl.deviation(t) + b2 * tpl.rocof(t)

    sol = solve_ivp(rhs, (0.0, times[-1]), x0, method='DOP853', t_eval=times,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise ArithmeticError(f"reference integration failed: {sol.message}")
    return sol.y.T


def reference_power(model, tpl, x0, times):
    """dP_gen = C x + D1 dw + D2 dw_dot from the ODE reference."""
    X = reference_states(model, tpl, x0, times)
    return (X @ model.C[0] + model.D1 * tpl.deviation(times) + model.D2 * tpl.rocof(times))
