"""Equivalent single-machine grid coupled to a converter.

The swing equation is used exactly as

    dw_dot = omega_s / (2 H) (P_m + P_gen - P_D) - D dw

with the damping term outside the omega_s/(2H) factor. Three simulations
are provided: the nonlinear converter DAE with dead-band switching of the
frequency-support loop, the coupled small-signal model, and the scalar
swing equation with the time-varying emulated gains substituted.

All traces use fixed-step classical RK4 on a uniform grid, so they are
deterministic for given inputs and step. A step that straddles the
disturbance instant is split there.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (LoopSingularityError, NonpositiveInertiaError,
                     SimulationAbortedError)
from .linearize import find_equilibrium, jacobian_fd
from .lti_core import as_vector
from .templates import FreqTemplate

__all__ = ['GridParams', 'DisturbanceEvent', 'DeadbandPolicy', 'Trace',
           'simulate_coupled_linear', 'simulate_nonlinear', 'simulate_reduced',
           'extract_template_inputs', 'closed_loop_matrices', 'exact_template']


@dataclass(frozen=True)
class GridParams:
    """Equivalent machine. ``omega_s`` is the speed base; with the default 1.0
    every frequency quantity is per unit."""

    H: float = 4.0
    D: float = 1.0
    omega_s: float = 1.0
    P_m: float = 0.5
    P_D: float = 1.0

    def __post_init__(self):
        if not self.H > 0:
            raise ValueError("H must be positive")
        if not self.omega_s > 0:
            raise ValueError("omega_s must be positive")
        if not self.D >= 0:
            raise ValueError("D must be non-negative")

    @property
    def k(self):
        return self.omega_s / (2.0 * self.H)


@dataclass(frozen=True)
class DisturbanceEvent:
    """Steps in mechanical power and load applied at ``t_event``."""

    t_event: float = 0.0
    delta_Pm: float = 0.0
    delta_PD: float = 0.0

    def __post_init__(self):
        if not self.t_event >= 0:
            raise ValueError("t_event must be non-negative")

    def imbalance(self, t):
        return self.delta_Pm - self.delta_PD if t >= self.t_event else 0.0


@dataclass(frozen=True)
class DeadbandPolicy:
    """Frequency support switches on when |dw| exceeds ``threshold`` and off
    again once |dw| drops below ``release * threshold``. A zero threshold
    means always on, ``math.inf`` never."""

    threshold: float = 0.0
    release: float = 0.5

    def __post_init__(self):
        if not self.threshold >= 0:
            raise ValueError("threshold must be non-negative")

    def update(self, active, dw):
        if self.threshold == 0:
            return True
        if active:
            return abs(dw) >= self.release * self.threshold
        return abs(dw) > self.threshold


@dataclass(frozen=True, eq=False)
class Trace:
    t: np.ndarray
    dw: np.ndarray
    rocof: np.ndarray
    dPgen: np.ndarray
    mode: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        for name in ('t', 'dw', 'rocof', 'dPgen', 'mode', 'x'):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def activation_time(self):
        """First time the support loop is on, or None."""
        on = np.flatnonzero(self.mode)
        return float(self.t[on[0]]) if on.size else None

    def to_csv(self, path):
        nx = self.x.shape[1] if self.x.ndim == 2 else 0
        with open(path, 'w', newline='') as fh:
            w = csv.writer(fh, lineterminator='\n')
            w.writerow(['t', 'dw', 'rocof', 'dPgen', 'mode'] + [f'x_{i}' for i in range(nx)])
            for k in range(self.t.size):
                row = [self.t[k], self.dw[k], self.rocof[k], self.dPgen[k]]
                xs = self.x[k] if nx else ()
                w.writerow([f"{v:.17g}" for v in row] + [int(self.mode[k])]
                           + [f"{v:.17g}" for v in xs])


def _time_grid(horizon, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    n = int(round(horizon / dt))
    if abs(n * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError(f"horizon {horizon} is not a multiple of dt {dt}")
    return np.arange(n + 1) * dt


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_across(f, t0, t1, y, breaks):
    """One grid step, split at break points inside (t0, t1).

    Inputs are right-continuous at a break, so a sub-step ending on one
    evaluates its last stage just before it.
    """
    pts = [t0] + sorted(tb for tb in breaks if t0 < tb < t1) + [t1]
    for a, b in zip(pts[:-1], pts[1:]):
        b_eval = np.nextafter(b, a) if b in breaks else b
        y = _rk4_step(lambda t, yy, lo=a, hi=b_eval: f(min(max(t, lo), hi), yy), a, y, b - a)
    return y


def _loop_gain(model, grid):
    denom = 1.0 - grid.k * model.D2
    if abs(denom) < 1e-12:
        raise LoopSingularityError(
            f"1 - (omega_s/2H) D2 = {denom:.3e}: ROCOF loop has no unique solution")
    return denom


def closed_loop_matrices(model, grid):
    """Coupled small-signal system s' = M s + f (dPm - dPD), s = (dx, dw).

    The ROCOF feed-through is eliminated from the scalar loop
    dw_dot = k (imbalance + C dx + D1 dw + D2 dw_dot) - D dw.
    """
    k = grid.k
    denom = _loop_gain(model, grid)
    n = model.n
    # dw_dot = r_x dx + r_w dw + r_u u
    r_x = k * np.asarray(model.C) / denom
    r_w = (k * model.D1 - grid.D) / denom
    r_u = k / denom
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = model.A + model.B2 @ r_x
    M[:n, n] = (model.B1 + model.B2 * r_w)[:, 0]
    M[n, :n] = r_x
    M[n, n] = r_w
    f = np.concatenate([(model.B2 * r_u)[:, 0], [r_u]])
    return M, f


def exact_template(model, grid, event, rtol=1e-7):
    """The template matching the coupled small-signal ROCOF exactly.

    Exists when the closed loop has a single repeated real eigenvalue -b
    (so (M + bI) is nilpotent) and the system starts at rest; then
    dw_dot(t) = exp(-bt) sum_k e_w^T (M + bI)^k f t^k / k!, times the step.
    Raises ValueError otherwise.
    """
    M, f = closed_loop_matrices(model, grid)
    m = M.shape[0]
    b = -np.trace(M) / m
    if not b > 0:
        raise ValueError("closed loop is not stable")
    N = M + b * np.eye(m)
    scale = max(np.linalg.norm(M), 1.0)
    if np.linalg.norm(np.linalg.matrix_power(N, m)) > rtol * scale ** m:
        raise ValueError("closed-loop ROCOF is not a polynomial times one exponential")
    u = event.delta_Pm - event.delta_PD
    coeffs = []
    v = f * u
    for j in range(m):
        coeffs.append(v[-1] / math.factorial(j))
        v = N @ v
    return FreqTemplate(tuple(coeffs), b)


def simulate_coupled_linear(model, grid, event, x0=None, horizon=10.0, dt=1e-3,
                            method='rk4'):
    """Small-signal converter coupled to the linearized swing equation.

    ``method='rk4'`` is the fixed-step trace integrator; ``'adaptive'`` uses
    DOP853 at rtol 1e-12 and is meant as a reference.
    """
    t = _time_grid(horizon, dt)
    n = model.n
    x0 = np.zeros(n) if x0 is None else as_vector(x0, n, 'x0')
    M, f = closed_loop_matrices(model, grid)
    s0 = np.concatenate([x0, [0.0]])

    def rhs(tt, s):
        return M @ s + f * event.imbalance(tt)

    if method == 'rk4':
        S = np.empty((t.size, n + 1))
        S[0] = s0
        for i in range(t.size - 1):
            S[i + 1] = _rk4_across(rhs, t[i], t[i + 1], S[i], [event.t_event])
    elif method == 'adaptive':
        S = _adaptive(rhs, t, s0, event.t_event)
    else:
        raise ValueError("method must be 'rk4' or 'adaptive'")

    x, dw = S[:, :n], S[:, n]
    u = np.array([event.imbalance(tt) for tt in t])
    rocof = S @ M[n] + f[n] * u
    dPgen = x @ np.asarray(model.C)[0] + model.D1 * dw + model.D2 * rocof
    return Trace(t, dw, rocof, dPgen, np.ones(t.size, dtype=int), x)


def _adaptive(rhs, t, s0, t_break):
    out = np.empty((t.size, s0.size))
    segments = [(t[0], t_break), (t_break, t[-1])] if t[0] < t_break < t[-1] else [(t[0], t[-1])]
    s = s0
    for lo, hi in segments:
        sel = (t >= lo) & (t <= hi)
        sol = solve_ivp(lambda tt, yy: rhs(max(tt, lo), yy), (lo, hi), s, method='DOP853',
                        t_eval=t[sel], rtol=1e-12, atol=1e-14)
        out[sel] = sol.y.T
        s = sol.y[:, -1]
    return out


def _newton(fun, z0, tol=1e-14, max_iter=30):
    z = np.array(z0, dtype=float)
    for _ in range(max_iter):
        r = fun(z)
        if np.max(np.abs(r)) <= tol * (1.0 + np.max(np.abs(z))):
            return z
        J = jacobian_fd(fun, z)
        step = np.linalg.solve(J, r)
        z = z - step
        if np.max(np.abs(step)) <= tol * (1.0 + np.max(np.abs(z))):
            return z
    raise ArithmeticError("inner Newton solve did not converge")


def simulate_nonlinear(model, grid, event, policy, horizon=10.0, dt=1e-3, x_guess=None,
                       equilibrium=None):
    """Nonlinear converter DAE coupled to the swing equation.

    While the support loop is off the converter sees dw = dw_dot = 0, which
    removes the frequency-dependent terms of its control law. The loop state
    is updated once per step from the step-start dw. Algebraic variables and
    the ROCOF loop are solved together by Newton at every right-hand-side
    evaluation. The trace reports deviations from the equilibrium.
    """
    t = _time_grid(horizon, dt)
    if equilibrium is None:
        equilibrium = find_equilibrium(model, np.zeros(model.n_x) if x_guess is None else x_guess)
    x_ep, y_ep = np.asarray(equilibrium.x, float), np.asarray(equilibrium.y, float)
    p_ep = model.p_gen(x_ep, y_ep)
    if abs(grid.P_m + p_ep - grid.P_D) > 1e-9:
        raise ValueError(f"grid is not balanced at the equilibrium: P_m + P_gen - P_D = "
                         f"{grid.P_m + p_ep - grid.P_D:.3e}")
    nx, ny = model.n_x, model.n_y
    k = grid.k
    cache = {'z': np.concatenate([y_ep, [0.0]])}

    def algebraic(tt, x, dw, active):
        def res(z):
            y, rocof = z[:ny], z[ny]
            u = (dw, rocof) if active else (0.0, 0.0)
            p = model.p_gen(x, y, *u)
            swing = k * (grid.P_m + p - grid.P_D + event.imbalance(tt)) - grid.D * dw
            return np.concatenate([model.g(x, y, *u), [rocof - swing]])
        z = _newton(res, cache['z'])
        cache['z'] = z
        return z[:ny], z[ny]

    def rhs(tt, s, active):
        x, dw = s[:nx], s[nx]
        y, rocof = algebraic(tt, x, dw, active)
        u = (dw, rocof) if active else (0.0, 0.0)
        return np.concatenate([model.f(x, y, *u), [rocof]])

    S = np.empty((t.size, nx + 1))
    S[0] = np.concatenate([x_ep, [0.0]])
    mode = np.zeros(t.size, dtype=int)
    active = policy.update(False, 0.0)
    try:
        for i in range(t.size - 1):
            active = policy.update(active, S[i, nx])
            mode[i] = active
            S[i + 1] = _rk4_across(lambda tt, s: rhs(tt, s, active), t[i], t[i + 1], S[i],
                                   [event.t_event])
            if not np.all(np.isfinite(S[i + 1])):
                raise FloatingPointError("non-finite state")
        mode[-1] = policy.update(active, S[-1, nx])
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        raise SimulationAbortedError(t[i], exc) from exc

    rocof = np.empty(t.size)
    dPgen = np.empty(t.size)
    for i in range(t.size):
        x, dw = S[i, :nx], S[i, nx]
        y, rocof[i] = algebraic(t[i], x, dw, bool(mode[i]))
        u = (dw, rocof[i]) if mode[i] else (0.0, 0.0)
        dPgen[i] = model.p_gen(x, y, *u) - p_ep
    return Trace(t, S[:, nx], rocof, dPgen, mode, S[:, :nx] - x_ep)


def simulate_reduced(grid, profile, event, horizon=10.0, dt=1e-3):
    """Scalar swing equation with the emulated gains substituted.

    Putting dP_gen = a0 + a1 dw + a2 dw_dot into the swing equation and
    solving for dw_dot gives

        dw_dot = omega_s / (2 (H - He)) (dPm - dPD + a0) - H / (H - He) (D + De) dw

    with He = omega_s a2 / 2 and De = -omega_s a1 / (2H). Profile time 0 is
    the disturbance instant; before it the system rests.
    """
    t = _time_grid(horizon, dt)
    span = horizon - event.t_event
    if span > profile.times[-1] + 1e-9 or profile.times[0] > 0:
        raise ValueError("profile grid does not cover the simulated interval")
    inside = profile.times <= span + 1e-9
    margin = grid.H - profile.He[inside]
    if np.any(margin <= 0):
        j = np.flatnonzero(margin <= 0)[0]
        raise NonpositiveInertiaError(profile.times[inside][j], margin[j])

    def rocof_at(tt, dw):
        if tt < event.t_event:
            return 0.0
        a0, He, De = profile.interpolate(tt - event.t_event)
        h_eff = grid.H - He
        return (grid.omega_s / (2.0 * h_eff) * (event.imbalance(tt) + a0)
                - grid.H / h_eff * (grid.D + De) * dw)

    def rhs(tt, s):
        return np.array([rocof_at(tt, s[0])])

    w = np.zeros(t.size)
    s = np.zeros(1)
    for i in range(t.size - 1):
        s = _rk4_across(rhs, t[i], t[i + 1], s, [event.t_event])
        w[i + 1] = s[0]
    rocof = np.array([rocof_at(tt, ww) for tt, ww in zip(t, w)])
    tau = np.clip(t - event.t_event, 0.0, None)
    after = t >= event.t_event
    dPgen = after * (np.interp(tau, profile.times, profile.a0)
                     + np.interp(tau, profile.times, profile.a1) * w
                     + np.interp(tau, profile.times, profile.a2) * rocof)
    mode = np.ones(t.size, dtype=int)
    return Trace(t, w, rocof, dPgen, mode, np.zeros((t.size, 0)))


def extract_template_inputs(trace, window):
    """ROCOF samples on ``window`` with time re-based to start at 0."""
    ta, tb = window
    sel = (trace.t >= ta - 1e-12) & (trace.t <= tb + 1e-12)
    if not sel.any():
        raise ValueError(f"window {window} holds no samples")
    ts = trace.t[sel]
    return ts - ts[0], np.array(trace.rocof[sel])
