"""Time-varying emulated inertia and damping of a converter.

With the frequency excursion following a template, the converter output
deviation splits exactly as

    dP_gen(t) = a0(t) + a1(t) dw(t) + a2(t) dw_dot(t)

where a1 = D1 + C mu1(t), a2 = D2 + C mu2(t) and mu1, mu2 are the forced
state responses divided by the signal that drives them. The emulated
inertia and damping are then

    He(t) = (omega_s / 2) a2(t),    De(t) = -(omega_s / (2 H)) a1(t).

mu1/mu2 come either from closed forms valid for the ramp template
P(t) = a t, or from the general block-exponential convolution.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gammainc

from .errors import ClosedFormUnavailableError, SingularDenominatorError
from .lti_core import as_vector, convolve_poly_exp, expm, phi_functions
from .templates import FreqTemplate

__all__ = ['mu1_closed_form', 'mu2_closed_form', 'mu_general', 'limits_at_zero',
           'asymptotic_gains', 'closed_form_available', 'signal_envelope', 'EmulationProfile',
           'compute_profile', 'reconstruct_power']

MAX_COND = 1e12
ZERO_GUARD = 1e-9


def _singular(M, scale):
    """True if M is numerically singular: condition number above MAX_COND,
    or smallest singular value below scale / MAX_COND. The second test
    catches a 1 x 1 near-zero, whose condition number is always 1."""
    s = np.linalg.svd(M, compute_uv=False)
    return not (np.all(np.isfinite(s)) and s[-1] * MAX_COND > max(s[0], scale))


def _finite(mu, what):
    if not np.all(np.isfinite(mu)):
        raise ClosedFormUnavailableError(
            f"{what} overflowed in the phi-function evaluation; use the general path")
    return mu


def _scale(A, b):
    return np.linalg.norm(A, 2) + b


def closed_form_available(model, b):
    """Whether the inverse-based closed forms are well posed at decay rate b.

    The kernels below never invert A or A + bI (they use phi-functions, for
    which a singular A + bI is a removable singularity), but the large-time
    limits and the textbook formulas do. 'auto' profiles use the closed path
    only when this holds.
    """
    A = np.asarray(model.A)
    scale = _scale(A, b)
    return not (_singular(A, scale) or _singular(A + b * np.eye(model.n), scale))


def _check_ramp_args(a, b, t):
    if a == 0:
        raise ValueError("ramp amplitude a must be nonzero")
    if not b > 0:
        raise ValueError("decay rate b must be positive")
    if t <= 0:
        raise SingularDenominatorError(t, 0.0)


def mu2_closed_form(model, a, b, t):
    """ROCOF kernel for dw_dot = a t exp(-b t):

        mu2 = -X^{-1} (t I + X^{-1} (I - e^{Xt})) B2 e^{-bt} / (t e^{-bt}),  X = A + b I

    The amplitude ``a`` cancels. Evaluated as t phi2(Xt) B2, which stays
    valid when X is singular (X = 0 gives mu2 = t B2 / 2). Returns an n x 1
    array.
    """
    _check_ramp_args(a, b, t)
    A = np.asarray(model.A)
    X = A + b * np.eye(model.n)
    # X^{-1}(I - e^{Xt}) = -t phi1(Xt), hence
    # X^{-1}(tI + X^{-1}(I - e^{Xt})) = -t^2 phi2(Xt)
    with np.errstate(over='ignore', invalid='ignore'):
        _, _, phi2 = phi_functions(X, t)
        mu = t * phi2 @ model.B2
    return _finite(mu, "mu2")


def mu1_closed_form(model, a, b, t):
    """Deviation kernel for dw = a (1 - e^{-bt} - b t e^{-bt}) / b^2:

        mu1 = { -A^{-1}(I - e^{At}) + e^{-bt} X^{-1}(I - e^{Xt})
                + b e^{-bt} X^{-1}(t I + X^{-1}(I - e^{Xt})) } B1
              / (1 - e^{-bt} - b t e^{-bt})

    The braces equal b^2 int_0^t e^{A(t-s)} J(s) ds with J(s) = int_0^s r e^{-br} dr,
    which is the corner block of one exponential of the chain
    [[A, I, 0, 0], [0, 0, I, 0], [0, 0, -bI, I], [0, 0, 0, -bI]]. Summing the
    three terms separately cancels for small t and forms 0 * inf once b
    exceeds the slowest decay rate of A; the block form does neither, and
    allows singular A or A + bI. Returns an n x 1 array.
    """
    _check_ramp_args(a, b, t)
    A = np.asarray(model.A)
    n = model.n
    I = np.eye(n)
    Z = np.zeros((4 * n, 4 * n))
    Z[:n, :n] = A
    Z[:n, n:2 * n] = I
    Z[n:2 * n, 2 * n:3 * n] = I
    Z[2 * n:3 * n, 2 * n:3 * n] = -b * I
    Z[2 * n:3 * n, 3 * n:] = I
    Z[3 * n:, 3 * n:] = -b * I
    corner = expm(Z, t)[:n, 3 * n:]
    # int_0^t r e^{-br} dr = P(2, bt) / b^2, P the regularized incomplete gamma
    return _finite(corner @ model.B1 / (gammainc(2, b * t) / b ** 2), "mu1")


def signal_envelope(tpl, t, channel):
    """Sum of |c_k| times each basis term: the size the divisor would have
    without cancellation between terms. Zero-guard reference."""
    t = np.asarray(t, dtype=float)
    mag = FreqTemplate(tuple(abs(c) for c in tpl.coeffs), tpl.b)
    return mag.deviation(t) if channel == 1 else mag.rocof(t)


def mu_general(model, tpl, t, channel, zero_guard=None):
    """mu for any template: exact convolution divided by the driving signal.

    ``channel=1`` divides the deviation-driven response by dw(t),
    ``channel=2`` the ROCOF-driven response by dw_dot(t). Raises
    :class:`SingularDenominatorError` where |divisor| <= ``zero_guard``,
    by default 1e-9 of :func:`signal_envelope`. Exponential decay alone
    never trips the guard; cancellation near a root of the divisor does.
    """
    if channel == 1:
        B, drive, signal = model.B1, 'deviation', tpl.deviation
    elif channel == 2:
        B, drive, signal = model.B2, 'rocof', tpl.rocof
    else:
        raise ValueError("channel must be 1 or 2")
    if t <= 0:
        raise SingularDenominatorError(t, 0.0)
    den = float(signal(t))
    guard = ZERO_GUARD * signal_envelope(tpl, t, channel) if zero_guard is None else zero_guard
    if abs(den) <= guard:
        raise SingularDenominatorError(t, den)
    return convolve_poly_exp(model.A, B, tpl, t, drive)[:, None] / den


def limits_at_zero(model):
    """mu1(0+) and mu2(0+): both kernels vanish at t = 0."""
    return np.zeros((model.n, 1)), np.zeros((model.n, 1))


def asymptotic_gains(model, b):
    """Large-time values of a1 and a2.

    a1 -> D1 + C (-A)^{-1} B1 for a stable A. a2 -> D2 + C (-bI - A)^{-1} B2
    requires every mode of A to decay faster than exp(-b t); otherwise mu2
    grows without bound and the returned a2 is only the value of the
    ROCOF-to-power transfer at s = -b.
    """
    A = np.asarray(model.A)
    a1 = model.D1 + (model.C @ np.linalg.solve(-A, model.B1)).item()
    a2 = model.D2 + (model.C @ np.linalg.solve(-b * np.eye(model.n) - A, model.B2)).item()
    return a1, a2


@dataclass(frozen=True, eq=False)
class EmulationProfile:
    times: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    He: np.ndarray
    De: np.ndarray
    flagged_dev: np.ndarray     # dw below the zero guard, a1 interpolated
    flagged_rocof: np.ndarray   # dw_dot below the zero guard, a2 interpolated
    grid: object
    model: object
    template: object
    x0: np.ndarray
    path: str

    def __post_init__(self):
        for name in ('times', 'a0', 'a1', 'a2', 'He', 'De', 'flagged_dev',
                     'flagged_rocof', 'x0'):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def flagged(self):
        return self.flagged_dev | self.flagged_rocof

    def interpolate(self, t):
        """(a0, He, De) at t, linear between grid points."""
        return (np.interp(t, self.times, self.a0),
                np.interp(t, self.times, self.He),
                np.interp(t, self.times, self.De))

    def to_csv(self, path):
        with open(path, 'w', newline='') as fh:
            w = csv.writer(fh, lineterminator='\n')
            w.writerow(['t', 'a0', 'a1', 'a2', 'He', 'De', 'flagged'])
            for row in zip(self.times, self.a0, self.a1, self.a2, self.He, self.De,
                           self.flagged):
                w.writerow([f"{v:.17g}" for v in row[:-1]] + [int(row[-1])])


def _fill_flagged(times, values, flagged, limit):
    """Interior flagged runs: monotone cubic through the unflagged points.
    Runs touching either end of the grid hold the nearest unflagged value."""
    if not flagged.any():
        return values
    good = np.flatnonzero(~flagged)
    values = values.copy()
    if good.size == 0:
        values[:] = limit
        return values
    lo, hi = good[0], good[-1]
    values[:lo] = values[lo]
    values[hi + 1:] = values[hi]
    inner = flagged.copy()
    inner[:lo] = inner[hi + 1:] = False
    if inner.any():
        values[inner] = PchipInterpolator(times[good], values[good])(times[inner])
    return values


def compute_profile(model, grid, tpl, x0=None, times=None, path='auto'):
    """Sample a0, a1, a2, He, De on ``times`` (template time, 0 = disturbance).

    ``path`` is 'closed' (ramp template only), 'general', or 'auto', which
    uses the closed forms when the template is a ramp and A, A + bI are
    well conditioned. Points where the dividing signal cancels to below 1e-9
    of its term envelope (see :func:`signal_envelope`) are flagged and
    filled by monotone cubic interpolation from the unflagged points; t = 0
    takes the analytic limit mu = 0.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-d grid")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing and start at or after 0")
    n = model.n
    x0 = np.zeros(n) if x0 is None else as_vector(x0, n, 'x0')
    if path not in ('auto', 'closed', 'general'):
        raise ValueError("path must be 'auto', 'closed' or 'general'")

    closed_ok = tpl.is_ramp and closed_form_available(model, tpl.b)
    if path == 'closed' and not closed_ok:
        raise ClosedFormUnavailableError(
            "closed forms need the ramp template a*t and invertible A, A + bI")
    use_closed = closed_ok and path != 'general'

    C = np.asarray(model.C)
    a0 = np.array([(C @ expm(model.A, t) @ x0).item() for t in times])
    a1 = np.full(times.size, model.D1)
    a2 = np.full(times.size, model.D2)
    flag1 = np.zeros(times.size, dtype=bool)
    flag2 = np.zeros(times.size, dtype=bool)
    pos = times > 0

    if use_closed:
        a, b = tpl.coeffs[1], tpl.b
        for k in np.flatnonzero(pos):
            a1[k] += (C @ mu1_closed_form(model, a, b, times[k])).item()
            try:
                a2[k] += (C @ mu2_closed_form(model, a, b, times[k])).item()
            except ClosedFormUnavailableError:
                # mu2 grows like e^{(A+bI)t} when a mode of A decays slower
                # than the template: flag the point rather than emit inf
                flag2[k] = True
        a2 = _fill_flagged(times, a2, flag2, model.D2)
    else:
        dev = tpl.deviation(times)
        roc = tpl.rocof(times)
        flag1 = pos & (np.abs(dev) <= ZERO_GUARD * signal_envelope(tpl, times, 1))
        flag2 = pos & (np.abs(roc) <= ZERO_GUARD * signal_envelope(tpl, times, 2))
        for k in np.flatnonzero(pos):
            t = times[k]
            if not flag1[k]:
                x1 = convolve_poly_exp(model.A, model.B1, tpl, t, 'deviation')
                a1[k] += (C @ x1).item() / dev[k]
            if not flag2[k]:
                x2 = convolve_poly_exp(model.A, model.B2, tpl, t, 'rocof')
                a2[k] += (C @ x2).item() / roc[k]
        a1 = _fill_flagged(times, a1, flag1, model.D1)
        a2 = _fill_flagged(times, a2, flag2, model.D2)

    He = 0.5 * grid.omega_s * a2
    De = -grid.omega_s / (2.0 * grid.H) * a1 + 0.0   # no negative zeros in the CSV
    return EmulationProfile(times, a0, a1, a2, He, De, flag1, flag2, grid, model, tpl,
                            x0, 'closed' if use_closed else 'general')


def reconstruct_power(profile, tpl=None):
    """dP_gen = a0 + a1 dw + a2 dw_dot on the profile grid."""
    if tpl is None:
        tpl = profile.template
    elif tpl != profile.template:
        raise ValueError("template does not match the one the profile was built from")
    t = profile.times
    return profile.a0 + profile.a1 * tpl.deviation(t) + profile.a2 * tpl.rocof(t)
