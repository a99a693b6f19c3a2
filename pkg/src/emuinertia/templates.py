"""Polynomial-times-exponential frequency excursion templates.

A template describes the rate of change of frequency after a disturbance as

    rocof(t) = (c0 + c1 t + ... + cn t^n) exp(-b t)

and the frequency deviation as its integral from 0, so ``deviation(0) = 0``.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

__all__ = ['FreqTemplate', 'FitResult', 'eval_rocof', 'eval_deviation',
           'deviation_limit', 'fit_template', 'read_trace_csv']


@dataclass(frozen=True)
class FreqTemplate:
    """rocof(t) = P(t) exp(-b t) with P given by ascending-power ``coeffs``."""

    coeffs: tuple
    b: float

    def __post_init__(self):
        coeffs = tuple(float(c) for c in np.atleast_1d(self.coeffs))
        if len(coeffs) == 0:
            raise ValueError("template needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("template coefficients must be finite")
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"decay rate b must be positive, got {self.b!r}")
        object.__setattr__(self, 'coeffs', coeffs)
        object.__setattr__(self, 'b', float(self.b))

    @classmethod
    def linear(cls, a, b):
        """The ramp template P(t) = a t."""
        return cls((0.0, a), b)

    @property
    def order(self):
        return len(self.coeffs) - 1

    @property
    def is_ramp(self):
        """True for P(t) = a t with a != 0, the case with closed-form kernels."""
        return self.order == 1 and self.coeffs[0] == 0.0 and self.coeffs[1] != 0.0

    def scaled(self, factor):
        return FreqTemplate(tuple(factor * c for c in self.coeffs), self.b)

    def rocof(self, t):
        return eval_rocof(self, t)

    def deviation(self, t):
        return eval_deviation(self, t)

    def to_dict(self):
        return {'coeffs': list(self.coeffs), 'b': self.b}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d['coeffs']), d['b'])


def _check_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("template time must be non-negative")
    return t


def eval_rocof(tpl, t):
    t = _check_times(t)
    # np.polyval wants descending powers
    return np.polyval(tpl.coeffs[::-1], t) * np.exp(-tpl.b * t)


def _power_exp_integrals(k_max, b, t):
    """I_k(t) = int_0^t s^k exp(-b s) ds for k = 0..k_max, shape (k_max+1,) + t.shape.

    Uses I_k = k!/b^(k+1) P(k+1, b t) with P the regularized lower incomplete
    gamma function. The forward recurrence I_k = (k I_{k-1} - t^k e^{-bt})/b
    is the same quantity but loses all digits for b t << 1 at higher k.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty((k_max + 1,) + t.shape)
    for k in range(k_max + 1):
        out[k] = math.factorial(k) / b ** (k + 1) * gammainc(k + 1, b * t)
    return out


def eval_deviation(tpl, t):
    """Closed-form frequency deviation int_0^t rocof(s) ds."""
    t = _check_times(t)
    ints = _power_exp_integrals(tpl.order, tpl.b, t)
    return np.tensordot(np.asarray(tpl.coeffs), ints, axes=1)


def deviation_limit(tpl):
    """Settling value of the deviation, sum_k c_k k! / b^(k+1)."""
    return sum(c * math.factorial(k) / tpl.b ** (k + 1)
               for k, c in enumerate(tpl.coeffs))


@dataclass(frozen=True)
class FitResult:
    template: FreqTemplate
    residual: float   # RMS over the samples
    kind: str


def _basis(kind, order, b, t):
    if kind == 'rocof':
        return np.stack([t ** k * np.exp(-b * t) for k in range(order + 1)], axis=1)
    return _power_exp_integrals(order, b, t).T


def _lstsq_for_b(kind, order, b, t, y):
    M = _basis(kind, order, b, t)
    coeffs, *_ = np.linalg.lstsq(M, y, rcond=None)
    resid = y - M @ coeffs
    return coeffs, float(np.sqrt(np.mean(resid ** 2)))


def _golden_section(f, lo, hi, tol):
    # scipy's bounded Brent stops near sqrt(eps) relative in x; the RMS
    # residual has a V-shaped minimum at an exact fit, so bracketing pays off
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol * max(1.0, abs(lo) + abs(hi)):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def fit_template(t, values, order, b_search=(0.1, 10.0), kind='rocof', tol=1e-12):
    """Least-squares fit of a template to sampled ROCOF (or deviation) data.

    For fixed ``b`` the coefficients enter linearly, so each candidate ``b``
    is a linear least-squares solve; ``b`` itself is located by golden-section
    search on the RMS residual over ``b_search``. With ``kind='deviation'``
    the samples are matched against the integrated basis and the returned
    template is still the ROCOF template (its exact derivative).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    if kind not in ('rocof', 'deviation'):
        raise ValueError(f"kind must be 'rocof' or 'deviation', not {kind!r}")
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t and values must be 1-d arrays of equal length")
    if order < 0:
        raise ValueError("order must be >= 0")
    if len(t) < order + 2:
        raise ValueError(f"need at least {order + 2} samples for order {order}, got {len(t)}")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing and start at or after 0")
    lo, hi = map(float, b_search)
    if not 0 < lo < hi:
        raise ValueError("b_search must be an interval (lo, hi) with 0 < lo < hi")

    if not np.any(y):
        return FitResult(FreqTemplate((0.0,) * (order + 1), 0.5 * (lo + hi)), 0.0, kind)

    b = _golden_section(lambda bb: _lstsq_for_b(kind, order, bb, t, y)[1], lo, hi, tol)
    coeffs, resid = _lstsq_for_b(kind, order, b, t, y)
    return FitResult(FreqTemplate(tuple(coeffs), b), resid, kind)


def read_trace_csv(path):
    """Read ``(t, values, kind)`` from a CSV with a ``t`` column and either a
    ``rocof`` or ``deviation`` column. Simulation traces (``t,dw,rocof,...``)
    are accepted as-is.
    """
    with open(path, newline='') as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    for kind in ('rocof', 'deviation'):
        if kind in rows[0]:
            t = np.array([float(r['t']) for r in rows])
            v = np.array([float(r[kind]) for r in rows])
            return t, v, kind
    raise ValueError(f"{path}: expected a 'rocof' or 'deviation' column next to 't'")
