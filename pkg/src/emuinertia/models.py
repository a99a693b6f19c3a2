"""Built-in converter models, selectable by name from a run config.

Sign convention: ``dw`` is the per-unit speed deviation of the equivalent
machine (positive above synchronous speed) and the converter injects
``P_gen`` into the swing equation with a plus sign. Under this convention a
frequency-supporting converter has negative ``K_dr`` and ``K_ie``: it raises
its output when frequency falls. No sign is enforced.
"""

import numpy as np

from .linearize import NonlinearCipsModel

__all__ = ['droop_model', 'critical_droop_gain', 'BUILTINS', 'builtin_model', 'default_guess']


def droop_model(tau=0.05, K_dr=-20.0, K_ie=-1.0, P_ref=0.5, inertia_form='linear'):
    """First-order converter power loop

        tau P' = P_ref + K_dr dw + K_ie dw_dot - P,   P_gen = P

    ``inertia_form='kinetic'`` replaces ``K_ie dw_dot`` by
    ``K_ie (1 + dw) dw_dot``, i.e. power proportional to omega * domega/dt of
    a rotating mass. Both forms share the same linearization; the kinetic one
    carries a genuine second-order term.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if inertia_form == 'linear':
        def inertia(dw, rocof):
            return K_ie * rocof
    elif inertia_form == 'kinetic':
        def inertia(dw, rocof):
            return K_ie * (1.0 + dw) * rocof
    else:
        raise ValueError(f"inertia_form must be 'linear' or 'kinetic', not {inertia_form!r}")

    def F(x, y, V, dw, rocof):
        return np.array([(P_ref + K_dr * dw + inertia(dw, rocof) - x[0]) / tau])

    def G(x, y, V, dw, rocof):
        return np.zeros(0)

    def H(x, y, V, dw, rocof):
        return x[0]

    params = dict(tau=tau, K_dr=K_dr, K_ie=K_ie, P_ref=P_ref, inertia_form=inertia_form)
    return NonlinearCipsModel(1, 0, 0, F, G, H, name='droop', params=params)


def critical_droop_gain(H, D, omega_s, tau, K_ie):
    """K_dr making the droop converter + swing loop critically damped.

    The closed loop on (dw, P) has trace T = -D + (K_ie k - 1)/tau and
    determinant (D - k K_dr)/tau with k = omega_s/(2H); a repeated real
    eigenvalue -T/2 needs T^2 = 4 det. Its ROCOF after a power step is then
    exactly (c0 + c1 t) exp(-b t).
    """
    k = omega_s / (2.0 * H)
    trace = -D + (K_ie * k - 1.0) / tau
    return (D - trace * trace * tau / 4.0) / k


BUILTINS = {'droop': droop_model}


def builtin_model(name, **params):
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown built-in model {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**params)


def default_guess(model):
    """Newton starting point for a built-in model's equilibrium."""
    if model.name == 'droop':
        return np.array([model.params['P_ref']])
    return np.zeros(model.n_x)
