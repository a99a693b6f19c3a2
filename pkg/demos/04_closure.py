# End-to-end check of the reduced swing equation. The converter's effect is
# folded into time-varying He(t), De(t):
#
#     dw_dot = omega_s/(2(H - He)) (dPm - dPD + a0) - H/(H - He) (D + De) dw
#
# This reproduces the full coupled simulation only when the template matches
# the actual frequency excursion. A critically damped loop gives an exact
# template; detuned loops need a fitted one.
# Run with --plot to write figures/closure.png.
import numpy as np

import _plot
from emuinertia import (DisturbanceEvent, GridParams, compute_profile, droop_model, exact_template,
                        extract_template_inputs, find_equilibrium, fit_template, linearize,
                        simulate_coupled_linear, simulate_reduced)
from emuinertia.models import critical_droop_gain

grid = GridParams(H=4.0, D=1.0)
event = DisturbanceEvent(t_event=0.0, delta_Pm=-0.05)      # loss of 0.05 pu generation
horizon, dt = 5.0, 1e-3
times = np.arange(int(round(horizon / dt)) + 1) * dt


def linear_droop(K_dr):
    nl = droop_model(tau=0.05, K_dr=K_dr, K_ie=-1.0)
    return linearize(nl, find_equilibrium(nl, [0.5]))


def gap(lin, tpl):
    coupled = simulate_coupled_linear(lin, grid, event, None, horizon, dt)
    prof = compute_profile(lin, grid, tpl, None, times)
    reduced = simulate_reduced(grid, prof, event, horizon, dt)
    return np.max(np.abs(reduced.dw - coupled.dw)) / np.max(np.abs(coupled.dw)), coupled, reduced


kc = critical_droop_gain(grid.H, grid.D, grid.omega_s, 0.05, -1.0)
lin = linear_droop(kc)
tpl = exact_template(lin, grid, event)
print("critical K_dr = %.4f, exact template coeffs %s, b = %.4f" % (kc, np.round(tpl.coeffs, 6), tpl.b))
g, coupled, reduced = gap(lin, tpl)
print("closure gap with the exact template: %.2e" % g)

# detuned (overdamped) loops: fit an order-3 template and watch the gap
# follow the fit residual
print("\n detune   fit residual   closure gap")
for d in (-0.2, -0.1, -0.05, -0.025, 0.0):
    lin_d = linear_droop(kc * (1 + d))
    tr = simulate_coupled_linear(lin_d, grid, event, None, horizon, dt)
    fit = fit_template(*extract_template_inputs(tr, (0.0, horizon)), 3, (1.0, 40.0))
    print("%+7.3f   %12.2e   %11.2e" % (d, fit.residual, gap(lin_d, fit.template)[0]))

if _plot.enabled():
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(coupled.t, coupled.dw, label='coupled small-signal')
    ax.plot(reduced.t, reduced.dw, '--', label='reduced with He, De')
    ax.set_xlabel('t [s]')
    ax.set_ylabel('dw [pu]')
    ax.legend()
    _plot.save(fig, 'closure.png')
