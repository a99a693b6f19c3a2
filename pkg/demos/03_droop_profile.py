# Emulated inertia He(t) and damping De(t) of a droop-controlled converter
#
#     tau P' = P_ref + K_dr dw + K_ie dw_dot - P
#
# linearized at its operating point. Negative gains support frequency under
# the convention used throughout (dw = speed minus synchronous speed, the
# converter power enters the swing equation with a plus sign).
# Run with --plot to write figures/droop_profile.png.
import numpy as np

import _plot
from emuinertia import (FreqTemplate, GridParams, compute_profile, droop_model, find_equilibrium,
                        linearize)
from emuinertia.emulation import asymptotic_gains

grid = GridParams(H=4.0, D=1.0)
nl = droop_model(tau=0.05, K_dr=-20.0, K_ie=-1.0, P_ref=0.5)
ep = find_equilibrium(nl, [0.3])
lin = linearize(nl, ep)
print("equilibrium P =", ep.x[0])
print("A, B1, B2, C =", lin.A[0, 0], lin.B1[0, 0], lin.B2[0, 0], lin.C[0, 0])

# ramp template: closed-form kernels
tpl = FreqTemplate.linear(-0.05, 2.0)
times = np.linspace(0.0, 6.0, 601)
prof = compute_profile(lin, grid, tpl, None, times)
print("profile path:", prof.path)

a1_inf, a2_inf = asymptotic_gains(lin, tpl.b)
print("a1(inf) = %.6f (= K_dr),  a2(inf) = %.6f (= (K_ie/tau)/(1/tau - b))" % (a1_inf, a2_inf))
for t in (0.01, 0.1, 0.5, 2.0, 6.0):
    k = np.searchsorted(times, t)
    print("t = %4.2f   He = %8.4f   De = %8.4f" % (times[k], prof.He[k], prof.De[k]))

# both gains start at the feed-through values (zero here) and build up as
# the converter's power loop responds; De settles in a few tau, He only
# approaches its limit like 1/t
print("He(6) - He(inf) = %.4f" % (prof.He[-1] - grid.omega_s * a2_inf / 2))

if _plot.enabled():
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    ax[0].plot(times, prof.He)
    ax[0].axhline(grid.omega_s * a2_inf / 2, color='k', lw=0.5, ls='--')
    ax[0].set_ylabel('He [s]')
    ax[1].plot(times, prof.De)
    ax[1].set_ylabel('De [pu]')
    ax[1].set_xlabel('t [s]')
    _plot.save(fig, 'droop_profile.png')
