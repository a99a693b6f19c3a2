# A frequency excursion after a disturbance, modelled as a polynomial times
# a decaying exponential. The rate of change of frequency (ROCOF) is
#
#     dw_dot(t) = (c0 + c1 t + ... ) exp(-b t)
#
# and the deviation dw(t) is its integral from the disturbance instant.
# Run with --plot to write figures/template.png.
import numpy as np

import _plot
from emuinertia import FreqTemplate
from emuinertia.templates import deviation_limit

# P(t) = -2.5 t + t^2 with b = 1: frequency falls, then recovers
tpl = FreqTemplate((0.0, -2.5, 1.0), b=1.0)
t = np.linspace(0.0, 12.0, 1201)
rocof = tpl.rocof(t)
dev = tpl.deviation(t)

# ROCOF starts at zero, dips, and crosses zero at the polynomial root t = 2.5
print("rocof(0)   =", tpl.rocof(0.0))
print("rocof(2.5) =", tpl.rocof(2.5))
print("steepest fall at t = %.3f, rocof = %.4f" % (t[np.argmin(rocof)], rocof.min()))

# dw keeps falling until 2.5 s (the nadir) and then settles at
# sum_k c_k k!/b^(k+1) = -2.5 + 2 = -0.5
print("nadir dw = %.4f at t = %.2f" % (dev.min(), t[np.argmin(dev)]))
print("dw(200)  = %.12f, limit %.12f" % (tpl.deviation(200.0), deviation_limit(tpl)))

# the deviation uses incomplete gamma functions, so it stays accurate for
# tiny t where the textbook recurrence cancels: dw ~ c1 t^2 / 2 here
for tt in (1e-3, 1e-6):
    print("dw(%g) = %.6e   c1 t^2/2 = %.6e" % (tt, tpl.deviation(tt), -2.5 * tt ** 2 / 2))

if _plot.enabled():
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    ax[0].plot(t, rocof)
    ax[0].axhline(0, color='k', lw=0.5)
    ax[0].set_ylabel('rocof')
    ax[1].plot(t, dev)
    ax[1].axhline(-0.5, color='k', lw=0.5, ls='--')
    ax[1].set_ylabel('dw')
    ax[1].set_xlabel('t [s]')
    _plot.save(fig, 'template.png')
