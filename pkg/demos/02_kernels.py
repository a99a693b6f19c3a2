# The emulated gains come from two kernels, mu1 (deviation channel) and mu2
# (ROCOF channel): the converter's forced state response divided by the
# frequency signal that drives it. For the ramp template P(t) = a t they have
# closed forms; for any template the block-exponential convolution applies.
# Here both are compared against brute-force adaptive quadrature.
import numpy as np
import scipy.linalg

from emuinertia import FreqTemplate, LinearCipsModel, mu1_closed_form, mu2_closed_form, mu_general
from emuinertia.oracles import quad_mu, random_linear_model, relative_error

rng = np.random.default_rng(0)
model = random_linear_model(rng, 4)
print("eigenvalues of A:", np.round(np.linalg.eigvals(model.A), 3))

b = 1.5
ramp = FreqTemplate.linear(1.0, b)
print("\n    t     closed/quad mu1  closed/quad mu2  general/closed")
for t in (0.01, 0.1, 1.0, 5.0, 20.0):
    e1 = relative_error(mu1_closed_form(model, 1.0, b, t), quad_mu(model, ramp, t, 1))
    e2 = relative_error(mu2_closed_form(model, 1.0, b, t), quad_mu(model, ramp, t, 2))
    eg = relative_error(mu_general(model, ramp, t, 2), mu2_closed_form(model, 1.0, b, t))
    print("%6.2f   %14.2e   %14.2e   %13.2e" % (t, e1, e2, eg))

# The amplitude a cancels: mu depends on the template's shape only
print("\nmu2 for a = 1 and a = -7 agree:",
      np.allclose(mu2_closed_form(model, 1.0, b, 2.0), mu2_closed_form(model, -7.0, b, 2.0)))

# mu2 tends to -(A + bI)^{-1} B2 only when every eigenvalue of A decays
# faster than exp(-b t); otherwise it grows without bound. Even then the
# approach is like 1/t:
#   mu2(t) = -X^{-1} B2 - X^{-2} (I - e^{Xt}) B2 / t,   X = A + bI
# so doubling t halves the distance to the limit
b = 0.3
X = model.A + b * np.eye(model.n)
lim = np.linalg.solve(-X, model.B2)
for t in (25.0, 50.0, 100.0):
    print("t = %5.0f   |mu2 - limit| = %.3e" % (t, np.linalg.norm(mu2_closed_form(model, 1.0, b, t) - lim)))
t = 50.0
corr = np.linalg.solve(X, np.linalg.solve(X, (np.eye(model.n) - scipy.linalg.expm(X * t)) @ model.B2)) / t
print("expansion at t = 50 matches to", relative_error(mu2_closed_form(model, 1.0, b, t), lim - corr))

# A + bI singular is a removable singularity: with A = -1, b = 1, mu2 = t/2
scalar = LinearCipsModel([[-1.0]], [[1.0]], [[1.0]], [[1.0]])
print("\nA = -1, b = 1:  mu2(1e-4) = %.6e,  mu2(2) = %.6f" %
      (mu2_closed_form(scalar, 1.0, 1.0, 1e-4)[0, 0], mu2_closed_form(scalar, 1.0, 1.0, 2.0)[0, 0]))
