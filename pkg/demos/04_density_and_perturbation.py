"""
Projector densities and perturbed operators
===========================================

The spectral projector density ``rho_h(x) = sum_{lambda_j < threshold}
|psi_j(x)|^2`` integrates to the count.  Rescaled to the boundary layer
(``s = h^{-1/3} x_tan``, ``t = h^{-2/3} x_norm``) it converges weakly to

    (1/pi) sum_k (mu - kappa0 s^2/2 - z_k)_+^{1/2} a_k(t)^2

in the first regime.  Adding a rescaled potential ``h^{2/3} V(h^{-1/3} s,
h^{-2/3} t)`` replaces the Airy zeros ``z_k`` by the eigenvalues
``lambda_j(s; V)`` of ``-d^2/dt^2 + t + V(s, t)``; in the second regime
only the first-order shift ``int V(s, t) a_1(t)^2 dt`` survives.
"""

# +
import numpy as np
from scipy.integrate import trapezoid

from confined_stark.eigensolve import eigs_below, pair_density, projector_density
from confined_stark.experiments import (StudyConfig, chart_for, run_density_study, run_perturbed_study,
                                        run_shift_study)
from confined_stark.operators import TestPotential, assemble_window_2d, rescale_potential
from confined_stark.predictions import (LimitParams, counting_limit_first, density_limit,
                                        density_pairing_limit, first_order_shift,
                                        perturbed_counting_limit, transverse_eigenvalues)
from confined_stark.specfun import airy_zeros_below
# -

# A smooth, compactly supported test potential: a Gaussian bump centred at
# ``(s, t) = (0.3, 1)`` multiplied by a C-infinity taper.

V = TestPotential.gaussian_bump(1.0, 0.3, 1.0, 0.8, 0.5, support=(-1.7, 2.3, 0.0, 2.25))
print("support", V.support, " sup norm", round(V.sup_norm, 6))

# ## The density at one h
#
# Its integral equals the number of eigenvalues below the threshold to
# roundoff, and its pairing with ``V_h`` is the quantity with a limit.

h, mu = 1e-3, 3.0
cfg = StudyConfig("density", (h,), params=LimitParams(0.0, mu), potential=V)
curve, tmap = chart_for(cfg)
threshold = curve.x0 + mu * h ** (2 / 3)
cover = rescale_potential(V, h, "first").support
op = assemble_window_2d(tmap, h, threshold=threshold, cover=cover)
spec = eigs_below(op, threshold, tol=1e-6 * h ** (2 / 3), want_vectors=True)
rho = projector_density(spec, threshold)
print(f"{len(spec)} states; integral of rho = {rho.integral():.12f}")
pr = pair_density(rho, V, "first", h)
print(f"normalised pairing {pr.normalized:.5f}; limit {density_pairing_limit(V, LimitParams(0.0, mu)):.5f}")

# The limit density itself integrates to the first-regime counting limit:

s = np.linspace(-3, 3, 1201)
t = np.linspace(0, 15, 1501)
S, T = np.meshgrid(s, t, indexing="ij")
total = trapezoid(trapezoid(density_limit(S, T, LimitParams(0.0, 4.0)), t, axis=1), s)
print(f"int int density (mu=4) = {total:.5f}; counting limit = {counting_limit_first(LimitParams(0, 4.0)):.5f}")

# ## Convergence of the pairing

report = run_density_study(StudyConfig("density", (1e-2, 1e-3, 1e-4), params=LimitParams(0.0, mu),
                                       potential=V))
for r in report.rows:
    print(f"h={r.h:<7g} states={r.extra['count']:<4d} normalised={r.normalized:.5f} "
          f"limit={r.predicted:.5f} ({r.normalized / r.predicted - 1:+.1%})")

# ## Perturbed counting, first regime
#
# Raising the potential pushes the transverse levels up and the count
# down; lowering it does the opposite.  The limit integrates
# ``(mu - s^2/2 - lambda_j(s; V))_+^{1/2}`` in ``s``.

W = TestPotential.gaussian_bump(1.0, 0.0, 1.0, 0.8, 0.5)
print("lambda_j(0; W):", transverse_eigenvalues(0.0, W, 6.0), " z_j:", airy_zeros_below(6.0))
for amp in (-1.0, 0.0, 1.0):
    print(f"amplitude {amp:+.0f}: limit {perturbed_counting_limit(LimitParams(0.0, 4.0), W.scaled(amp)):.5f}")

report = run_perturbed_study(StudyConfig("perturbed", (1e-2, 1e-3, 1e-4), params=LimitParams(0.0, 4.0),
                                         potential=W))
for r in report.rows:
    print(f"h={r.h:<7g} count={r.observed:<5g} normalised={r.normalized:.5f} limit={r.predicted:.5f}")

# ## The first-order shift
#
# In the second regime the potential enters with strength
# ``h^{alpha - 2/3}`` which tends to 0, so the lowest transverse level moves
# by ``h^{alpha-2/3} int V a_1^2`` up to ``O(h^{2 alpha - 4/3})``.

print("int W(0, t) a_1(t)^2 dt =", first_order_shift(0.0, W, 1), "; k = 2:", first_order_shift(0.0, W, 2))
shift = run_shift_study(StudyConfig("shift", (1e-2, 1e-4, 1e-6), regime="second", potential=W,
                                    params=LimitParams(0.0, 1.0, alpha=0.8)))
for r in shift.rows:
    print(f"h={r.h:<7g} coupling={r.extra['coupling']:.4f} shift/coupling={r.normalized:.5f} "
          f"remainder={r.extra['remainder']:+.2e}")
print(f"remainder decays like h^{shift.fitted_rate:.3f} (first-order theory: h^{2 * 0.8 - 4 / 3:.3f})")
