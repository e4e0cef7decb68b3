"""
Counting eigenvalues near the bottom of the spectrum
====================================================

Two threshold scales give finite semiclassical limits for the counting
function ``N`` (and Riesz means ``Tr(.)_-^gamma``) of ``L_h = -h^2 Delta + x1``:

* first regime, threshold ``x0 + mu h^{2/3}``:
  ``h^{(1-2 gamma)/3} Tr(L_h - x0 - mu h^{2/3})_-^gamma
  -> (4 pi L_{gamma,2} / sqrt(2 kappa0)) sum_k (mu - z_k)_+^{gamma+1}``;
* second regime, threshold ``x0 + z_1 h^{2/3} + mu h^alpha`` with
  ``2/3 < alpha < 1``:
  ``h^{1-alpha(1+gamma)} Tr(...)_-^gamma -> (4 pi L_{gamma,2} / sqrt(2 kappa0)) mu^{gamma+1}``,
  independent of ``alpha``.

Counts come from the inertia of a sparse ``LDL^T``-type factorisation of the
shifted operator, so no eigenvalue below the threshold can be missed.
"""

# +
import numpy as np

from confined_stark.experiments import StudyConfig, run_counting_study
from confined_stark.geometry import DomainSpec
from confined_stark.predictions import (LimitParams, counting_limit_first, counting_limit_second,
                                        rough_weyl)
# -

# ## First regime on the unit disk
#
# Only ``z_1 = 2.338`` lies below ``mu = 4``, so the limit is
# ``(4 - z_1)/sqrt 2 = 1.17514``.  Each row reports the count bracket
# ``[N(threshold - tol), N(threshold + tol)]``; a narrow bracket means no
# eigenvalue sits on the threshold.


def show(report):
    for r in report.rows:
        extra = ""
        if "normalized_bracket" in r.extra:
            lo, hi = r.extra["normalized_bracket"]
            extra = f"  bracket [{lo:.4f}, {hi:.4f}]"
        print(f"  h={r.h:<7g} observed={r.observed:<10.6g} normalised={r.normalized:.5f}  "
              f"limit={r.predicted:.5f} ({r.normalized / r.predicted - 1:+.1%}){extra}")


params = LimitParams(gamma=0.0, mu=4.0)
print("gamma = 0, mu = 4")
show(run_counting_study(StudyConfig("counting", (0.02, 0.01, 0.005), params=params)))

# Riesz means (``gamma = 1``) are smoother functions of the threshold and
# converge more regularly:

print("gamma = 1, mu = 5")
show(run_counting_study(StudyConfig("counting", (0.02, 0.01, 0.005), params=LimitParams(1.0, 5.0))))

# The same law holds on an ellipse touching ``x1 = 0`` with ``kappa0 = 2``:

ellipse = DomainSpec.ellipse(2.0, 1.0, (2.0, 0.0))
print("ellipse, gamma = 0, mu = 4")
show(run_counting_study(StudyConfig("counting", (0.02, 0.01, 0.005), domain=ellipse,
                                    params=LimitParams(0.0, 4.0, kappa0=2.0))))

# ## Second regime
#
# With ``mu = 1`` the limit is ``1/sqrt 2`` for every ``alpha``.  Counts
# are small integers at desk-scale ``h``, so the normalised count moves in
# steps of ``h^{1-alpha}``.

for alpha in (0.8, 0.75):
    p = LimitParams(0.0, 1.0, alpha=alpha)
    print(f"alpha = {alpha}")
    show(run_counting_study(StudyConfig("counting", (1e-3, 1e-4, 1e-5), regime="second", params=p)))
print([counting_limit_second(LimitParams(0.0, 1.0, alpha=a)) for a in (0.7, 0.8, 0.9)])

# ## Large mu: the rough Weyl law
#
# Summing ``(mu - z_k)_+`` with ``z_k ~ (3 pi k / 2)^{2/3}`` gives the
# leading term ``4 mu^{5/2} / (15 pi sqrt(2 kappa0))``.  The remainder is
# guaranteed to be ``O(mu^{-3/4})`` relative to it; for the exact Airy
# zeros it is in fact ``~ (15 pi / 16) mu^{-3/2}``.

mus = np.geomspace(20.0, 200.0, 7)
for mu in mus:
    ratio = counting_limit_first(LimitParams(0.0, mu)) / rough_weyl(mu)[0]
    print(f"mu={mu:7.2f}  ratio - 1 = {ratio - 1:+.5f}   -(15 pi/16) mu^(-3/2) = "
          f"{-(15 * np.pi / 16) * mu ** -1.5:+.5f}   mu^(-3/4) = {mu ** -0.75:.5f}")
devs = [abs(counting_limit_first(LimitParams(0.0, m)) / rough_weyl(m)[0] - 1) for m in mus]
print("fitted decay exponent:", round(-np.polyfit(np.log(mus), np.log(devs), 1)[0], 3))
