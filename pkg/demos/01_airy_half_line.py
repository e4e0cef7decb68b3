"""
The Airy operator on the half-line
==================================

Near the point where a domain touches the line ``x1 = x0`` the Stark
operator ``-h^2 Delta + x1`` looks, in the normal direction, like
``-d^2/dt^2 + t`` on ``t > 0`` with a Dirichlet condition at ``t = 0``.
Its eigenvalues are the absolute values ``z_k`` of the zeros of the Airy
function and its eigenfunctions are shifted Airy functions.
"""

# +
import numpy as np
from scipy.integrate import trapezoid

from confined_stark.eigensolve import eigs_below
from confined_stark.operators import Edge, assemble_model_1d
from confined_stark.specfun import (airy_ai, airy_state, airy_state_profile, airy_zero,
                                    airy_zero_asymptotic)
# -

# ## Zeros and their large-k asymptotics
#
# ``z_k ~ (1/4) (3 pi)^{2/3} (4k - 1)^{2/3}`` is already good to five digits
# at ``k = 5``; the relative error keeps shrinking with ``k``.

print(f"{'k':>3} {'z_k':>14} {'asymptotic':>14} {'rel. error':>11}")
for k in (1, 2, 3, 5, 10, 20, 50):
    z, a = airy_zero(k), airy_zero_asymptotic(k)
    print(f"{k:3d} {z:14.10f} {a:14.10f} {abs(z - a) / z:11.2e}")

# Every tabulated zero is a genuine sign change of ``Ai(-x)``:

eps = 1e-6
print(all(airy_ai(-airy_zero(k) + eps) * airy_ai(-airy_zero(k) - eps) < 0 for k in range(1, 51)))

# ## Normalised eigenstates
#
# ``a_k(t) = Ai(t - z_k) / ||Ai(. - z_k)||`` has unit L2 norm, vanishes at
# ``t = 0`` and has ``k - 1`` interior nodes.

t = np.linspace(0.0, 25.0, 20001)
for k in (1, 2, 3):
    a = airy_state_profile(k, t)
    norm = trapezoid(a * a, t)
    nodes = int(np.sum(np.sign(a[1:-1][:-1]) != np.sign(a[1:-1][1:])))
    print(f"a_{k}: norm {norm:.8f}, a_k(0) = {float(airy_state(k)(0.0)):.1e}, interior nodes {nodes}")

print("<a_1, a_2> =", trapezoid(airy_state_profile(1, t) * airy_state_profile(2, t), t))

# ## The truncated, discretised model
#
# Truncating to ``(0, 40)`` and using centred second differences with
# ``n`` interior nodes, the lowest eigenvalues converge to ``z_k`` at second
# order.  The condition at the far end is irrelevant: eigenfunctions decay
# like ``exp(-(2/3) t^{3/2})``.

z = np.array([airy_zero(k) for k in range(1, 6)])
for n in (500, 1000, 2000, 4000):
    vals = eigs_below(assemble_model_1d(40.0, n), 8.5).eigenvalues[:5]
    print(f"n={n:5d}  errors " + " ".join(f"{e:+.2e}" for e in vals - z))

dirichlet = eigs_below(assemble_model_1d(40.0, 4000), 8.5).eigenvalues[:5]
neumann = eigs_below(assemble_model_1d(40.0, 4000, bc_right=Edge.NEUMANN), 8.5).eigenvalues[:5]
print("max |Dirichlet - Neumann| at t = 40:", np.max(np.abs(dirichlet - neumann)))

# The error is ``-(d^2/12) <(t - z_k)^2> = -(d^2/12) z_k^2 / 5`` (by the
# virial identities ``<t> = 2z/3``, ``<t^2> = 8z^2/15``):

d = 40.0 / 4001
print("observed  " + " ".join(f"{e:+.4e}" for e in dirichlet - z))
print("predicted " + " ".join(f"{e:+.4e}" for e in -(d ** 2 / 12) * z ** 2 / 5))
