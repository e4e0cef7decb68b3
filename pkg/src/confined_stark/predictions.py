"""
Closed-form and quadrature values of the semiclassical limits.

These are the comparison targets for the numerical studies: the three-term
eigenvalue expansion, the counting and Riesz-mean limits in the two
threshold regimes, the large-``mu`` Weyl term, the limiting projector
densities and their potential-perturbed generalisations.  Thresholds are
measured from ``x0``; callers working on a domain with ``x0 != 0`` add
``x0`` back (:func:`three_term_eigenvalue` does so itself).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate, linalg, optimize

from .errors import ParameterError, SolverError, ToleranceError
from .operators import TestPotential
from .specfun import airy_state, airy_zero, airy_zeros_below

__all__ = [
    "LimitParams",
    "semiclassical_constant",
    "weyl_phase_space",
    "three_term_eigenvalue",
    "counting_limit_first",
    "counting_limit_second",
    "rough_weyl",
    "density_limit",
    "density_pairing_limit",
    "first_order_shift",
    "transverse_eigenvalues",
    "perturbed_counting_limit",
]


@dataclass(frozen=True)
class LimitParams:
    """Parameters of the limit formulas.

    Attributes
    ----------
    gamma : float
        Riesz order, ``>= 0``.
    mu : float
        Threshold offset, ``>= 0``.
    alpha : float or None
        Second-regime exponent in ``(2/3, 1)``.
    kappa0 : float
        Boundary curvature at ``X0``, ``> 0``.
    x0 : float
        ``min x1`` over the domain.
    """

    gamma: float = 0.0
    mu: float = 0.0
    alpha: Optional[float] = None
    kappa0: float = 1.0
    x0: float = 0.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if not self.mu >= 0:
            raise ParameterError(f"mu must be >= 0, got {self.mu}")
        if not self.kappa0 > 0:
            raise ParameterError(f"kappa0 must be > 0, got {self.kappa0}")
        if self.alpha is not None and not 2 / 3 < self.alpha < 1:
            raise ParameterError(f"alpha must lie in (2/3, 1), got {self.alpha}")

    def require_alpha(self):
        if self.alpha is None:
            raise ParameterError("alpha in (2/3, 1) is required for the second regime")
        return self.alpha

    def to_dict(self):
        return {"gamma": self.gamma, "mu": self.mu, "alpha": self.alpha,
                "kappa0": self.kappa0, "x0": self.x0}


def semiclassical_constant(gamma, d):
    """``Gamma(gamma+1) / ((4 pi)^{d/2} Gamma(gamma + 1 + d/2))``."""
    if gamma < 0:
        raise ParameterError("gamma must be >= 0")
    if int(d) != d or d < 1:
        raise ParameterError("d must be a positive integer")
    return float(math.exp(math.lgamma(gamma + 1) - 0.5 * d * math.log(4 * math.pi)
                          - math.lgamma(gamma + 1 + 0.5 * d)))


def _support_1d(f, a, b, level, samples=4097):
    """Finite sub-interval of ``(a, b)`` outside which ``f > level``, plus interior roots."""
    def bound(x0, direction):
        x = x0
        step = 1.0
        for _ in range(200):
            x = x0 + direction * step
            if f(x) > level:
                return x
            step *= 2
            if step > 1e12:
                raise ParameterError("phase-space integral diverges: (Lambda - V)_+ is not integrable")
        raise ParameterError("phase-space integral diverges")

    lo = a if np.isfinite(a) else bound(0.0, -1)
    hi = b if np.isfinite(b) else bound(0.0, +1)
    grid = np.linspace(lo, hi, samples)
    vals = np.array([f(x) for x in grid]) - level
    pts = []
    for i in np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]:
        if vals[i] == 0:
            pts.append(grid[i])
        else:
            pts.append(optimize.brentq(lambda x: f(x) - level, grid[i], grid[i + 1], xtol=1e-14))
    return lo, hi, pts


def weyl_phase_space(V, Lambda, d=1, domain=(-np.inf, np.inf)):
    """``L^cl_{0,d} int_omega (Lambda - V)_+^{d/2}`` by adaptive quadrature.

    ``domain`` is an interval ``(a, b)`` for ``d = 1`` or a box
    ``((a, b), (c, e))`` for ``d = 2``.  Infinite intervals are allowed when
    ``V`` exceeds ``Lambda`` far out; otherwise :class:`ParameterError` is
    raised.
    """
    L = semiclassical_constant(0.0, d)
    if d == 1:
        a, b = domain
        f = lambda x: float(V(x))
        lo, hi, pts = _support_1d(f, a, b, Lambda)
        integrand = lambda x: max(Lambda - f(x), 0.0) ** 0.5
        edges = [lo] + sorted(p for p in pts if lo < p < hi) + [hi]
        total = 0.0
        for u, v in zip(edges[:-1], edges[1:]):
            val, err = integrate.quad(integrand, u, v, epsabs=1e-13, epsrel=1e-12, limit=200)
            total += val
        return L * total
    if d == 2:
        (a, b), (c, e) = domain
        if not all(np.isfinite([a, b, c, e])):
            raise ParameterError("two-dimensional phase-space integrals need a bounded box")

        def inner(x):
            # integrate (Lambda - V)_+ in y piecewise between its sign changes,
            # so the kink on the support edge never sits inside a panel
            g = lambda y: float(V(x, y))
            _, _, pts = _support_1d(g, c, e, Lambda, samples=257)
            edges = [c] + sorted(p for p in pts if c < p < e) + [e]
            total = 0.0
            for u, v in zip(edges[:-1], edges[1:]):
                if Lambda - g(0.5 * (u + v)) > 0:
                    total += integrate.quad(lambda y: Lambda - g(y), u, v,
                                            epsabs=1e-13, epsrel=1e-12, limit=200)[0]
            return total

        val, _ = integrate.quad(inner, a, b, epsabs=1e-12, epsrel=1e-11, limit=400)
        return L * val
    raise ParameterError("only d = 1 and d = 2 are supported")


def three_term_eigenvalue(k, h, params):
    """``x0 + z_1 h^{2/3} + (2k - 1) sqrt(kappa0 / 2) h``."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    if h < 0:
        raise ParameterError("h must be >= 0")
    return params.x0 + airy_zero(1) * h ** (2 / 3) + (2 * k - 1) * math.sqrt(params.kappa0 / 2) * h


def _prefactor(gamma, kappa0):
    return 4 * math.pi * semiclassical_constant(gamma, 2) / math.sqrt(2 * kappa0)


def counting_limit_first(params):
    """``(4 pi L_{gamma,2} / sqrt(2 kappa0)) sum_k (mu - z_k)_+^{gamma+1}``."""
    z = airy_zeros_below(params.mu)
    return float(_prefactor(params.gamma, params.kappa0) * np.sum((params.mu - z) ** (params.gamma + 1)))


def counting_limit_second(params):
    """``(4 pi L_{gamma,2} / sqrt(2 kappa0)) mu^{gamma+1}`` (independent of alpha)."""
    params.require_alpha()
    return float(_prefactor(params.gamma, params.kappa0) * params.mu ** (params.gamma + 1))


def rough_weyl(mu, kappa0=1.0):
    """Leading large-``mu`` count ``4 mu^{5/2} / (15 pi sqrt(2 kappa0))`` and the scale ``mu^{-3/4}``."""
    if mu < 0:
        raise ParameterError("mu must be >= 0")
    if kappa0 <= 0:
        raise ParameterError("kappa0 must be > 0")
    value = 4 * mu ** 2.5 / (15 * math.pi * math.sqrt(2 * kappa0))
    return float(value), (float(mu ** -0.75) if mu > 0 else float("inf"))


def density_limit(s, t, params, regime="first"):
    """Limiting projector density at ``(s, t)`` in rescaled window coordinates.

    First regime: ``(1/pi) sum_k (mu - kappa0 s^2/2 - z_k)_+^{1/2} a_k(t)^2``.
    Second regime: ``(1/pi) (mu - kappa0 s^2/2)_+^{1/2} a_1(t)^2``.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    base = params.mu - 0.5 * params.kappa0 * s * s
    if regime == "first":
        out = np.zeros(np.broadcast(s, t).shape)
        for k, z in enumerate(airy_zeros_below(params.mu), start=1):
            c = np.maximum(base - z, 0.0)
            if np.any(c > 0):
                out = out + np.sqrt(c) * airy_state(k)(t) ** 2
        return out / math.pi
    if regime == "second":
        return np.sqrt(np.maximum(base, 0.0)) * airy_state(1)(t) ** 2 / math.pi
    raise ParameterError(f"unknown regime {regime!r}")


def density_pairing_limit(V, params, regime="first"):
    """``int int V(s, t) density_limit(s, t) ds dt``.

    The built-in potentials are separable, ``V = A g(s) w(t)``, so the double
    integral is a sum of products of one-dimensional integrals:
    ``(A/pi) sum_k [int g(s) (c_k - kappa0 s^2/2)_+^{1/2} ds] [int w a_k^2 dt]``
    with ``c_k = mu - z_k`` (first regime) or ``c_1 = mu`` with ``k = 1`` only
    (second regime).
    """
    if V.is_zero:
        return 0.0
    kap = params.kappa0
    if regime == "first":
        levels = [(k, params.mu - z) for k, z in enumerate(airy_zeros_below(params.mu), start=1)]
    elif regime == "second":
        levels = [(1, params.mu)]
    else:
        raise ParameterError(f"unknown regime {regime!r}")
    total = 0.0
    for k, c in levels:
        if c <= 0:
            continue
        edge = math.sqrt(2 * c / kap)
        a, b = max(V.support[0], -edge), min(V.support[1], edge)
        if b <= a:
            continue
        s_part = _quad_checked(lambda s: float(V.s_factor(s)) * math.sqrt(max(c - 0.5 * kap * s * s, 0.0)),
                               a, b)
        t_part = _profile_moment(V.kind, tuple(sorted(V.params.items())), V.support, k)
        total += s_part * t_part
    return float(V.amplitude * total / math.pi)


def _quad_checked(f, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
        except integrate.IntegrationWarning as exc:
            raise ToleranceError(f"shift quadrature did not converge: {exc}") from None
    return float(val)


@lru_cache(maxsize=256)
def _profile_moment(kind, params, support, k):
    """``int w(t) a_k(t)^2 dt`` for the transverse factor of a separable potential."""
    V = TestPotential(kind, dict(params), support)
    a = airy_state(k)
    return _quad_checked(lambda t: float(V.t_factor(t)) * float(a(t)) ** 2,
                         max(support[2], 0.0), support[3])


def first_order_shift(s, V, k=1):
    """``int_0^inf V(s, t) a_k(t)^2 dt``.

    Built-in potentials are separable, ``V = A g(s) w(t)``, so the
    ``t``-integral is computed once per ``(V, k)``.

    Raises
    ------
    ToleranceError
        If the adaptive quadrature does not converge.
    """
    if V.is_zero:
        return 0.0
    moment = _profile_moment(V.kind, tuple(sorted(V.params.items())), V.support, int(k))
    return float(V.amplitude * V.s_factor(np.asarray(s, dtype=float)) * moment)


@lru_cache(maxsize=8)
def _transverse_grid(T, n):
    d = T / (n + 1)
    t = d * np.arange(1, n + 1)
    return t, d


def _tridiagonal_levels(t, d, potential, upper):
    diag = 2.0 / (d * d) + t + potential
    off = np.full(t.size - 1, -1.0 / (d * d))
    vals = linalg.eigh_tridiagonal(diag, off, eigvals_only=True, select="v",
                                   select_range=(-np.inf, upper))
    return np.sort(vals)


def transverse_eigenvalues(s, V, upper, T=40.0, n=4000, coupling=1.0):
    """Eigenvalues below ``upper`` of ``-d^2/dt^2 + t + coupling V(s, t)`` on the half-line.

    Second-order differences on ``(0, T)`` at ``n`` and ``2n`` interior
    nodes, Richardson-extrapolated (error ``O(d^4)``).
    """
    pad = abs(coupling) * (V.sup_norm if not V.is_zero else 0.0) + 1.0
    out = []
    for m in (n, 2 * n):
        t, d = _transverse_grid(float(T), int(m))
        pot = coupling * V(s, t) if not V.is_zero else 0.0
        out.append(_tridiagonal_levels(t, d, pot, upper + pad))
    k = min(len(out[0]), len(out[1]))
    if k == 0:
        return np.zeros(0)
    ext = (4 * out[1][:k] - out[0][:k]) / 3
    return ext[ext < upper]


def _halfline_integral(c, kappa0, p):
    """``int_R (c - kappa0 s^2/2)_+^p ds`` in closed form."""
    if c <= 0:
        return 0.0
    return float(c ** (p + 0.5) * math.sqrt(2 / kappa0) * math.exp(
        math.lgamma(0.5) + math.lgamma(p + 1) - math.lgamma(p + 1.5)))


def _transverse_levels(s, V, count, T, n, coupling=1.0):
    """Lowest ``count`` eigenvalues of ``-d^2/dt^2 + t + coupling V(s, t)``.

    Computed as ``z_j + (lambda_j^d(V) - lambda_j^d(0))`` with ``lambda^d``
    second-order finite-difference eigenvalues Richardson-extrapolated in
    the grid size, so that the discretisation error of the unperturbed
    levels cancels.
    """
    out = []
    for m in (n, 2 * n):
        t, d = _transverse_grid(float(T), int(m))
        off = np.full(t.size - 1, -1.0 / (d * d))
        base = _unperturbed_levels(float(T), int(m), int(count))
        diag = 2.0 / (d * d) + t + coupling * V(s, t)
        pert = linalg.eigh_tridiagonal(diag, off, eigvals_only=True, select="i",
                                       select_range=(0, count - 1))
        out.append(pert - base)
    zs = np.array([airy_zero(j) for j in range(1, count + 1)])
    return zs + (4 * out[1] - out[0]) / 3


@lru_cache(maxsize=32)
def _unperturbed_levels(T, n, count):
    t, d = _transverse_grid(T, n)
    return linalg.eigh_tridiagonal(2.0 / (d * d) + t, np.full(t.size - 1, -1.0 / (d * d)),
                                   eigvals_only=True, select="i", select_range=(0, count - 1))


def _positive_part_integral(g, a, b, p, samples=129, nodes=64):
    """``int_a^b g(s)_+^p ds`` for smooth ``g`` with simple roots.

    Roots are located by a sign scan and Brent's method; on each interval
    where ``g > 0`` the substitution ``s = c - r cos(theta)`` removes the
    ``(s - root)^p`` endpoint behaviour before Gauss-Legendre quadrature
    (checked against twice as many nodes).
    """
    grid = np.linspace(a, b, samples)
    vals = np.array([g(x) for x in grid])
    cuts = [a]
    for i in np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]:
        if vals[i] == 0:
            cuts.append(grid[i])
        elif vals[i + 1] != 0:
            cuts.append(optimize.brentq(g, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15))
    cuts.append(b)
    cuts = sorted(set(cuts))
    total = 0.0
    for u, v in zip(cuts[:-1], cuts[1:]):
        if v - u <= 0 or g(0.5 * (u + v)) <= 0:
            continue
        c, r = 0.5 * (u + v), 0.5 * (v - u)
        estimates = []
        for m in (nodes, 2 * nodes):
            x, w = np.polynomial.legendre.leggauss(m)
            theta = 0.5 * math.pi * (x + 1)
            s = c - r * np.cos(theta)
            f = np.array([max(g(si), 0.0) ** p for si in s])
            estimates.append(float(np.sum(w * f * r * np.sin(theta)) * 0.5 * math.pi))
        if abs(estimates[1] - estimates[0]) > 1e-9 * max(1.0, abs(estimates[1])):
            warnings.warn(f"s-quadrature converged to {abs(estimates[1] - estimates[0]):.1e} only",
                          RuntimeWarning, stacklevel=3)
        total += estimates[1]
    return total


def perturbed_counting_limit(params, V, regime="first", T=None, n=2000):
    """Riesz-mean limit with a rescaled potential added to the operator.

    First regime:
    ``L_{gamma,1} sum_j int (mu - kappa0 s^2/2 - lambda_j(s; V))_+^{gamma+1/2} ds``
    with ``lambda_j(s; V)`` the eigenvalues of ``-d^2/dt^2 + t + V(s, t)`` on
    the half-line.  Outside the ``s``-support of ``V`` these are the Airy
    zeros, so that part is integrated in closed form; inside, the transverse
    problem is solved (second-order differences on ``(0, T)``, Richardson
    extrapolated) at each quadrature node.

    Second regime:
    ``L_{gamma,1} int (mu - kappa0 s^2/2 - F(s))_+^{gamma+1/2} ds`` with
    ``F(s) = int V(s,t) a_1(t)^2 dt``.
    """
    g, mu, kap = params.gamma, params.mu, params.kappa0
    p = g + 0.5
    L1 = semiclassical_constant(g, 1)
    if regime not in ("first", "second"):
        raise ParameterError(f"unknown regime {regime!r}")
    if regime == "second":
        params.require_alpha()
        if V.is_zero:
            return counting_limit_second(params)
    elif V.is_zero:
        return counting_limit_first(params)
    vmax = V.sup_norm
    reach = math.sqrt(2 * (mu + vmax) / kap)
    a, b = max(V.support[0], -reach), min(V.support[1], reach)
    if regime == "second":
        total = _outside_integral(mu, kap, p, V.support[0], V.support[1])
        if b > a:
            total += _positive_part_integral(
                lambda s: mu - 0.5 * kap * s * s - first_order_shift(s, V, 1), a, b, p)
        return L1 * total
    T = float(max(40.0, 2 * (mu + vmax)) if T is None else T)
    zs = airy_zeros_below(mu + vmax)
    total = 0.0
    for z in zs[zs < mu]:
        total += _outside_integral(mu - z, kap, p, V.support[0], V.support[1])
    if b > a and zs.size:
        cache = {}

        def level(s):
            key = float(s)
            if key not in cache:
                cache[key] = _transverse_levels(key, V, zs.size, T, n)
            return cache[key]

        for j in range(zs.size):
            total += _positive_part_integral(lambda s, j=j: mu - 0.5 * kap * s * s - level(s)[j],
                                             a, b, p)
    return L1 * total


def _outside_integral(c, kappa0, p, s_lo, s_hi):
    """``int`` over ``s`` outside ``(s_lo, s_hi)`` of ``(c - kappa0 s^2 / 2)_+^p``."""
    if c <= 0:
        return 0.0
    full = _halfline_integral(c, kappa0, p)
    edge = math.sqrt(2 * c / kappa0)
    a, b = max(s_lo, -edge), min(s_hi, edge)
    if b <= a:
        return full
    return full - _positive_part_integral(lambda s: c - 0.5 * kappa0 * s * s, a, b, p)
