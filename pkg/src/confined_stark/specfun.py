"""
Airy function, its zeros and the normalised half-line eigenstates.

``Ai`` is evaluated from three pieces:

* ``x >= 8``: the exponentially decaying asymptotic series (DLMF 9.7.5),
  optimally truncated;
* ``x <= -20``: the oscillatory asymptotic series (DLMF 9.7.9);
* in between: local Taylor expansions about nodes spaced 0.25 apart.  The
  node values are produced once by stepping the Airy equation ``y'' = x y``
  with high-order Taylor steps -- forward from the exact values at 0 on the
  negative side, and backward from the asymptotic value at 12 on the
  positive side, which is the stable direction for the recessive solution.

The zeros ``-z_k`` are bracketed by a sign scan and refined by bisection.
``a_k(t) = Ai(t - z_k) / |Ai'(-z_k)|`` uses the closed form
``int_{-z_k}^inf Ai^2 = Ai'(-z_k)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import CapacityError, ParameterError, ResolutionError

__all__ = [
    "airy_ai",
    "airy_ai_prime",
    "AiryZeroTable",
    "zero_table",
    "airy_zero",
    "airy_zeros_below",
    "airy_zero_asymptotic",
    "NormalizedAiryState",
    "airy_state",
    "airy_state_profile",
]

AI0 = 0.35502805388781723926
AIP0 = -0.25881940379280679840

_X_POS = 8.0
_X_NEG = -20.0
_SEED_POS = 12.0
_NODE_STEP = 0.25
_STEP_ORDER = 48
_EVAL_ORDER = 30
_SCAN_STEP = 0.1
_BISECT_WIDTH = 1e-12
DEFAULT_CAPACITY = 50


def _u_coeffs(n):
    u = np.empty(n + 1)
    u[0] = 1.0
    for k in range(1, n + 1):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
    v = np.empty(n + 1)
    v[0] = 1.0
    k = np.arange(1, n + 1)
    v[1:] = -(6 * k + 1) / (6 * k - 1) * u[1:]
    return u, v


_U, _V = _u_coeffs(80)


def _truncated_sum(coef, inv_zeta):
    """Sum ``sum_k (-1)^k coef_k inv_zeta^k`` stopping at the smallest term."""
    total = np.zeros_like(inv_zeta)
    power = np.ones_like(inv_zeta)
    prev = np.full_like(inv_zeta, np.inf)
    active = np.ones(inv_zeta.shape, dtype=bool)
    for k in range(len(coef)):
        term = (-1.0) ** k * coef[k] * power
        mag = np.abs(term)
        active &= mag < prev
        total = np.where(active, total + term, total)
        prev = np.where(active, mag, prev)
        power = power * inv_zeta
        if not active.any():
            break
    return total


def _asym_pos(x):
    zeta = 2.0 / 3.0 * x ** 1.5
    inv = 1.0 / zeta
    su = _truncated_sum(_U, inv)
    sv = _truncated_sum(_V, inv)
    pre = np.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    return pre * x ** -0.25 * su, -pre * x ** 0.25 * sv


def _asym_neg(x):
    z = -x
    zeta = 2.0 / 3.0 * z ** 1.5
    inv2 = zeta ** -2.0
    pu = _truncated_sum(_U[0::2], inv2)
    qu = _truncated_sum(_U[1::2], inv2) / zeta
    pv = _truncated_sum(_V[0::2], inv2)
    qv = _truncated_sum(_V[1::2], inv2) / zeta
    c = np.cos(zeta - math.pi / 4)
    s = np.sin(zeta - math.pi / 4)
    ai = (c * pu + s * qu) / (math.sqrt(math.pi) * z ** 0.25)
    aip = z ** 0.25 / math.sqrt(math.pi) * (s * pv - c * qv)
    return ai, aip


def _taylor_coeffs(x0, y, yp, order):
    """Taylor coefficients of the Airy-equation solution about ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    c = np.zeros(x0.shape + (order + 1,))
    c[..., 0] = y
    c[..., 1] = yp
    c[..., 2] = x0 * y / 2.0
    for k in range(1, order - 1):
        c[..., k + 2] = (x0 * c[..., k] + c[..., k - 1]) / ((k + 2) * (k + 1))
    return c


def _taylor_eval(c, u):
    order = c.shape[-1] - 1
    y = c[..., order]
    yp = order * c[..., order]
    for k in range(order - 1, -1, -1):
        y = y * u + c[..., k]
        if k >= 1:
            yp = yp * u + k * c[..., k]
    return y, yp


def _step(x0, y, yp, h):
    c = _taylor_coeffs(x0, y, yp, _STEP_ORDER)
    return _taylor_eval(c, h)


@lru_cache(maxsize=1)
def _node_table():
    n_neg = int(round(-_X_NEG / _NODE_STEP))
    n_pos = int(round(_X_POS / _NODE_STEP))
    nodes = _NODE_STEP * np.arange(-n_neg, n_pos + 1)
    vals = np.empty((nodes.size, 2))
    # negative side: forward from the exact values at the origin
    y, yp = AI0, AIP0
    vals[n_neg] = y, yp
    for i in range(1, n_neg + 1):
        y, yp = _step(-(i - 1) * _NODE_STEP, y, yp, -_NODE_STEP)
        vals[n_neg - i] = y, yp
    # positive side: backward from the asymptotic value at the seed point
    ya, ypa = _asym_pos(np.array([_SEED_POS]))
    y, yp = float(ya[0]), float(ypa[0])
    x = _SEED_POS
    while x > _X_POS + 1e-12:
        y, yp = _step(x, y, yp, -_NODE_STEP)
        x -= _NODE_STEP
    for i in range(n_pos, 0, -1):
        vals[n_neg + i] = y, yp
        y, yp = _step(i * _NODE_STEP, y, yp, -_NODE_STEP)
    nodes.setflags(write=False)
    vals.setflags(write=False)
    return nodes, vals


def _airy_pair(x):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    pos = x >= _X_POS
    neg = x <= _X_NEG
    mid = ~(pos | neg)
    if pos.any():
        ai[pos], aip[pos] = _asym_pos(x[pos])
    if neg.any():
        ai[neg], aip[neg] = _asym_neg(x[neg])
    if mid.any():
        nodes, vals = _node_table()
        xm = x[mid]
        idx = np.rint((xm - nodes[0]) / _NODE_STEP).astype(int)
        idx = np.clip(idx, 0, nodes.size - 1)
        x0 = nodes[idx]
        c = _taylor_coeffs(x0, vals[idx, 0], vals[idx, 1], _EVAL_ORDER)
        ai[mid], aip[mid] = _taylor_eval(c, xm - x0)
    if scalar:
        return float(ai[0]), float(aip[0])
    return ai, aip


def airy_ai(x):
    """Airy function ``Ai(x)`` for real ``x`` (scalar or array).

    Absolute error is below ``1e-12`` on ``[-20, 20]``; outside that range
    the asymptotic expansions are used.
    """
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise ParameterError("airy_ai requires finite arguments")
    return _airy_pair(x_arr)[0]


def airy_ai_prime(x):
    """Derivative ``Ai'(x)``, same accuracy regime as :func:`airy_ai`."""
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise ParameterError("airy_ai_prime requires finite arguments")
    return _airy_pair(x_arr)[1]


def airy_zero_asymptotic(k):
    """Leading asymptotic ``(3 pi)^(2/3) (4k - 1)^(2/3) / 4`` for ``z_k``."""
    if k < 1:
        raise ParameterError(f"zero index must be >= 1, got {k}")
    return 0.25 * (3.0 * math.pi) ** (2.0 / 3.0) * (4.0 * k - 1.0) ** (2.0 / 3.0)


def _zero_guess(k):
    """Higher-order asymptotic guess for ``z_k`` (DLMF 9.9.6, 9.9.18)."""
    t = 3.0 * math.pi / 8.0 * (4.0 * k - 1.0)
    return t ** (2.0 / 3.0) * (1 + 5.0 / 48 * t ** -2 - 5.0 / 36 * t ** -4)


@dataclass(frozen=True)
class AiryZeroTable:
    """Ordered positive numbers ``z_1 < z_2 < ...`` with ``Ai(-z_k) = 0``.

    Build with :meth:`build`; the stored array is read-only.
    """

    zeros: np.ndarray
    guaranteed_abs_error: float

    @classmethod
    def build(cls, capacity=DEFAULT_CAPACITY):
        if capacity < 1:
            raise ParameterError("capacity must be positive")
        x_end = _zero_guess(capacity) + 1.0
        # step 0.1, tightened where zeros get closer than ~3 steps
        grid = [0.0]
        x = 0.0
        while x < x_end:
            x += min(_SCAN_STEP, 0.3 * math.pi / math.sqrt(max(x, 1.0)))
            grid.append(x)
        xs = -np.asarray(grid)
        vals = airy_ai(xs)
        change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        if change.size < capacity:
            raise CapacityError(
                f"sign scan found {change.size} zeros, fewer than capacity {capacity}")
        change = change[:capacity]
        lo = -xs[change]
        hi = -xs[change + 1]
        f_lo = airy_ai(-lo)
        while np.max(hi - lo) > _BISECT_WIDTH:
            mid = 0.5 * (lo + hi)
            f_mid = airy_ai(-mid)
            same = np.sign(f_mid) == np.sign(f_lo)
            lo = np.where(same, mid, lo)
            f_lo = np.where(same, f_mid, f_lo)
            hi = np.where(same, hi, mid)
        zeros = 0.5 * (lo + hi)
        zeros.setflags(write=False)
        return cls(zeros=zeros, guaranteed_abs_error=0.5 * _BISECT_WIDTH + 1e-14)

    @property
    def capacity(self):
        return self.zeros.size

    def zero(self, k):
        if not 1 <= k <= self.capacity:
            raise CapacityError(f"zero index {k} outside table capacity {self.capacity}")
        return float(self.zeros[k - 1])


@lru_cache(maxsize=8)
def _cached_table(capacity):
    return AiryZeroTable.build(capacity)


def zero_table(capacity=DEFAULT_CAPACITY):
    """Shared immutable zero table holding at least ``capacity`` zeros."""
    if capacity <= DEFAULT_CAPACITY:
        return _cached_table(DEFAULT_CAPACITY)
    rounded = 64 * math.ceil(capacity / 64)
    return _cached_table(rounded)


def airy_zero(k, table=None):
    """``z_k``, the modulus of the k-th zero of ``Ai`` (``k >= 1``).

    The default table holds 50 zeros; larger ``k`` raises
    :class:`CapacityError` unless a bigger ``table`` is supplied.
    """
    table = zero_table() if table is None else table
    return table.zero(k)


def airy_zeros_below(mu):
    """All ``z_k < mu`` as an array (possibly empty)."""
    if mu <= 0:
        return np.empty(0)
    need = 1
    while _zero_guess(need) < mu:
        need *= 2
    table = zero_table(need + 1)
    z = table.zeros
    return np.array(z[z < mu])


@dataclass(frozen=True)
class NormalizedAiryState:
    """Unit-norm Dirichlet eigenfunction ``a_k`` of ``-d^2/dt^2 + t`` on ``t > 0``."""

    k: int
    z_k: float
    norm: float = field(repr=False)
    l2_norm_check: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = airy_ai(t - self.z_k) / self.norm
        return np.where(t >= 0, out, 0.0)

    evaluation = __call__


@lru_cache(maxsize=64)
def airy_state(k):
    """The normalised state ``a_k`` with a quadrature check of its norm."""
    z = airy_zero(k, zero_table(k))
    norm = abs(airy_ai_prime(-z))
    upper = z + 40.0
    pieces = np.linspace(0.0, upper, 8 * k + 9)
    total = 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        val, _ = integrate.quad(lambda t: (airy_ai(t - z) / norm) ** 2, a, b,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        total += val
    return NormalizedAiryState(k=k, z_k=z, norm=norm, l2_norm_check=total)


def airy_state_profile(k, grid):
    """Samples of ``a_k`` on ``grid``, rescaled to unit quadrature norm.

    ``grid`` must be increasing, inside ``[0, T]`` with ``T`` past the
    turning point ``z_k``, and fine enough to resolve the oscillations
    (spacing at most one tenth of the local wavelength ``2 pi / sqrt(z_k)``).
    The norm uses composite Simpson quadrature on the grid.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise ParameterError("grid must be a 1D array with at least 3 points")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be increasing and non-negative")
    state = airy_state(k)
    if grid[-1] <= state.z_k:
        raise ParameterError(
            f"grid ends at {grid[-1]:g}, before the turning point {state.z_k:g}")
    wavelength = 2.0 * math.pi / math.sqrt(max(state.z_k, 1.0))
    if np.max(np.diff(grid)) > wavelength / 10.0:
        raise ResolutionError(
            f"grid spacing {np.max(np.diff(grid)):g} does not resolve wavelength {wavelength:g}")
    samples = state(grid)
    norm2 = integrate.simpson(samples ** 2, x=grid)
    return samples / math.sqrt(norm2)
