"""
Domains, their boundary near the x1-minimiser, and tubular coordinates.

A closed boundary is given by a counter-clockwise parameterisation
``X(p)``, ``p`` in ``[0, 2 pi)``.  :func:`build_domain` locates the unique
minimiser ``X0`` of the first coordinate and re-parameterises by arc length
``s`` with ``gamma(0) = X0``.  The arc length is integrated spectrally from
the Fourier series of the speed ``|X'(p)|`` and inverted by Newton's method.

Tubular coordinates are ``tau(s, t) = gamma(s) - t n(s)`` with ``n`` the
outward unit normal, so ``t`` is the inward distance, and the area element is
``m(s, t) = 1 - kappa(s) t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainAssumptionError, ParameterError, RangeError

__all__ = [
    "DomainSpec",
    "BoundaryCurve",
    "FlatBoundary",
    "TubularMap",
    "build_domain",
    "build_tubular_map",
    "tubular_eval",
    "taylor_residual",
    "domain_level_set",
]

_KINDS = ("disk", "ellipse", "fourier_star")


@dataclass(frozen=True)
class DomainSpec:
    """Closed-form smooth domain.

    ``params`` holds ``radius`` for a disk, ``a`` and ``b`` (semi-axes along
    x1 and x2) for an ellipse, or ``r0``, ``cos`` and ``sin`` (Fourier
    coefficients of the polar radius, starting at frequency 1) for a
    star-shaped domain.
    """

    kind: str
    params: dict = field(default_factory=dict)
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown domain kind {self.kind!r}; expected one of {_KINDS}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.kind == "disk" and self.params.get("radius", 0) <= 0:
            raise ParameterError("disk radius must be positive")
        if self.kind == "ellipse" and min(self.params.get("a", 0), self.params.get("b", 0)) <= 0:
            raise ParameterError("ellipse semi-axes must be positive")
        if self.kind == "fourier_star":
            p = np.linspace(0, 2 * np.pi, 2048, endpoint=False)
            if np.min(self._radius(p)[0]) <= 0:
                raise ParameterError("fourier_star radius must stay positive")

    @classmethod
    def disk(cls, radius=1.0, center=(0.0, 0.0)):
        return cls("disk", {"radius": float(radius)}, center)

    @classmethod
    def ellipse(cls, a, b, center=(0.0, 0.0)):
        return cls("ellipse", {"a": float(a), "b": float(b)}, center)

    @classmethod
    def fourier_star(cls, r0, cos=(), sin=(), center=(0.0, 0.0)):
        return cls("fourier_star",
                   {"r0": float(r0), "cos": [float(c) for c in cos],
                    "sin": [float(c) for c in sin]}, center)

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params), "center": list(self.center)}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["kind"], dict(data.get("params", {})), tuple(data.get("center", (0.0, 0.0))))
        except KeyError as exc:
            raise ParameterError(f"domain description lacks {exc}") from None

    def _radius(self, p):
        """Polar radius and its first two derivatives (star domains)."""
        r = np.full_like(p, self.params["r0"])
        dr = np.zeros_like(p)
        ddr = np.zeros_like(p)
        for k, c in enumerate(self.params.get("cos", []), start=1):
            r += c * np.cos(k * p)
            dr -= k * c * np.sin(k * p)
            ddr -= k * k * c * np.cos(k * p)
        for k, c in enumerate(self.params.get("sin", []), start=1):
            r += c * np.sin(k * p)
            dr += k * c * np.cos(k * p)
            ddr -= k * k * c * np.sin(k * p)
        return r, dr, ddr

    def parametric(self, p):
        """``X(p)``, ``X'(p)`` and ``X''(p)`` as arrays of shape ``(2, n)``."""
        p = np.asarray(p, dtype=float)
        cx, cy = self.center
        c, s = np.cos(p), np.sin(p)
        if self.kind == "disk":
            r = self.params["radius"]
            X = np.array([cx + r * c, cy + r * s])
            d1 = np.array([-r * s, r * c])
            d2 = np.array([-r * c, -r * s])
        elif self.kind == "ellipse":
            a, b = self.params["a"], self.params["b"]
            X = np.array([cx + a * c, cy + b * s])
            d1 = np.array([-a * s, b * c])
            d2 = np.array([-a * c, -b * s])
        else:
            r, dr, ddr = self._radius(p)
            X = np.array([cx + r * c, cy + r * s])
            d1 = np.array([dr * c - r * s, dr * s + r * c])
            d2 = np.array([ddr * c - 2 * dr * s - r * c, ddr * s + 2 * dr * c - r * s])
        return X, d1, d2


def domain_level_set(spec, x, y):
    """Negative inside the domain, positive outside, zero on the boundary."""
    cx, cy = spec.center
    dx, dy = np.asarray(x) - cx, np.asarray(y) - cy
    if spec.kind == "disk":
        return np.hypot(dx, dy) - spec.params["radius"]
    if spec.kind == "ellipse":
        return (dx / spec.params["a"]) ** 2 + (dy / spec.params["b"]) ** 2 - 1.0
    r = spec._radius(np.arctan2(dy, dx))[0]
    return np.hypot(dx, dy) - r


def _curvature(d1, d2):
    return (d1[0] * d2[1] - d1[1] * d2[0]) / np.hypot(d1[0], d1[1]) ** 3


class _ArcLength:
    """Spectral arc length ``s(p)`` measured from ``p0`` and its inverse."""

    def __init__(self, spec, p0):
        n = 256
        while True:
            p = 2 * np.pi * np.arange(n) / n
            speed = np.hypot(*spec.parametric(p)[1])
            coef = np.fft.rfft(speed) / n
            tail = np.max(np.abs(coef[-n // 16:]))
            if tail < 1e-15 * abs(coef[0]) or n >= 2 ** 16:
                break
            n *= 2
        keep = np.nonzero(np.abs(coef) > 1e-17 * abs(coef[0]))[0]
        kmax = int(keep.max()) if keep.size else 0
        self.c0 = float(coef[0].real)
        k = np.arange(1, kmax + 1)
        # speed = c0 + sum a_k cos kp + b_k sin kp
        self.k = k
        self.a = 2 * coef[1:kmax + 1].real
        self.b = -2 * coef[1:kmax + 1].imag
        self.spec = spec
        self.p0 = p0
        self.length = 2 * np.pi * self.c0
        self._S0 = self._primitive(np.array([p0]))[0]

    def _primitive(self, p):
        p = np.atleast_1d(p)
        out = self.c0 * p
        if self.k.size:
            kp = np.outer(p, self.k)
            out = out + (np.sin(kp) @ (self.a / self.k)) - (np.cos(kp) @ (self.b / self.k))
        return out

    def s_of_p(self, p):
        return self._primitive(p) - self._S0

    def p_of_s(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        p = self.p0 + s / self.c0
        prev = np.inf
        for _ in range(50):
            speed = np.hypot(*self.spec.parametric(p)[1])
            step = (self.s_of_p(p) - s) / speed
            p = p - step
            size = np.max(np.abs(step)) if step.size else 0.0
            # quadratic convergence: stop at roundoff or once steps stagnate
            if size < 1e-14 * (1.0 + np.max(np.abs(p))) or (size < 1e-12 and size >= 0.5 * prev):
                break
            prev = size
        return p


@dataclass(frozen=True)
class BoundaryCurve:
    """Arc-length parameterised boundary with ``gamma(0) = X0``.

    ``s`` increases in the counter-clockwise direction; ``theta`` is the
    angle of the outward normal, equal to ``pi`` at ``X0``.
    """

    spec: DomainSpec
    X0: tuple
    x0: float
    kappa0: float
    length: float
    _arc: _ArcLength = field(repr=False, compare=False)

    def _p(self, s):
        return self._arc.p_of_s(s)

    def gamma(self, s):
        return self.spec.parametric(self._p(s))[0]

    def tangent(self, s):
        d1 = self.spec.parametric(self._p(s))[1]
        return d1 / np.hypot(d1[0], d1[1])

    def normal(self, s):
        tx, ty = self.tangent(s)
        return np.array([ty, -tx])

    def theta(self, s):
        nx, ny = self.normal(s)
        # angle relative to the normal (-1, 0) at X0, wrapped to (-pi, pi]
        return np.pi + np.arctan2(-ny, -nx)

    def kappa(self, s):
        _, d1, d2 = self.spec.parametric(self._p(s))
        return _curvature(d1, d2)

    def local_frame(self, s):
        """``gamma``, outward normal and curvature in one evaluation."""
        X, d1, d2 = self.spec.parametric(self._p(s))
        speed = np.hypot(d1[0], d1[1])
        n = np.array([d1[1] / speed, -d1[0] / speed])
        return X, n, _curvature(d1, d2)

    def arclength_derivative(self, s, step=1e-5):
        """Central-difference ``|gamma'(s)|`` (checks the inverse map)."""
        g1 = self.gamma(np.asarray(s) + step)
        g0 = self.gamma(np.asarray(s) - step)
        return np.hypot(*(g1 - g0)) / (2 * step)


@dataclass(frozen=True)
class FlatBoundary:
    """Synthetic straight boundary ``gamma(s) = (x0, -s)`` with zero curvature."""

    x0: float = 0.0
    length: float = np.inf
    kappa0: float = 0.0

    @property
    def X0(self):
        return (self.x0, 0.0)

    def gamma(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.array([np.full_like(s, self.x0), -s])

    def normal(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.array([-np.ones_like(s), np.zeros_like(s)])

    def theta(self, s):
        return np.full_like(np.atleast_1d(np.asarray(s, dtype=float)), np.pi)

    def kappa(self, s):
        return np.zeros_like(np.atleast_1d(np.asarray(s, dtype=float)))

    def local_frame(self, s):
        return self.gamma(s), self.normal(s), self.kappa(s)


def build_domain(spec):
    """Boundary curve of ``spec`` re-parameterised at its x1-minimiser.

    Raises
    ------
    DomainAssumptionError
        If the minimiser of x1 on the boundary is not unique or the
        curvature there is not positive.
    """
    n = 8192
    p = 2 * np.pi * np.arange(n) / n
    X, _, _ = spec.parametric(p)
    x = X[0]
    scale = float(np.ptp(x) + np.ptp(X[1]))
    dp = 2 * np.pi / n

    def refine(q):
        # Newton on x1'(p) = 0 from a sampled local minimum
        q = np.array([q])
        for _ in range(30):
            _, g1, g2 = spec.parametric(q)
            if g2[0, 0] <= 0:
                break
            step = g1[0] / g2[0]
            q = q - step
            if abs(step[0]) < 1e-15:
                break
        q = q[0] if abs(q[0] - q0) <= dp else q0
        return float(np.mod(q, 2 * np.pi))

    is_min = (x < np.roll(x, 1)) & (x <= np.roll(x, -1))
    cands = []
    for j in np.nonzero(is_min)[0]:
        q0 = p[j]
        q = refine(q0)
        cands.append((float(spec.parametric(np.array([q]))[0][0, 0]), q))
    cands.sort()
    x0, p0 = cands[0]
    for xv, q in cands[1:]:
        # another local minimum at the same level
        if xv - x0 < 1e-10 * scale and abs(np.angle(np.exp(1j * (q - p0)))) > 2 * dp:
            raise DomainAssumptionError(
                f"x1 is minimised at more than one boundary point (p={p0:.6f} and p={q:.6f})")
    X0v, d1, d2 = spec.parametric(np.array([p0]))
    kappa0 = float(_curvature(d1, d2)[0])
    if kappa0 <= 1e-8 / scale:
        raise DomainAssumptionError(
            f"boundary curvature at the x1-minimiser is {kappa0:.3e}; it must be positive")
    arc = _ArcLength(spec, p0)
    return BoundaryCurve(spec=spec, X0=(x0, float(X0v[1, 0])), x0=x0, kappa0=kappa0,
                         length=float(arc.length), _arc=arc)


@dataclass(frozen=True)
class TubularMap:
    """Tubular chart on ``(-s_half, s_half) x [0, delta)``."""

    curve: object
    delta: float
    s_half: float

    @classmethod
    def flat(cls, delta=np.inf, s_half=np.inf, x0=0.0):
        """Chart of a straight boundary, for separable test problems."""
        return cls(curve=FlatBoundary(x0=x0), delta=delta, s_half=s_half)

    @property
    def kappa0(self):
        return self.curve.kappa0

    @property
    def x0(self):
        return self.curve.x0

    def check_range(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(s) >= self.s_half) or np.any(t < 0) or np.any(t >= self.delta):
            raise RangeError(
                f"(s, t) outside the strip (-{self.s_half:g}, {self.s_half:g}) x [0, {self.delta:g})")

    def tau(self, s, t):
        """Points ``gamma(s) - t n(s)`` (shape ``(2, n)``), no range check."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.asarray(t, dtype=float)
        # the frame depends on s only: evaluate it once per distinct s
        s_unique, inverse = np.unique(s.ravel(), return_inverse=True)
        g, nrm, _ = self.curve.local_frame(s_unique)
        return g[:, inverse] - t.ravel() * nrm[:, inverse] if t.ndim else g[:, inverse] - t * nrm[:, inverse]

    def tau1(self, s, t):
        return self.tau(s, t)[0]

    def jacobian(self, s, t):
        return 1.0 - self.curve.kappa(s) * np.asarray(t, dtype=float)

    def fields(self, s, t):
        """``tau1`` and ``m`` on broadcastable arrays ``s``, ``t``."""
        s_b, t_b = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        shape = s_b.shape
        s_flat = s_b.ravel()
        t_flat = t_b.ravel()
        # the frame depends on s only: evaluate it once per distinct s
        s_unique, inverse = np.unique(s_flat, return_inverse=True)
        g, nrm, kap = self.curve.local_frame(s_unique)
        g1 = g[0][inverse]
        n1 = nrm[0][inverse]
        k = kap[inverse]
        return (g1 - t_flat * n1).reshape(shape), (1.0 - k * t_flat).reshape(shape)


def _min_distance(points, samples, chunk=2048):
    """Distance from each point to the nearest sample (brute force, chunked).

    Tree searches degenerate when many samples are nearly equidistant from
    a query point (the centre of a disk), so a dense sweep is used.
    """
    sq = np.sum(samples * samples, axis=1)
    out = np.empty(points.shape[0])
    for i in range(0, points.shape[0], chunk):
        p = points[i:i + chunk]
        d2 = np.sum(p * p, axis=1)[:, None] - 2.0 * p @ samples.T + sq[None, :]
        out[i:i + chunk] = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
    return out


def build_tubular_map(curve, m_min=0.1, s_half=None, n_check=400):
    """Largest chart with ``m > m_min`` that is injective on a test mesh.

    ``s_half`` defaults to half the boundary length.  The strip width is
    reduced by 10% until every mapped mesh point lies at distance ``t``
    from the boundary.
    """
    if not 0 < m_min < 1:
        raise ParameterError("m_min must lie in (0, 1)")
    if s_half is None:
        s_half = 0.5 * curve.length
    s_half = min(float(s_half), 0.5 * curve.length)
    s_dense = np.linspace(-0.5 * curve.length, 0.5 * curve.length, 20001)
    gam, _, kap = curve.local_frame(s_dense)
    kmax = float(np.max(kap))
    delta = (1.0 - m_min) / kmax if kmax > 0 else float(np.ptp(gam[0]))
    n_b = 2048
    boundary = gam[:, ::max(1, (s_dense.size - 1) // n_b)].T
    h_b = curve.length / (boundary.shape[0] - 1)
    s_mesh = np.linspace(-s_half, s_half, n_check, endpoint=False)[1:]
    for _ in range(40):
        t_mesh = np.linspace(0.0, delta, 60, endpoint=False)[1:]
        tm = TubularMap(curve=curve, delta=delta, s_half=s_half)
        S, T = np.meshgrid(s_mesh, t_mesh, indexing="ij")
        pts = tm.tau(S.ravel(), T.ravel()).T
        dist = _min_distance(pts, boundary)
        inside = domain_level_set(curve.spec, pts[:, 0], pts[:, 1]) < 0
        # nearest-sample distance over-estimates the true one by at most h_b / 2
        ok = inside & (dist >= T.ravel() - (h_b + 1e-9 * delta))
        if ok.all():
            return tm
        delta *= 0.9
    raise DomainAssumptionError("could not find an injective tubular strip")


def tubular_eval(tmap, s, t):
    """Point ``tau(s, t)``, its first coordinate and ``m(s, t)``.

    Raises :class:`RangeError` outside ``(-s_half, s_half) x [0, delta)``.
    """
    tmap.check_range(s, t)
    point = tmap.tau(s, t)
    m = tmap.jacobian(s, t)
    if np.ndim(s) == 0 and np.ndim(t) == 0:
        return point[:, 0], float(point[0, 0]), float(np.ravel(m)[0])
    return point, point[0], m


def taylor_residual(tmap, s, t):
    """``tau1(s, t) - x0 - t - kappa0 s^2 / 2``, of order ``|s|^3 + |t s^2|``."""
    tmap.check_range(s, t)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    tau1, _ = tmap.fields(s, t)
    res = tau1 - tmap.x0 - t - 0.5 * tmap.kappa0 * s ** 2
    return float(res) if res.ndim == 0 else res
