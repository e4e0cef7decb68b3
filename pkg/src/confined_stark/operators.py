"""
Symmetric sparse discretisations of the Stark operator and its model pieces.

Every operator represents a quadratic form ``K`` on nodal or cell values
``psi`` together with diagonal quadrature weights ``W`` (cell areas times
the Jacobian ``m`` where relevant).  The stored matrix is
``A = W^{-1/2} K W^{-1/2}``, symmetric in the Euclidean inner product and
similar to the generalised problem ``K psi = lambda W psi``.  A unit
eigenvector ``v`` of ``A`` corresponds to the function values
``psi = v / sqrt(W)``, normalised in the weighted ``L^2`` norm.

* One-dimensional operators use nodes on a uniform grid: second-order
  centred differences, Dirichlet ends are eliminated, Neumann ends keep the
  end node with half weight (the mirror-ghost closure).
* The curved window operator uses cell-centred finite volumes for
  ``h^2 (m^{-1} |d_s psi|^2 + m |d_t psi|^2) + tau1 m |psi|^2``; each outer
  face is Dirichlet (ghost value ``-psi``) or Neumann (no flux) according to
  its own tag.
* The full-domain operator uses a Cartesian node grid with the symmetric
  cut-cell treatment of curved Dirichlet boundaries: a link from an inside
  node to the boundary at fractional distance ``theta`` contributes
  ``h^2 / (theta d^2)`` to the diagonal.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, CoverageError, ParameterError, ResolutionWarning
from .geometry import DomainSpec, TubularMap, build_domain, domain_level_set
from .specfun import airy_zero

__all__ = [
    "Edge",
    "BoundaryCondition",
    "DIRICHLET",
    "MIXED",
    "GridInfo",
    "DiscreteOperator",
    "TestPotential",
    "RescaledPotential",
    "WindowGrid",
    "window_grid",
    "FullMesh",
    "full_mesh",
    "assemble_schrodinger_1d",
    "assemble_model_1d",
    "assemble_oscillator_1d",
    "assemble_window_2d",
    "assemble_full_2d",
    "rescale_potential",
    "default_truncation",
    "DEFAULT_ETA",
]

DEFAULT_ETA = 1.0 / 30.0
DEFAULT_MAX_UNKNOWNS = 1_500_000


class Edge(str, enum.Enum):
    """Boundary condition on one edge of a rectangular grid."""

    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if key in (member.value, member.value[0]):
                return member
        raise ParameterError(f"unknown boundary tag {value!r}")


@dataclass(frozen=True)
class BoundaryCondition:
    """Per-edge tags: ``s`` is the tangential axis, ``t`` the normal one.

    One-dimensional operators in ``t`` read ``t_lo``/``t_hi``; those in
    ``s`` read ``s_lo``/``s_hi``.
    """

    s_lo: Edge = Edge.DIRICHLET
    s_hi: Edge = Edge.DIRICHLET
    t_lo: Edge = Edge.DIRICHLET
    t_hi: Edge = Edge.DIRICHLET

    def __post_init__(self):
        for name in ("s_lo", "s_hi", "t_lo", "t_hi"):
            object.__setattr__(self, name, Edge.parse(getattr(self, name)))

    @classmethod
    def dirichlet(cls):
        return cls()

    @classmethod
    def neumann(cls):
        return cls(Edge.NEUMANN, Edge.NEUMANN, Edge.NEUMANN, Edge.NEUMANN)

    @classmethod
    def mixed(cls):
        """Dirichlet on ``t = 0``, Neumann on the three other edges."""
        return cls(Edge.NEUMANN, Edge.NEUMANN, Edge.DIRICHLET, Edge.NEUMANN)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("dirichlet", "d"):
                return cls.dirichlet()
            if key in ("mixed", "m"):
                return cls.mixed()
            if key in ("neumann", "n"):
                return cls.neumann()
            raise ParameterError(f"unknown boundary condition {value!r}")
        if isinstance(value, dict):
            return cls(**value)
        raise ParameterError(f"cannot interpret {value!r} as a boundary condition")

    @property
    def label(self):
        if self == BoundaryCondition.dirichlet():
            return "dirichlet"
        if self == BoundaryCondition.mixed():
            return "mixed"
        if self == BoundaryCondition.neumann():
            return "neumann"
        return ",".join(f"{k}={getattr(self, k).value}" for k in ("s_lo", "s_hi", "t_lo", "t_hi"))


DIRICHLET = BoundaryCondition.dirichlet()
MIXED = BoundaryCondition.mixed()


@dataclass(frozen=True)
class GridInfo:
    """Where the unknowns live.

    ``chart`` is ``"line"`` (1D, coordinate ``axes[0]``), ``"window"``
    (cell centres ``axes = (s, t)`` of a tubular window, unknowns in
    row-major ``(s, t)`` order) or ``"cartesian"`` (node axes ``(x, y)``
    with ``index`` mapping each unknown to its ``(i, j)`` node).
    """

    chart: str
    axes: tuple
    spacings: tuple
    extents: tuple
    index: Optional[np.ndarray] = None
    tubular: Optional[TubularMap] = None

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    def coordinates(self):
        """Coordinates of each unknown, shape ``(dim, n)``."""
        if self.chart == "line":
            return np.asarray(self.axes[0])[None, :]
        if self.chart == "window":
            S, T = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
            return np.array([S.ravel(), T.ravel()])
        x, y = self.axes
        return np.array([x[self.index[:, 0]], y[self.index[:, 1]]])


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Symmetric discretisation ``A = W^{-1/2} K W^{-1/2}`` with its grid."""

    matrix: sp.csr_matrix
    weights: np.ndarray
    grid: GridInfo
    bc: BoundaryCondition
    description: str
    h: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.matrix.shape[0]

    def is_symmetric(self):
        diff = self.matrix - self.matrix.T
        return diff.nnz == 0 or np.max(np.abs(diff.data)) == 0.0

    def gershgorin_bounds(self):
        """Interval containing the spectrum."""
        A = self.matrix.tocsr()
        diag = A.diagonal()
        radius = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
        return float(np.min(diag - radius)), float(np.max(diag + radius))

    def function_values(self, vectors):
        """Grid values ``psi = v / sqrt(W)`` of Euclidean eigenvectors."""
        v = np.asarray(vectors)
        scale = 1.0 / np.sqrt(self.weights)
        return v * (scale[:, None] if v.ndim == 2 else scale)

    def export_coo(self, path):
        """Write ``row col value`` lines (0-based), upper triangle included."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# {self.description}\n# n={self.n} nnz={coo.nnz}\n")
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{r} {c} {v:.17g}\n")


def _finalize(K, w, grid, bc, description, h, meta=None):
    K = sp.csr_matrix(K)
    d = sp.diags(1.0 / np.sqrt(w))
    A = (d @ K @ d).tocsr()
    A = ((A + A.T) * 0.5).tocsr()
    A.sort_indices()
    A.eliminate_zeros()
    return DiscreteOperator(matrix=A, weights=np.asarray(w, dtype=float), grid=grid, bc=bc,
                            description=description, h=float(h), meta=dict(meta or {}))


# ----------------------------------------------------------------------------
# one-dimensional operators


def assemble_schrodinger_1d(a, b, n, potential=None, coeff=1.0, lo=Edge.DIRICHLET,
                            hi=Edge.DIRICHLET, description=None):
    """``-coeff d^2/dx^2 + potential(x)`` on ``(a, b)``.

    The grid has ``n`` interior nodes with spacing ``(b - a)/(n + 1)``.
    Dirichlet ends are eliminated; a Neumann end adds its boundary node with
    half weight, so Dirichlet and Neumann variants share one grid.
    """
    lo, hi = Edge.parse(lo), Edge.parse(hi)
    if not (np.isfinite(a) and np.isfinite(b) and b > a):
        raise ParameterError(f"need a finite interval with b > a, got ({a}, {b})")
    if n < 2:
        raise ParameterError("need at least two interior nodes")
    n_lo, n_hi = lo is Edge.NEUMANN, hi is Edge.NEUMANN
    d = (b - a) / (n + 1)
    x = a + d * np.arange(0 if n_lo else 1, n + 1 + (1 if n_hi else 0))
    n = x.size
    w = np.full(n, d)
    if n_lo:
        w[0] = 0.5 * d
    if n_hi:
        w[-1] = 0.5 * d
    c = coeff / d
    main = np.full(n, 2.0 * c)
    if n_lo:
        main[0] = c
    if n_hi:
        main[-1] = c
    if potential is not None:
        main = main + w * np.asarray(potential(x), dtype=float) * np.ones(n)
    K = sp.diags([np.full(n - 1, -c), main, np.full(n - 1, -c)], [-1, 0, 1])
    grid = GridInfo(chart="line", axes=(x,), spacings=(d,), extents=((a, b),))
    bc = BoundaryCondition(s_lo=lo, s_hi=hi, t_lo=lo, t_hi=hi)
    desc = description or f"-{coeff:g} d2/dx2 + V on ({a:g}, {b:g}), n={n}, {lo.value}/{hi.value}"
    return _finalize(K, w, grid, bc, desc, h=1.0)


def assemble_model_1d(T, n, bc_right=Edge.DIRICHLET, V_slice=None, coupling=1.0):
    """``-d^2/dt^2 + t + coupling * V_slice(t)`` on ``(0, T)``, Dirichlet at 0.

    Parameters
    ----------
    T : float
        Truncation length.
    n : int
        Number of interior nodes (at least 16); spacing ``T/(n + 1)``.
    bc_right : Edge or str
        Condition at ``t = T``.
    V_slice : callable, optional
        Perturbation ``t -> V(t)``.
    coupling : float
        Multiplier of ``V_slice`` (e.g. ``h^(alpha - 2/3)``).
    """
    if not (np.isfinite(T) and T > 0):
        raise ParameterError(f"truncation length must be positive, got {T}")
    if n < 16:
        raise ParameterError(f"need n >= 16 unknowns, got {n}")
    if V_slice is None:
        pot = lambda t: t
    else:
        pot = lambda t: t + coupling * np.asarray(V_slice(t), dtype=float)
    op = assemble_schrodinger_1d(0.0, T, n, pot, 1.0, Edge.DIRICHLET, bc_right,
                                 description=f"-d2/dt2 + t on (0, {T:g}), n={n}, "
                                             f"dirichlet/{Edge.parse(bc_right).value}")
    return op


def assemble_oscillator_1d(kappa0, S, n, bc=DIRICHLET, energy_window=None):
    """``-d^2/ds^2 + (kappa0/2) s^2`` on ``(-S, S)``.

    ``energy_window``, if given, must lie below the potential at ``+-S``.
    """
    if kappa0 <= 0:
        raise ParameterError("kappa0 must be positive")
    if not (np.isfinite(S) and S > 0):
        raise ParameterError("S must be positive")
    if energy_window is not None and 0.5 * kappa0 * S * S <= energy_window:
        raise ParameterError(
            f"(kappa0/2) S^2 = {0.5 * kappa0 * S * S:g} does not exceed the spectral window "
            f"{energy_window:g}; enlarge S")
    bc = BoundaryCondition.parse(bc)
    return assemble_schrodinger_1d(-S, S, n, lambda s: 0.5 * kappa0 * s * s, 1.0, bc.s_lo, bc.s_hi,
                                   description=f"-d2/ds2 + {kappa0:g}/2 s^2 on (-{S:g}, {S:g}), n={n}")


# ----------------------------------------------------------------------------
# test potentials


def _taper(x):
    """``exp(1 - 1/(1 - x^2))`` on ``|x| < 1``, zero outside: C-infinity, peak 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi * xi))
    return out


@dataclass(frozen=True)
class TestPotential:
    """Bounded potential on ``{t > 0}``, zero outside ``support``.

    ``support`` is ``(s_lo, s_hi, t_lo, t_hi)``.  Built-in kinds:

    ``zero``
        ``V = 0``.
    ``gaussian_bump``
        ``A exp(-((s-s_c)/w_s)^2 - ((t-t_c)/w_t)^2)`` multiplied by a
        C-infinity taper in each variable vanishing on the support edges.
        It is separable, ``V = A g(s) w(t)``.
    ``box``
        Constant ``A`` on the support box (bounded, not smooth; used where
        only boundedness matters).
    """

    __test__ = False  # not a pytest test class

    kind: str
    params: dict = field(default_factory=dict)
    support: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("zero", "gaussian_bump", "box"):
            raise ParameterError(f"unknown potential kind {self.kind!r}")
        sup = tuple(float(v) for v in self.support)
        if self.kind != "zero" and not (sup[0] < sup[1] and 0 <= sup[2] < sup[3]):
            raise ParameterError(f"support box {sup} must satisfy s_lo < s_hi and 0 <= t_lo < t_hi")
        object.__setattr__(self, "support", sup)

    # constructors ---------------------------------------------------------
    @classmethod
    def zero(cls):
        return cls("zero", {}, (0.0, 0.0, 0.0, 0.0))

    @classmethod
    def gaussian_bump(cls, amplitude=1.0, s_center=0.0, t_center=1.0, s_width=1.0, t_width=0.5,
                      support=None):
        if support is None:
            support = (s_center - 2.5 * s_width, s_center + 2.5 * s_width,
                       max(0.0, t_center - 2.5 * t_width), t_center + 2.5 * t_width)
        if min(s_width, t_width) <= 0:
            raise ParameterError("bump widths must be positive")
        return cls("gaussian_bump",
                   {"amplitude": float(amplitude), "s_center": float(s_center),
                    "t_center": float(t_center), "s_width": float(s_width),
                    "t_width": float(t_width)}, support)

    @classmethod
    def box(cls, value, support):
        return cls("box", {"amplitude": float(value)}, support)

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params), "support": list(self.support)}

    @classmethod
    def from_dict(cls, data):
        if data is None:
            return cls.zero()
        return cls(data.get("kind", "zero"), dict(data.get("params", {})),
                   tuple(data.get("support", (0.0, 0.0, 0.0, 0.0))))

    def scaled(self, factor):
        """The potential multiplied by ``factor``."""
        if self.kind == "zero":
            return self
        params = dict(self.params)
        params["amplitude"] = params["amplitude"] * float(factor)
        return TestPotential(self.kind, params, self.support)

    # evaluation -----------------------------------------------------------
    @property
    def is_zero(self):
        return self.kind == "zero" or self.params.get("amplitude", 0.0) == 0.0

    def s_factor(self, s):
        """``g(s)`` of the separable form ``V = A g(s) w(t)``."""
        s = np.asarray(s, dtype=float)
        lo, hi = self.support[0], self.support[1]
        if self.kind == "zero":
            return np.zeros_like(s)
        inside = ((s > lo) & (s < hi)).astype(float)
        if self.kind == "box":
            return inside
        p = self.params
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return np.exp(-((s - p["s_center"]) / p["s_width"]) ** 2) * _taper((s - mid) / half)

    def t_factor(self, t):
        """``w(t)`` of the separable form ``V = A g(s) w(t)``."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.support[2], self.support[3]
        if self.kind == "zero":
            return np.zeros_like(t)
        inside = ((t > lo) & (t < hi)).astype(float)
        if self.kind == "box":
            return inside
        p = self.params
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return np.exp(-((t - p["t_center"]) / p["t_width"]) ** 2) * _taper((t - mid) / half)

    @property
    def amplitude(self):
        return 0.0 if self.kind == "zero" else self.params["amplitude"]

    def __call__(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        if self.kind == "zero":
            return np.zeros(s.shape)
        return self.amplitude * self.s_factor(s) * self.t_factor(t)

    @cached_property
    def sup_norm(self):
        if self.is_zero:
            return 0.0
        s = np.linspace(self.support[0], self.support[1], 801)
        t = np.linspace(self.support[2], self.support[3], 801)
        peak_s = np.max(np.abs(self.s_factor(s)))
        peak_t = np.max(np.abs(self.t_factor(t)))
        if self.kind == "gaussian_bump":
            # refine near the sampled maxima (the product is separable)
            from scipy.optimize import minimize_scalar

            def peak(f, grid):
                i = int(np.argmax(np.abs(f(grid))))
                a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
                r = minimize_scalar(lambda x: -abs(float(f(np.array([x]))[0])), bounds=(a, b),
                                    method="bounded", options={"xatol": 1e-12})
                return max(-r.fun, float(np.max(np.abs(f(grid)))))

            peak_s, peak_t = peak(self.s_factor, s), peak(self.t_factor, t)
        return abs(self.amplitude) * peak_s * peak_t


@dataclass(frozen=True)
class RescaledPotential:
    """``V(s / scale_s, t / scale_t)`` on window coordinates.

    The operator adds ``amplitude * V_resc`` (``h^(2/3)`` in the first
    regime, ``h^alpha`` in the second).
    """

    base: TestPotential
    scale_s: float
    scale_t: float
    amplitude: float
    regime: str
    alpha: Optional[float] = None

    def __call__(self, s, t):
        return self.base(np.asarray(s) / self.scale_s, np.asarray(t) / self.scale_t)

    def energy(self, s, t):
        return self.amplitude * self(s, t)

    @property
    def support(self):
        s0, s1, t0, t1 = self.base.support
        return (s0 * self.scale_s, s1 * self.scale_s, t0 * self.scale_t, t1 * self.scale_t)

    @property
    def sup_norm(self):
        return self.base.sup_norm


def rescale_potential(V, h, regime="first", alpha=None):
    """Rescaled potential ``V_h`` (first regime) or ``V_{h,alpha}`` (second).

    First regime: ``V_h(tau(s,t)) = V(h^{-1/3} s, h^{-2/3} t)``, entering the
    operator as ``h^{2/3} V_h``.  Second regime:
    ``V_{h,alpha}(tau(s,t)) = V(h^{-alpha/2} s, h^{-2/3} t)``, entering as
    ``h^alpha V_{h,alpha}``.
    """
    if not h > 0:
        raise ParameterError("h must be positive")
    if regime == "first":
        return RescaledPotential(V, h ** (1 / 3), h ** (2 / 3), h ** (2 / 3), "first")
    if regime == "second":
        if alpha is None or not (2 / 3 < alpha < 1):
            raise ParameterError(f"alpha must lie in (2/3, 1) for the second regime, got {alpha}")
        return RescaledPotential(V, h ** (alpha / 2), h ** (2 / 3), h ** alpha, "second", float(alpha))
    raise ParameterError(f"unknown regime {regime!r}")


# ----------------------------------------------------------------------------
# curved window


@dataclass(frozen=True)
class WindowGrid:
    """Window ``(-s_half, s_half) x (0, t_max)`` with ``ns x nt`` cells."""

    s_half: float
    t_max: float
    ns: int
    nt: int

    @property
    def ds(self):
        return 2 * self.s_half / self.ns

    @property
    def dt(self):
        return self.t_max / self.nt


def window_grid(tmap, h, threshold=None, eta=DEFAULT_ETA, cover=None, resolution=1.0,
                margin=6.0):
    """Window extents and cell counts for the window operator.

    The window always contains ``(-h^{1/3-eta}, h^{1/3-eta}) x
    (0, h^{2/3-eta})``.  When ``threshold`` is given it is enlarged to
    hold every state below it with ``margin`` decay lengths to spare: in
    ``t`` up to the turning point ``threshold - x0`` plus ``margin h^{2/3}``,
    in ``s`` up to the harmonic turning point plus ``margin`` oscillator
    lengths ``(2 h^2 / kappa0)^{1/4}``.  ``cover`` (a support box) is
    included as well.  Extents are clipped to the chart's strip.

    Cells resolve the Airy length ``h^{2/3}`` (12 cells), the oscillator
    length (8 cells) and the local wavelength at the threshold (24 cells
    per wavelength), all divided by ``resolution``.
    """
    if not 0 < eta < 1 / 15:
        raise ParameterError(f"eta must lie in (0, 1/15), got {eta}")
    if not h > 0:
        raise ParameterError("h must be positive")
    kappa0 = tmap.kappa0 if tmap.kappa0 > 0 else 1.0
    s_nominal, t_nominal = h ** (1 / 3 - eta), h ** (2 / 3 - eta)
    if s_nominal >= tmap.s_half or t_nominal >= tmap.delta:
        raise ParameterError(
            f"window ({s_nominal:.3g}, {t_nominal:.3g}) exceeds the tubular strip "
            f"({tmap.s_half:.3g}, {tmap.delta:.3g}); use a smaller h")
    airy = h ** (2 / 3)
    osc = (2 * h * h / kappa0) ** 0.25
    S, T = s_nominal, t_nominal
    e_t = airy
    e_s = 0.5 * osc * osc * kappa0 * 0.5
    if threshold is not None:
        energy = threshold - tmap.x0
        e_t = max(energy, airy)
        e_s = max(energy - airy * airy_zero(1), e_s)
        T = max(T, max(energy, 0.0) + margin * airy)
        S = max(S, math.sqrt(2 * max(energy - airy * airy_zero(1), 0.0) / kappa0) + margin * osc)
    if cover is not None:
        s0, s1, _, t1 = cover
        S = max(S, abs(s0), abs(s1))
        T = max(T, t1)
    S = min(S, tmap.s_half)
    T = min(T, tmap.delta)
    dt = min(airy / 12, 2 * math.pi * h / math.sqrt(e_t) / 24) / resolution
    ds = min(osc / 8, 2 * math.pi * h / math.sqrt(e_s) / 24) / resolution
    return WindowGrid(float(S), float(T), max(8, int(math.ceil(2 * S / ds))), max(8, int(math.ceil(T / dt))))


def assemble_window_2d(tmap, h, eta=DEFAULT_ETA, bc=DIRICHLET, V_resc=None, use_exact_tau1=True,
                       *, threshold=None, grid=None, resolution=1.0, alpha=None, cover=None,
                       max_unknowns=DEFAULT_MAX_UNKNOWNS):
    """Discretise the quadratic form of ``-h^2 Delta + x1`` on a tubular window.

    The form is ``h^2 (m^{-1} |d_s psi|^2 + m |d_t psi|^2) + tau1 m |psi|^2``
    integrated over ``ds dt``.  With ``use_exact_tau1=False`` the potential
    is replaced by ``x0 + t + kappa0 s^2 / 2`` and the metric by ``m = 1``
    (the separable model).  ``V_resc`` adds ``amplitude * V_resc``.

    Parameters
    ----------
    tmap : TubularMap
    h : float
    eta : float
        Window exponent in ``(0, 1/15)``; in the second regime also
        ``eta < (1 - alpha)/5``.
    bc : BoundaryCondition or str
        ``"dirichlet"`` or ``"mixed"`` (or any per-edge tagging).
    V_resc : RescaledPotential, optional
    use_exact_tau1 : bool
    threshold : float, optional
        Energy the window must resolve (see :func:`window_grid`).
    grid : WindowGrid, optional
        Explicit grid; overrides the automatic choice.
    resolution : float
        Refinement factor for the automatic grid.
    alpha : float, optional
        Second-regime exponent, used to validate ``eta``.
    cover : tuple, optional
        Box ``(s_lo, s_hi, t_lo, t_hi)`` the automatic window must contain.
    """
    bc = BoundaryCondition.parse(bc)
    if alpha is None and V_resc is not None and V_resc.regime == "second":
        alpha = V_resc.alpha
    if alpha is not None and not eta < (1 - alpha) / 5:
        raise ParameterError(f"eta={eta:g} must be below (1 - alpha)/5 = {(1 - alpha) / 5:g}")
    if grid is None:
        if V_resc is not None and not V_resc.base.is_zero:
            box = V_resc.support
            cover = box if cover is None else (min(box[0], cover[0]), max(box[1], cover[1]),
                                               0.0, max(box[3], cover[3]))
        grid = window_grid(tmap, h, threshold=threshold, eta=eta, cover=cover,
                           resolution=resolution)
    else:
        if not 0 < eta < 1 / 15:
            raise ParameterError(f"eta must lie in (0, 1/15), got {eta}")
        if grid.s_half > tmap.s_half or grid.t_max > tmap.delta:
            raise ParameterError("window exceeds the tubular strip")
    ns, nt = grid.ns, grid.nt
    if ns * nt > max_unknowns:
        raise CapacityError(f"window grid {ns}x{nt} exceeds the cap of {max_unknowns} unknowns")
    ds, dt = grid.ds, grid.dt
    s_c = -grid.s_half + ds * (np.arange(ns) + 0.5)
    t_c = dt * (np.arange(nt) + 0.5)
    s_f = -grid.s_half + ds * np.arange(ns + 1)
    t_f = dt * np.arange(nt + 1)

    if use_exact_tau1:
        tau1_c, m_c = tmap.fields(s_c[:, None], t_c[None, :])
        kap_c = tmap.curve.kappa(s_c)
        kap_f = tmap.curve.kappa(s_f)
        m_sface = 1.0 - kap_f[:, None] * t_c[None, :]          # (ns+1, nt)
        m_tface = 1.0 - kap_c[:, None] * t_f[None, :]          # (ns, nt+1)
    else:
        tau1_c = tmap.x0 + t_c[None, :] + 0.5 * tmap.kappa0 * s_c[:, None] ** 2
        m_c = np.ones((ns, nt))
        m_sface = np.ones((ns + 1, nt))
        m_tface = np.ones((ns, nt + 1))
    if np.min(m_c) <= 0 or np.min(m_sface) <= 0 or np.min(m_tface) <= 0:
        raise ParameterError("Jacobian m is not positive on the window")
    pot = np.array(tau1_c, dtype=float)
    if V_resc is not None:
        pot = pot + V_resc.energy(s_c[:, None], t_c[None, :])

    h2 = h * h
    cs = h2 * dt / ds / m_sface      # s-face conductances
    ct = h2 * ds / dt * m_tface      # t-face conductances
    # boundary faces: ghost at half spacing doubles the conductance
    bs_lo = 2 * cs[0] if bc.s_lo is Edge.DIRICHLET else np.zeros(nt)
    bs_hi = 2 * cs[-1] if bc.s_hi is Edge.DIRICHLET else np.zeros(nt)
    bt_lo = 2 * ct[:, 0] if bc.t_lo is Edge.DIRICHLET else np.zeros(ns)
    bt_hi = 2 * ct[:, -1] if bc.t_hi is Edge.DIRICHLET else np.zeros(ns)

    idx = np.arange(ns * nt).reshape(ns, nt)
    w = (m_c * ds * dt).ravel()
    diag = np.zeros((ns, nt))
    cs_in = cs[1:-1]                 # (ns-1, nt)
    ct_in = ct[:, 1:-1]              # (ns, nt-1)
    diag[:-1] += cs_in
    diag[1:] += cs_in
    diag[:, :-1] += ct_in
    diag[:, 1:] += ct_in
    diag[0] += bs_lo
    diag[-1] += bs_hi
    diag[:, 0] += bt_lo
    diag[:, -1] += bt_hi
    diag += pot * m_c * ds * dt
    rows = np.concatenate([idx.ravel(), idx[:-1].ravel(), idx[1:].ravel(),
                           idx[:, :-1].ravel(), idx[:, 1:].ravel()])
    cols = np.concatenate([idx.ravel(), idx[1:].ravel(), idx[:-1].ravel(),
                           idx[:, 1:].ravel(), idx[:, :-1].ravel()])
    vals = np.concatenate([diag.ravel(), -cs_in.ravel(), -cs_in.ravel(),
                           -ct_in.ravel(), -ct_in.ravel()])
    K = sp.csr_matrix((vals, (rows, cols)), shape=(ns * nt, ns * nt))
    info = GridInfo(chart="window", axes=(s_c, t_c), spacings=(ds, dt),
                    extents=((-grid.s_half, grid.s_half), (0.0, grid.t_max)), tubular=tmap)
    desc = (f"window operator h={h:g}, {bc.label}, {'exact tau1' if use_exact_tau1 else 'model'}, "
            f"{ns}x{nt} cells on (-{grid.s_half:.4g},{grid.s_half:.4g})x(0,{grid.t_max:.4g})")
    meta = {"grid": grid, "eta": eta, "exact_tau1": bool(use_exact_tau1),
            "potential": None if V_resc is None else V_resc.regime}
    return _finalize(K, w, info, bc, desc, h, meta)


# ----------------------------------------------------------------------------
# full domain


@dataclass(frozen=True)
class FullMesh:
    """Cartesian node spacing and the truncation box ``x1 < x_cut``, ``|x2 - X0_2| < y_half``."""

    dx: float
    dy: float
    x_cut: float = np.inf
    y_half: float = np.inf


def default_truncation(curve, h, threshold, margin=8.0):
    """Truncation box holding every state below ``threshold`` near ``X0``.

    The box extends ``margin`` Airy lengths beyond the turning line
    ``x1 = threshold`` and ``margin`` oscillator lengths beyond the
    tangential turning points.
    """
    airy = h ** (2 / 3)
    osc = (2 * h * h / curve.kappa0) ** 0.25
    energy = max(threshold - curve.x0, airy)
    x_cut = curve.x0 + energy + margin * airy
    y_half = math.sqrt(2 * energy / curve.kappa0) * 1.2 + margin * osc
    return x_cut, y_half


def full_mesh(curve, h, threshold=None, resolution=1.0, truncate=True):
    """Default anisotropic mesh for :func:`assemble_full_2d`.

    Spacing in ``x1`` resolves the Airy length near ``X0``; spacing in
    ``x2`` resolves the tangential oscillator length and wavelength.
    """
    airy = h ** (2 / 3)
    osc = (2 * h * h / curve.kappa0) ** 0.25
    energy = airy if threshold is None else max(threshold - curve.x0, airy)
    dx = min(airy / 12, 2 * math.pi * h / math.sqrt(energy) / 24) / resolution
    e_s = max(energy - airy * airy_zero(1), 0.25 * curve.kappa0 * osc * osc)
    dy = min(osc / 8, 2 * math.pi * h / math.sqrt(e_s) / 24) / resolution
    if truncate and threshold is not None:
        x_cut, y_half = default_truncation(curve, h, threshold)
    else:
        x_cut, y_half = np.inf, np.inf
    return FullMesh(dx=dx, dy=dy, x_cut=x_cut, y_half=y_half)


def _full_level_set(spec, x0y, mesh):
    y0 = x0y[1]

    def phi(x, y):
        val = domain_level_set(spec, x, y)
        if np.isfinite(mesh.x_cut):
            val = np.maximum(val, x - mesh.x_cut)
        if np.isfinite(mesh.y_half):
            val = np.maximum(val, np.abs(y - y0) - mesh.y_half)
        return val

    return phi


def assemble_full_2d(spec, h, mesh=None, *, threshold=None, resolution=1.0,
                     max_unknowns=DEFAULT_MAX_UNKNOWNS, curve=None, theta_min=1e-4):
    """``-h^2 Delta + x1`` on the domain with Dirichlet conditions.

    Nodes of a Cartesian grid inside the domain (optionally intersected
    with a truncation box, also Dirichlet) are the unknowns.  A grid link
    crossing the boundary at fraction ``theta`` of its length contributes
    ``h^2 / (theta d^2)`` to the diagonal (symmetric cut-cell closure).

    Parameters
    ----------
    spec : DomainSpec
    h : float
    mesh : FullMesh, optional
        Defaults to :func:`full_mesh` at ``threshold``.
    threshold : float, optional
        Energy the truncated mesh must hold.

    Warns
    -----
    ResolutionWarning
        If the grid spacing in ``x1`` exceeds a quarter of ``h^{2/3}``.
    """
    if not h > 0:
        raise ParameterError("h must be positive")
    curve = curve or build_domain(spec)
    if mesh is None:
        mesh = full_mesh(curve, h, threshold=threshold, resolution=resolution)
    if mesh.dx > 0.25 * h ** (2 / 3) or mesh.dy > 0.25 * h ** (2 / 3) * 4:
        warnings.warn(f"grid spacing ({mesh.dx:.3g}, {mesh.dy:.3g}) does not resolve the boundary "
                      f"layer h^(2/3) = {h ** (2 / 3):.3g}", ResolutionWarning, stacklevel=2)
    # bounding box of the (truncated) domain
    ss = np.linspace(-0.5 * curve.length, 0.5 * curve.length, 4001)
    g = curve.gamma(ss)
    X0 = curve.X0
    xlo, xhi = float(np.min(g[0])), float(np.max(g[0]))
    ylo, yhi = float(np.min(g[1])), float(np.max(g[1]))
    xhi = min(xhi, mesh.x_cut)
    ylo, yhi = max(ylo, X0[1] - mesh.y_half), min(yhi, X0[1] + mesh.y_half)
    # grid aligned so that X0 sits half a cell outside the first column
    nx = int(math.floor((xhi - xlo) / mesh.dx)) + 2
    ny_lo = int(math.ceil((X0[1] - ylo) / mesh.dy)) + 1
    ny_hi = int(math.ceil((yhi - X0[1]) / mesh.dy)) + 1
    x = xlo - 0.5 * mesh.dx + mesh.dx * np.arange(nx + 1)
    y = X0[1] + mesh.dy * np.arange(-ny_lo, ny_hi + 1)
    phi = _full_level_set(spec, X0, mesh)
    X, Y = np.meshgrid(x, y, indexing="ij")
    inside = phi(X, Y) < 0
    n = int(inside.sum())
    if n > max_unknowns:
        raise CapacityError(f"full-domain grid has {n} unknowns, above the cap of {max_unknowns}")
    if n == 0:
        raise ParameterError("no grid nodes inside the domain; refine the mesh")
    number = -np.ones(inside.shape, dtype=np.int64)
    number[inside] = np.arange(n)
    h2 = h * h
    diag = np.zeros(n)
    rows, cols, vals = [], [], []

    for axis, d in ((0, mesh.dx), (1, mesh.dy)):
        c = h2 / (d * d)
        for shift in (1, -1):
            nb = np.roll(number, -shift, axis=axis)
            nb_inside = np.roll(inside, -shift, axis=axis)
            # links that wrap around the array are treated as leaving the domain
            edge = [slice(None), slice(None)]
            edge[axis] = slice(-1, None) if shift == 1 else slice(0, 1)
            nb_inside = nb_inside.copy()
            nb_inside[tuple(edge)] = False
            both = inside & nb_inside
            diag[number[both]] += c
            rows.append(number[both])
            cols.append(nb[both])
            vals.append(np.full(int(both.sum()), -c))
            cut = inside & ~nb_inside
            if cut.any():
                px, py = X[cut], Y[cut]
                qx = px + (shift * d if axis == 0 else 0.0)
                qy = py + (shift * d if axis == 1 else 0.0)
                lo = np.zeros(px.size)
                hi = np.ones(px.size)
                for _ in range(48):
                    mid = 0.5 * (lo + hi)
                    val = phi(px + mid * (qx - px), py + mid * (qy - py))
                    out = val >= 0
                    hi = np.where(out, mid, hi)
                    lo = np.where(out, lo, mid)
                theta = np.maximum(0.5 * (lo + hi), theta_min)
                np.add.at(diag, number[cut], c / theta)
    diag += X[inside]
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    w = np.full(n, mesh.dx * mesh.dy)
    # K = W^{1/2} A W^{1/2}; the node form is c * d_x d_y per link, so build A directly
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    A = ((A + A.T) * 0.5).tocsr()
    A.sort_indices()
    ij = np.argwhere(inside)
    info = GridInfo(chart="cartesian", axes=(x, y), spacings=(mesh.dx, mesh.dy),
                    extents=((float(x[0]), float(x[-1])), (float(y[0]), float(y[-1]))), index=ij)
    desc = (f"full-domain operator on {spec.kind} h={h:g}, {n} nodes, dx={mesh.dx:.3g}, "
            f"dy={mesh.dy:.3g}, box x1<{mesh.x_cut:.4g} |x2|<{mesh.y_half:.4g}")
    return DiscreteOperator(matrix=A, weights=w, grid=info, bc=DIRICHLET, description=desc, h=float(h),
                            meta={"mesh": mesh, "x0": curve.x0})
