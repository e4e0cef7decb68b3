"""
Certified eigenvalues below a threshold, counting functions, Riesz means and
spectral-projector densities.

Completeness rests on Sylvester's law of inertia: the number of eigenvalues
of ``A`` below ``sigma`` equals the number of negative pivots of a
symmetric ``L D L^T`` factorisation of ``A - sigma I``.  The factorisation
is SuperLU with a symmetric fill-reducing ordering and diagonal pivoting
only, so that its ``U`` diagonal is ``D``.  Eigenpairs come from
shift-invert Lanczos (ARPACK) anchored below the spectrum; the number of
converged values below the threshold must equal the inertia count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (CapacityError, CoverageError, IntegrityError, ParameterError, SolverError)
from .operators import DiscreteOperator, TestPotential, rescale_potential

__all__ = [
    "Spectrum",
    "CountResult",
    "DensityField",
    "PairingResult",
    "inertia",
    "eigs_below",
    "count_below",
    "riesz_mean",
    "riesz_from_counts",
    "projector_density",
    "pair_density",
    "tail_refined_vector",
    "DEFAULT_MAX_STATES",
]

DEFAULT_MAX_STATES = 4000
_DENSE_LIMIT = 600


def _as_matrix(op):
    if isinstance(op, DiscreteOperator):
        return op.matrix
    if sp.issparse(op):
        return sp.csr_matrix(op)
    return np.asarray(op, dtype=float)


def _factor_inertia(A, sigma):
    n = A.shape[0]
    M = (A - sigma * sp.identity(n, format="csc")).tocsc()
    lu = spla.splu(M, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                   options=dict(SymmetricMode=True))
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise SolverError("factorisation used off-diagonal pivots; inertia unavailable")
    d = lu.U.diagonal()
    if np.any(d == 0) or not np.all(np.isfinite(d)):
        raise SolverError("zero pivot in the shifted factorisation")
    return int(np.count_nonzero(d < 0))


def inertia(op, sigma):
    """Number of eigenvalues strictly below ``sigma``.

    A shift landing on an eigenvalue is nudged upward by a few ulps (then
    downward) until the factorisation succeeds; persistent breakdown raises
    :class:`SolverError`.
    """
    A = _as_matrix(op)
    if not np.isfinite(sigma):
        raise ParameterError("threshold must be finite")
    if not sp.issparse(A) or A.shape[0] <= _DENSE_LIMIT:
        dense = A.toarray() if sp.issparse(A) else A
        return int(np.count_nonzero(la.eigvalsh(dense) < sigma))
    scale = max(abs(sigma), 1.0)
    last = None
    for k, nudge in enumerate((0.0, -1e-14, 1e-14, -1e-12, 1e-12, -1e-10)):
        try:
            return _factor_inertia(A, sigma + nudge * scale)
        except (RuntimeError, SolverError) as exc:
            last = exc
    raise SolverError(f"inertia at shift {sigma:g} failed: {last}")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues below ``threshold`` in ascending order.

    ``eigenvectors`` (columns, Euclidean unit norm for the symmetric matrix)
    are present when requested; ``certificate`` is the inertia count that
    certifies completeness.
    """

    eigenvalues: np.ndarray
    threshold: float
    residual_bound: float
    certificate: int
    eigenvectors: Optional[np.ndarray] = None
    operator: Optional[DiscreteOperator] = field(default=None, repr=False)

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def complete(self):
        return self.certificate == len(self.eigenvalues)


@dataclass(frozen=True)
class CountResult:
    """``N(threshold)`` with the bracket ``[N(threshold - tol), N(threshold + tol)]``."""

    count: int
    lower: int
    upper: int
    threshold: float = float("nan")
    tol: float = 0.0

    @property
    def ambiguous(self):
        return self.lower != self.upper


def _sign_fix(V):
    if V is None or V.size == 0:
        return V
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        big = np.max(np.abs(col))
        first = int(np.argmax(np.abs(col) > 1e-8 * big))
        if col[first] < 0:
            V[:, j] = -col
    return V


def eigs_below(op, threshold, tol=1e-9, want_vectors=False, max_states=DEFAULT_MAX_STATES):
    """All eigenvalues of ``op`` below ``threshold``.

    Parameters
    ----------
    op : DiscreteOperator or symmetric matrix
    threshold : float
    tol : float
        Required accuracy of each eigenvalue.
    want_vectors : bool
    max_states : int
        Cap on the number of states; exceeding it raises
        :class:`CapacityError`.

    Returns
    -------
    Spectrum
    """
    if not np.isfinite(threshold):
        raise ParameterError("threshold must be finite")
    A = _as_matrix(op)
    n = A.shape[0]
    count = inertia(A, threshold)
    if count > max_states:
        raise CapacityError(f"{count} states below the threshold exceed the cap of {max_states}")
    owner = op if isinstance(op, DiscreteOperator) else None
    if count == 0:
        vecs = np.zeros((n, 0)) if want_vectors else None
        return Spectrum(np.zeros(0), float(threshold), 0.0, 0, vecs, owner)

    if not sp.issparse(A) or n <= _DENSE_LIMIT or count + 1 >= n // 3:
        dense = A.toarray() if sp.issparse(A) else A
        if want_vectors:
            vals, vecs = la.eigh(dense)
        else:
            vals, vecs = la.eigvalsh(dense), None
        keep = vals < threshold
        vals = vals[keep]
        vecs = vecs[:, keep] if vecs is not None else None
    else:
        vals, vecs = _lanczos_lowest(A, count, tol)
        keep = vals < threshold
        if int(keep.sum()) != count:
            # eigenvalues on the threshold within roundoff: trust the inertia
            order = np.argsort(vals)
            keep = np.zeros(vals.shape, dtype=bool)
            keep[order[:count]] = True
            if np.any(vals[keep] >= threshold + max(tol, 1e-10 * max(1.0, abs(threshold)))):
                raise IntegrityError(
                    f"Lanczos found {int((vals < threshold).sum())} values below the threshold, "
                    f"inertia certifies {count}")
        vals = vals[keep]
        vecs = vecs[:, keep]
        if not want_vectors:
            vecs = None
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    if vecs is not None:
        vecs = _sign_fix(vecs[:, order])
        res = np.linalg.norm(A @ vecs - vecs * vals, axis=0)
        bound = float(max(np.max(res), np.finfo(float).eps))
    else:
        bound = float(tol)
    if len(vals) != count:
        raise IntegrityError(f"reported {len(vals)} eigenvalues, inertia certifies {count}")
    return Spectrum(vals, float(threshold), bound, count, vecs, owner)


def _lanczos_lowest(A, count, tol):
    """Lowest ``count + 1`` eigenpairs by shift-invert Lanczos below the spectrum."""
    n = A.shape[0]
    diag = A.diagonal()
    radius = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    lower = float(np.min(diag - radius))
    upper = float(np.max(diag + radius))
    sigma = lower - 1e-3 * max(upper - lower, 1e-300)
    k = min(count + 1, n - 2)
    v0 = np.ones(n) / math.sqrt(n)
    ncv = min(n - 1, max(2 * k + 1, k + 32))
    try:
        vals, vecs = spla.eigsh(A.tocsc(), k=k, sigma=sigma, which="LM", v0=v0, ncv=ncv,
                                tol=min(tol, 1e-12), maxiter=max(1000, 20 * n))
    except spla.ArpackNoConvergence as exc:
        raise SolverError(f"Lanczos did not converge: {exc}") from None
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def count_below(op, threshold, tol=1e-9):
    """Counting function ``N(threshold)`` with its tolerance bracket."""
    if tol < 0:
        raise ParameterError("tol must be nonnegative")
    A = _as_matrix(op)
    c = inertia(A, threshold)
    if tol == 0:
        return CountResult(c, c, c, float(threshold), 0.0)
    lo = inertia(A, threshold - tol)
    hi = inertia(A, threshold + tol)
    return CountResult(c, min(lo, c), max(hi, c), float(threshold), float(tol))


def riesz_mean(spec, threshold, gamma):
    """``sum_k (threshold - lambda_k)_+^gamma``; ``gamma = 0`` is the count."""
    if gamma < 0:
        raise ParameterError("gamma must be nonnegative")
    if not spec.complete or threshold > spec.threshold:
        raise IntegrityError(
            f"spectrum is certified below {spec.threshold:g} only; cannot evaluate at {threshold:g}")
    vals = spec.eigenvalues[spec.eigenvalues < threshold]
    if gamma == 0:
        return float(len(vals))
    return float(np.sum((threshold - vals) ** gamma))


def riesz_from_counts(eigenvalues, threshold, lower):
    """``int_{lower}^{threshold} N(lambda) d lambda`` summed piecewise exactly.

    ``N`` is a step function, so the integral is the sum of the step
    lengths; with ``lower`` below the spectrum it equals the first Riesz
    mean.
    """
    ev = np.sort(np.asarray(eigenvalues))
    ev = ev[(ev < threshold)]
    if ev.size and ev[0] < lower:
        raise ParameterError("lower limit must lie below the spectrum")
    breaks = np.concatenate([ev, [threshold]])
    counts = np.arange(1, breaks.size)
    return float(np.sum(counts * np.diff(breaks)))


@dataclass(frozen=True, eq=False)
class DensityField:
    """Gridded density ``rho = sum_k |psi_k|^2`` (per unit physical area or length)."""

    chart: str
    grid: object
    values: np.ndarray
    weights: np.ndarray
    count: int
    h: float = 1.0
    scaling: dict = field(default_factory=dict)

    def integral(self):
        return float(np.sum(self.values * self.weights))

    def as_grid(self):
        """Values reshaped to the window grid ``(ns, nt)`` (window chart only)."""
        if self.chart == "window":
            return self.values.reshape(self.grid.shape)
        if self.chart == "line":
            return self.values
        raise ParameterError("cartesian densities are stored per node; use grid.index")


def projector_density(spec, threshold=None):
    """Density of the spectral projector onto eigenvalues below ``threshold``."""
    if spec.eigenvectors is None or spec.operator is None:
        raise IntegrityError("projector density needs eigenvectors and their operator")
    threshold = spec.threshold if threshold is None else threshold
    if threshold > spec.threshold:
        raise IntegrityError("threshold above the certified range of the spectrum")
    keep = spec.eigenvalues < threshold
    op = spec.operator
    V = spec.eigenvectors[:, keep]
    rho = np.sum(V * V, axis=1) / op.weights
    return DensityField(chart=op.grid.chart, grid=op.grid, values=rho, weights=op.weights,
                        count=int(keep.sum()), h=op.h)


@dataclass(frozen=True)
class PairingResult:
    """``raw = int V_h rho dx`` and ``normalized = factor * raw``.

    ``factor`` is ``h^{1/3}`` (first regime) or ``h^{1-alpha}`` (second),
    the pairing counterpart of the density normalisation ``h^{density_power}``.
    """

    raw: float
    normalized: float
    factor: float
    density_power: float
    regime: str


def pair_density(rho, V, regime="first", h=None, alpha=None):
    """Pair a window-chart density with the rescaled test potential."""
    h = rho.h if h is None else h
    if rho.chart != "window":
        raise CoverageError("pairing requires a density in the tubular window chart")
    if regime == "first":
        factor, power = h ** (1 / 3), 4 / 3
    elif regime == "second":
        if alpha is None or not 2 / 3 < alpha < 1:
            raise ParameterError("second regime needs alpha in (2/3, 1)")
        factor, power = h ** (1 - alpha), 5 / 3 - alpha / 2
    else:
        raise ParameterError(f"unknown regime {regime!r}")
    if isinstance(V, TestPotential) and V.is_zero:
        return PairingResult(0.0, 0.0, factor, power, regime)
    Vr = rescale_potential(V, h, regime, alpha)
    (s_lo, s_hi), (t_lo, t_hi) = rho.grid.extents
    a0, a1, b0, b1 = Vr.support
    if a0 < s_lo - 1e-12 or a1 > s_hi + 1e-12 or b1 > t_hi + 1e-12:
        raise CoverageError(
            f"rescaled support ({a0:.4g},{a1:.4g})x({b0:.4g},{b1:.4g}) leaves the window "
            f"({s_lo:.4g},{s_hi:.4g})x({t_lo:.4g},{t_hi:.4g})")
    coords = rho.grid.coordinates()
    raw = float(np.sum(Vr(coords[0], coords[1]) * rho.values * rho.weights))
    return PairingResult(raw, factor * raw, factor, power, regime)


def tail_refined_vector(op, value, vector, match=None):
    """Eigenvector of a tridiagonal operator with its decaying tail rebuilt.

    Beyond the index ``match`` (default: where ``|vector|`` first drops below
    ``1e-6`` of its peak past the peak) the components are regenerated from
    the backward ratio recurrence of ``(A - value) v = 0``, which is stable
    for the recessive solution and avoids the roundoff floor of iterative
    eigenvectors.
    """
    A = sp.csr_matrix(_as_matrix(op))
    n = A.shape[0]
    d = A.diagonal() - value
    e = A.diagonal(1)
    v = np.array(vector, dtype=float)
    if match is None:
        peak = int(np.argmax(np.abs(v)))
        small = np.nonzero(np.abs(v[peak:]) < 1e-6 * np.abs(v[peak]))[0]
        if small.size == 0:
            return v
        match = peak + int(small[0])
    if match >= n - 1:
        return v
    ratio = np.empty(n)
    ratio[n - 1] = -e[n - 2] / d[n - 1]
    for i in range(n - 2, match, -1):
        ratio[i] = -e[i - 1] / (d[i] + e[i] * ratio[i + 1])
    for i in range(match + 1, n):
        v[i] = v[i - 1] * ratio[i]
    return v
