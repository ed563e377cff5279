"""Local discrepancy and (weighted) L_p discrepancies of point sets."""

from __future__ import annotations

import math

import numpy as np

from ._cells import QuadratureBudgetError, cell_integral, cell_sup, refine_root, root_error
from .core import PointSet, PStar, Weights, project

DEFAULT_TOL = 1e-10


def local_discrepancy(P: PointSet, t) -> float:
    """Fraction of points in the box ``[0, t)`` minus its volume."""
    t = np.asarray(t, dtype=float).reshape(-1)
    if t.size != P.d:
        raise ValueError(f"t has {t.size} coordinates, point set has d={P.d}")
    inside = np.all(P.points < t, axis=1)
    return float(inside.mean() - np.prod(t))


def l2_discrepancy(P: PointSet, block: int = 512) -> float:
    """Exact L_2 discrepancy via the Warnock double sum, O(n^2 d)."""
    X = P.points
    n, d = X.shape
    one = np.prod((1.0 - X**2) / 2.0, axis=1).sum()
    two = 0.0
    for s in range(0, n, block):
        Xb = X[s : s + block]
        prod = np.ones((Xb.shape[0], n))
        for i in range(d):
            prod *= 1.0 - np.maximum(Xb[:, i][:, None], X[:, i][None, :])
        two += prod.sum()
    sq = 3.0**-d - 2.0 / n * one + two / n**2
    return math.sqrt(max(sq, 0.0))


def linf_discrepancy(P: PointSet) -> float:
    """Exact sup of ``|local_discrepancy|`` over ``[0, 1]^d``.

    On every grid cell the count is constant and the volume is monotone, so the
    sup is reached in the limit at a cell corner: the lower corner with the
    closed count or the upper corner with the open count.
    """
    return cell_sup(P.points, "disc")


def lp_discrepancy(P: PointSet, pstar, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """``(L_p* discrepancy, certified absolute error)``.

    ``p* = 2`` uses the Warnock sum and one-dimensional sets are integrated
    exactly.  In higher dimension the last
    axis of each cell is integrated exactly and the rest by adaptive
    Gauss-Legendre; raises ``QuadratureBudgetError`` if that fails.
    """
    ps = PStar.parse(pstar)
    if ps.is_inf:
        return linf_discrepancy(P), 0.0
    if ps.value == 2.0:
        return l2_discrepancy(P), 0.0
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = ps.value

    def run(t):
        r = cell_integral(P.points, "disc", p, t)
        return r.value, r.error

    try:
        value, _, rerr = refine_root(run, p, tol)
    except QuadratureBudgetError as exc:
        raise QuadratureBudgetError(
            str(exc),
            partial_value=max(exc.partial_value, 0.0) ** (1 / p),
            partial_bound=root_error(max(exc.partial_value, 0.0), exc.partial_bound, p),
        ) from exc
    return max(value, 0.0) ** (1.0 / p), rerr


def weighted_lp_discrepancy(
    P: PointSet, w: Weights, pstar, tol: float = DEFAULT_TOL
) -> tuple[float, float]:
    """Weighted discrepancy over all nonempty positive-weight projections.

    The tolerance on the ``p*``-th power is shared out in proportion to
    ``gamma_u^p*``, i.e. every projection integral gets the same absolute
    tolerance.
    """
    if w.d != P.d:
        raise ValueError(f"weights are for d={w.d}, point set has d={P.d}")
    ps = PStar.parse(pstar)
    active = w.active()
    if not active:
        return 0.0, 0.0
    if ps.is_inf:
        return max(w[u] * linf_discrepancy(project(P, u)) for u in active), 0.0
    p = ps.value
    if p == 2.0:
        return math.sqrt(sum((w[u] * l2_discrepancy(project(P, u))) ** 2 for u in active)), 0.0
    gp = {u: w[u] ** p for u in active}
    norm = sum(gp.values())

    def run(t):
        total = err = 0.0
        for u in active:
            r = cell_integral(project(P, u).points, "disc", p, t / norm)
            total += gp[u] * r.value
            err += gp[u] * r.error
        return total, err

    value, _, rerr = refine_root(run, p, tol)
    return max(value, 0.0) ** (1.0 / p), rerr


def anchored_wce(P: PointSet, w: Weights, pstar, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Worst-case error in the space anchored at 0: weighted discrepancy of
    the reflected set ``{1 - x}``."""
    return weighted_lp_discrepancy(P.reflect(), w, pstar, tol)
