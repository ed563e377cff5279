"""Worst-case error of QMC rules in weighted ANOVA spaces of regularity one.

For a node set ``P`` and weights ``gamma`` the error is

    (1/n) [ sum_{u nonempty, gamma_u > 0} gamma_u^p* int |S_u(t)|^p* dt ]^(1/p*)

with ``S_u(t) = sum_j prod_{l in u} K(x_{j,l}, t_l)`` and ``K(x, t) = t - 1[x < t]``;
for ``p* = inf`` the bracket becomes a max of ``gamma_u sup |S_u|``.
"""

from __future__ import annotations

import math

import numpy as np

from ._cells import QuadratureBudgetError, cell_integral, cell_sup, refine_root
from .core import ErrorReport, PointSet, PStar, SubsetId, Weights, project, submasks
from .discrepancy import DEFAULT_TOL, local_discrepancy


def kernel(x: float, t: float) -> float:
    """``t`` if ``x >= t`` else ``t - 1``."""
    return t if x >= t else t - 1.0


def kernel_sum(P: PointSet, u: int, t_u) -> float:
    """``sum_j prod_{l in u} K(x_{j,l}, t_l)`` evaluated directly."""
    u = SubsetId(u)
    if u == 0:
        raise ValueError("u must be nonempty")
    t_u = np.asarray(t_u, dtype=float).reshape(-1)
    X = P.points[:, list(u.axes())]
    if t_u.size != X.shape[1]:
        raise ValueError(f"t_u needs {X.shape[1]} coordinates")
    K = np.where(X >= t_u, t_u, t_u - 1.0)
    return float(np.prod(K, axis=1).sum())


def kernel_sum_via_discrepancy(P: PointSet, u: int, t_u) -> float:
    """The same sum rebuilt from local discrepancies of the projections:

        n * sum_{nonempty v in u} (-1)^|v| Delta_{P_v}(t_v) prod_{i in u \\ v} t_i
    """
    u = SubsetId(u)
    if u == 0:
        raise ValueError("u must be nonempty")
    t_u = np.asarray(t_u, dtype=float).reshape(-1)
    axes = u.axes()
    if t_u.size != len(axes):
        raise ValueError(f"t_u needs {len(axes)} coordinates")
    tmap = dict(zip(axes, t_u))
    total = 0.0
    for v in submasks(u):
        vax = v.axes()
        delta = local_discrepancy(project(P, v), [tmap[a] for a in vax])
        rest = math.prod(tmap[a] for a in axes if a not in vax)
        total += (-1) ** len(v) * delta * rest
    return P.n * total


def kappa2(x, y):
    """``int_0^1 K(x,t) K(y,t) dt = 1/3 - (1-x^2)/2 - (1-y^2)/2 + 1 - max(x,y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 1.0 / 3.0 - (1.0 - x**2) / 2.0 - (1.0 - y**2) / 2.0 + 1.0 - np.maximum(x, y)


def _l2_terms(P: PointSet, subsets: list[SubsetId], block: int = 512) -> dict[SubsetId, float]:
    """``int |S_u / n|^2`` for each subset via the double sum of kappa2 products.

    Works with ``6 kappa2 = 2 - 6 max(x,y) + 3x^2 + 3y^2``, which is exact on
    dyadic inputs; a rounded 1/3 would bias every one of the n^2 entries the
    same way.
    """
    X = P.points
    n, d = X.shape
    sums = {u: 0.0 for u in subsets}
    for s in range(0, n, block):
        Xb = X[s : s + block]
        kap = []
        for i in range(d):
            a, b = Xb[:, i][:, None], X[:, i][None, :]
            kap.append(2.0 - 6.0 * np.maximum(a, b) + 3.0 * a * a + 3.0 * b * b)
        for u in subsets:
            prod = None
            for a in u.axes():
                prod = kap[a] if prod is None else prod * kap[a]
            sums[u] += float(prod.sum())
    return {u: max(v, 0.0) / (n**2 * 6.0 ** len(u)) for u, v in sums.items()}


def wce(P: PointSet, w: Weights, pstar, tol: float = DEFAULT_TOL) -> ErrorReport:
    """Worst-case error of the equal-weight rule with nodes ``P``.

    Dispatch: ``p* = inf`` takes the exact sup over cell corners; ``p* = 2``
    uses the closed-form double sum; single-coordinate terms are integrated
    exactly; everything else goes through certified cell quadrature.
    """
    if w.d != P.d:
        raise ValueError(f"weights are for d={w.d}, point set has d={P.d}")
    ps = PStar.parse(pstar)
    active = w.active()
    if not active:
        method = "exact_grid_sup" if ps.is_inf else "exact_closed_form"
        return ErrorReport(0.0, {}, method, 0.0, ps, {})

    if ps.is_inf:
        terms = {u: w[u] * cell_sup(project(P, u).points, "kernel") for u in active}
        methods = {u: "exact_grid_sup" for u in active}
        total = max(terms[u] for u in active)
        return ErrorReport(total, terms, "exact_grid_sup", 0.0, ps, methods)

    p = ps.value
    if p == 2.0:
        raw = _l2_terms(P, active)
        terms = {u: w[u] ** 2 * raw[u] for u in active}
        methods = {u: "exact_closed_form" for u in active}
        return ErrorReport(math.sqrt(sum(terms.values())), terms, "exact_closed_form", 0.0, ps, methods)

    gp = {u: w[u] ** p for u in active}
    norm = sum(gp.values())
    methods = {u: "exact_closed_form" if len(u) == 1 else "quadrature" for u in active}
    integrals: dict[SubsetId, float] = {}

    def run(t):
        total = err = 0.0
        for u in active:
            try:
                r = cell_integral(project(P, u).points, "kernel", p, t / norm)
            except QuadratureBudgetError as exc:
                raise QuadratureBudgetError(
                    f"subset {u}: {exc}", exc.partial_value, exc.partial_bound
                ) from exc
            integrals[u] = r.value
            total += gp[u] * r.value
            err += gp[u] * r.error
        return total, err

    value, _, rerr = refine_root(run, p, tol)
    terms = {u: gp[u] * max(integrals[u], 0.0) for u in active}
    method = "quadrature" if "quadrature" in methods.values() else "exact_closed_form"
    if method == "exact_closed_form":
        rerr = 0.0
    return ErrorReport(max(value, 0.0) ** (1.0 / p), terms, method, rerr, ps, methods)
