"""Brute-force cross-checks that share no code path with the exact engines.

The tensor oracle is the composite midpoint rule on a uniform grid whose
per-axis partition is refined by the node coordinates.  The integrands jump
only at node coordinates, so they are smooth on every cell and the rule
converges like O(h^2) per axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import PointSet, PStar, SubsetId, Weights

MAX_TENSOR_ORDER = 4
MAX_GRID_CELLS = 1 << 26


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    stderr: float = 0.0


def _axis_rule(G: int, x: np.ndarray, extrapolate: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Composite midpoint nodes and weights on the uniform partition with
    ``G`` cells, refined by the node coordinates ``x`` so that no jump of the
    integrand falls inside a cell.

    With ``extrapolate`` the midpoint sums on the partition and on its
    bisection are combined as ``(4 M_half - M) / 3``, which gives nodes at
    1/4, 1/2, 3/4 of each cell with weights 2/3, -1/3, 2/3 and is exact for
    cubics.
    """
    edges = np.union1d(np.linspace(0.0, 1.0, G + 1), np.clip(x, 0.0, 1.0))
    a, w = edges[:-1], np.diff(edges)
    a, w = a[w > 0], w[w > 0]
    if not extrapolate:
        return a + w / 2, w
    nodes = np.stack([a + w / 4, a + w / 2, a + 3 * w / 4], axis=1).reshape(-1)
    weights = (w[:, None] * np.array([2.0, -1.0, 2.0]) / 3.0).reshape(-1)
    return nodes, weights


def _tensor_rows(mats: list[np.ndarray]) -> np.ndarray:
    """Row-wise Kronecker product: ``out[j, (g_1..g_k)] = prod_l mats[l][j, g_l]``."""
    acc = mats[0]
    for M in mats[1:]:
        acc = (acc[:, :, None] * M[:, None, :]).reshape(acc.shape[0], -1)
    return acc


def _outer(vecs: list[np.ndarray]) -> np.ndarray:
    acc = vecs[0]
    for v in vecs[1:]:
        acc = np.multiply.outer(acc, v).reshape(-1)
    return acc


def _tensor_integral(mats, rules, offset: float | None, p: float) -> float:
    """Quadrature of ``|sum_j prod mats - offset * prod t|^p`` on the product rule."""
    if len(mats) == 1:
        S = mats[0].sum(axis=0)
    else:
        half = len(mats) // 2
        S = (_tensor_rows(mats[:half]).T @ _tensor_rows(mats[half:])).reshape(-1)
    if offset is not None:
        S = S - offset * _outer([t for t, _ in rules])
    return float(np.dot(_outer([w for _, w in rules]), np.abs(S) ** p))


def _rules(X: np.ndarray, G: int, extrapolate: bool = False):
    if G < 1:
        raise ValueError("grid needs at least one point per axis")
    rules = [_axis_rule(G, X[:, i], extrapolate) for i in range(X.shape[1])]
    size = math.prod(t.size for t, _ in rules)
    if size > MAX_GRID_CELLS:
        raise ValueError(f"grid of {size} points exceeds the oracle limit of {MAX_GRID_CELLS}")
    return rules


def kernel_integral_oracle(
    P: PointSet,
    u: int,
    pstar,
    grid_points_per_axis: int,
    extrapolate: bool = False,
    mc_samples: int = 200_000,
    seed: int = 0,
) -> OracleEstimate:
    """Estimate ``int |(1/n) sum_j prod_{l in u} K(x_{j,l}, t_l)|^p* dt``.

    Beyond ``MAX_TENSOR_ORDER`` coordinates this falls back to Monte Carlo and
    reports the standard error.
    """
    u = SubsetId(u)
    p = PStar.parse(pstar).value
    if math.isinf(p):
        raise ValueError("the quadrature oracle needs finite p*")
    X = P.points[:, list(u.axes())]
    n, k = X.shape
    if k > MAX_TENSOR_ORDER:
        rng = np.random.Generator(np.random.PCG64(seed))
        vals = np.empty(mc_samples)
        for s in range(0, mc_samples, 4096):
            T = rng.random((min(4096, mc_samples - s), k))
            K = np.where(X[None, :, :] >= T[:, None, :], T[:, None, :], T[:, None, :] - 1.0)
            vals[s : s + T.shape[0]] = np.abs(np.prod(K, axis=2).sum(axis=1) / n) ** p
        return OracleEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_samples)))
    rules = _rules(X, grid_points_per_axis, extrapolate)
    mats = [
        np.where(X[:, i][:, None] >= t[None, :], t[None, :], t[None, :] - 1.0) / n ** (1.0 / k)
        for i, (t, _) in enumerate(rules)
    ]
    return OracleEstimate(_tensor_integral(mats, rules, None, p))


def discrepancy_integral_oracle(
    P: PointSet, pstar, grid_points_per_axis: int, extrapolate: bool = False
) -> float:
    """Midpoint-rule estimate of ``int |Delta_P(t)|^p* dt``."""
    p = PStar.parse(pstar).value
    X = P.points
    n, k = X.shape
    rules = _rules(X, grid_points_per_axis, extrapolate)
    mats = [(X[:, i][:, None] < t[None, :]).astype(float) / n ** (1.0 / k) for i, (t, _) in enumerate(rules)]
    return _tensor_integral(mats, rules, 1.0, p)


def quadrature_oracle(
    P: PointSet, w: Weights, pstar, grid_points_per_axis: int, extrapolate: bool = False, seed: int = 0
) -> float:
    """Brute-force worst-case error: every subset integral by tensor midpoint
    quadrature (Monte Carlo beyond four coordinates)."""
    if w.d != P.d:
        raise ValueError("dimension mismatch between weights and point set")
    p = PStar.parse(pstar).value
    if math.isinf(p):
        raise ValueError("the quadrature oracle needs finite p*")
    active = w.active()
    for u in active:
        if len(u) <= MAX_TENSOR_ORDER:
            _rules(P.points[:, list(u.axes())], grid_points_per_axis, extrapolate)
    total = 0.0
    for u in active:
        est = kernel_integral_oracle(P, u, p, grid_points_per_axis, extrapolate, seed=seed)
        total += w[u] ** p * est.value
    return total ** (1.0 / p)


def _sorted_tuples(r: int, k: int):
    """Yield arrays of nondecreasing index tuples over ``0..r`` in lexicographic
    order, one block per leading index."""
    for i in range(r + 1):
        if k == 1:
            yield np.array([[i]])
        elif k == 2:
            rest = np.arange(i, r + 1)
            yield np.column_stack([np.full(rest.size, i), rest])
        elif k == 3:
            a, b = np.triu_indices(r + 1 - i)
            yield np.column_stack([np.full(a.size, i), a + i, b + i])
        else:
            raise ValueError("tuple enumeration supports k <= 3")


def _errors_1d(x: np.ndarray, p: float) -> np.ndarray:
    """Exact L_p* discrepancy of each sorted row of ``x`` (rows are point sets)."""
    m, k = x.shape
    edges = np.concatenate([np.zeros((m, 1)), x, np.ones((m, 1))], axis=1)
    a, b = edges[:, :-1], edges[:, 1:]
    c = np.arange(k + 1)[None, :] / k
    if math.isinf(p):
        vals = np.maximum(np.abs(c - a), np.abs(c - b))
        vals = np.where(b > a, vals, 0.0)
        return vals.max(axis=1)

    def F(s):
        return np.sign(s) * np.abs(s) ** (p + 1) / (p + 1)

    return np.sum(F(b - c) - F(a - c), axis=1) ** (1.0 / p)


def optimality_search_1d(n: int, pstar, grid_resolution: int = 256) -> tuple[PointSet, float]:
    """Exhaustive minimum of the 1D error over all sorted k-tuples, ``k <= n``,
    on the grid ``{i / r : i = 0..r}``; ties go to the smallest k, then the
    lexicographically smallest tuple."""
    if not 1 <= n <= 3:
        raise ValueError("exhaustive search is limited to n <= 3")
    if grid_resolution < 64:
        raise ValueError("grid_resolution must be at least 64")
    p = PStar.parse(pstar).value
    r = grid_resolution
    best_err, best = math.inf, None
    for k in range(1, n + 1):
        for block in _sorted_tuples(r, k):
            errs = _errors_1d(block / r, p)
            i = int(np.argmin(errs))
            if errs[i] < best_err:
                best_err, best = float(errs[i]), block[i] / r
    return PointSet(np.asarray(best)[:, None]), best_err


def one_point_per_interval_check(best_set: PointSet, n: int) -> bool:
    """True iff each ``[(j-1)/n, j/n)``, ``j = 1..n``, holds exactly one point."""
    if best_set.d != 1:
        raise ValueError("expects a one-dimensional set")
    counts = [0] * n
    for x in best_set.points[:, 0]:
        j = math.floor(Fraction(float(x)) * n)
        if not 0 <= j < n:
            return False
        counts[j] += 1
    return all(c == 1 for c in counts)
