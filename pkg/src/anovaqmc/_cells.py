"""Piecewise-multilinear machinery shared by the discrepancy and error modules.

The breakpoints of a point set (its distinct coordinates plus 0 and 1) split
``[0,1]^k`` into boxes.  On the box with lower corner ``b`` the counting
function ``t -> #{j : x_j < t}`` equals ``#{j : x_j <= b}`` everywhere in the
half-open box, so the local discrepancy and the kernel sum are both
multilinear in ``t`` there.  A multilinear function is stored by its monomial
coefficients: column ``v`` (a local axis mask) multiplies ``prod_{i in v} t_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_EPS = np.finfo(float).eps


class QuadratureBudgetError(RuntimeError):
    """Adaptive quadrature ran out of subdivisions before meeting its tolerance."""

    def __init__(self, message, partial_value=math.nan, partial_bound=math.inf):
        super().__init__(message)
        self.partial_value = partial_value
        self.partial_bound = partial_bound


class CellGrid:
    """Cells induced by the coordinates of an ``(n, k)`` array."""

    def __init__(self, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        self.n, self.k = X.shape
        self.breaks = [np.unique(np.concatenate(([0.0, 1.0], X[:, i]))) for i in range(self.k)]
        idx = tuple(np.searchsorted(b, X[:, i]) for i, b in enumerate(self.breaks))
        hist = np.zeros([len(b) for b in self.breaks], dtype=np.int64)
        np.add.at(hist, idx, 1)
        for ax in range(self.k):
            hist = np.cumsum(hist, axis=ax)
        # cum[i_1, ..., i_k] = #{j : x_{j,l} <= breaks_l[i_l] for all l}
        self._cum = hist

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(b) - 1 for b in self.breaks)

    @property
    def ncells(self) -> int:
        return int(np.prod(self.shape))

    def _counts(self, wmask: int, rows: slice) -> np.ndarray:
        """``#{j : x_{j,l} <= lower_l for l in wmask}`` for the cells in ``rows``."""
        sl = []
        for ax in range(self.k):
            if wmask >> ax & 1:
                sl.append(rows if ax == 0 else slice(0, self.shape[ax]))
            else:
                sl.append(slice(-1, None))
        c = self._cum[tuple(sl)]
        nrows = len(range(*rows.indices(self.shape[0])))
        shape = (nrows,) + self.shape[1:]
        return np.broadcast_to(c, shape).reshape(-1)

    def blocks(self, max_cells: int = 1 << 18):
        """Yield ``(lo, hi, rows)`` for slabs of cells along the first axis."""
        inner = int(np.prod(self.shape[1:])) if self.k > 1 else 1
        step = max(1, max_cells // max(inner, 1))
        for start in range(0, self.shape[0], step):
            rows = slice(start, min(start + step, self.shape[0]))
            grids_lo = [self.breaks[0][:-1][rows]] + [b[:-1] for b in self.breaks[1:]]
            grids_hi = [self.breaks[0][1:][rows]] + [b[1:] for b in self.breaks[1:]]
            lo = np.stack([g.reshape(-1) for g in np.meshgrid(*grids_lo, indexing="ij")], axis=1)
            hi = np.stack([g.reshape(-1) for g in np.meshgrid(*grids_hi, indexing="ij")], axis=1)
            yield lo, hi, rows

    def kernel_coefficients(self, rows: slice) -> np.ndarray:
        """Coefficients of ``(1/n) sum_j prod_l (t_l - 1[x_{j,l} < t_l])``.

        Expanding the product, the monomial over ``v`` carries
        ``(-1)^{k-|v|}`` times the count of points below the cell in every
        axis outside ``v``.
        """
        full = (1 << self.k) - 1
        cols = []
        for v in range(1 << self.k):
            w = full ^ v
            sign = -1.0 if bin(w).count("1") % 2 else 1.0
            if w == 0:
                c = np.full(self._counts(0, rows).shape, float(self.n))
            else:
                c = self._counts(w, rows).astype(float)
            cols.append(sign * c / self.n)
        return np.stack(cols, axis=1)

    def discrepancy_coefficients(self, rows: slice) -> np.ndarray:
        """Coefficients of ``count/n - prod_l t_l`` on each cell."""
        full = (1 << self.k) - 1
        cnt = self._counts(full, rows).astype(float) / self.n
        coef = np.zeros((cnt.size, 1 << self.k))
        coef[:, 0] = cnt
        coef[:, full] = -1.0
        return coef


def monomials(t: np.ndarray) -> np.ndarray:
    """``out[..., v] = prod_{i in v} t[..., i]`` for every local mask ``v``."""
    k = t.shape[-1]
    out = np.empty(t.shape[:-1] + (1 << k,))
    out[..., 0] = 1.0
    for v in range(1, 1 << k):
        low = v & -v
        out[..., v] = out[..., v ^ low] * t[..., low.bit_length() - 1]
    return out


def corner_sup(lo: np.ndarray, hi: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Max of ``|f|`` over each closed cell, attained at one of its corners."""
    k = lo.shape[1]
    best = np.zeros(lo.shape[0])
    for c in range(1 << k):
        pick = np.array([(c >> i) & 1 for i in range(k)], dtype=bool)
        t = np.where(pick, hi, lo)
        val = np.abs(np.einsum("cv,cv->c", monomials(t), coef))
        np.maximum(best, val, out=best)
    return best


@lru_cache(maxsize=None)
def _gauss(q: int, dim: int):
    x, w = np.polynomial.legendre.leggauss(q)
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=1)
    weights = np.prod(np.stack([g.reshape(-1) for g in wgrids], axis=1), axis=1)
    return nodes, weights


def _antideriv(s: np.ndarray, p: float) -> np.ndarray:
    """Antiderivative of ``|s|^p``: ``sign(s) |s|^(p+1) / (p+1)``."""
    return np.sign(s) * np.abs(s) ** (p + 1.0) / (p + 1.0)


def segment_integral(A, B, a, b, p: float) -> np.ndarray:
    """Exact ``int_a^b |A + B t|^p dt`` elementwise.

    Uses the antiderivative where it is numerically safe (a sign change, or
    endpoint values that differ substantially); otherwise the integrand has
    no root within an interval's length of ``[a, b]`` and 8-point
    Gauss-Legendre is accurate to rounding.
    """
    A, B, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (A, B, a, b)))
    s1 = A + B * a
    s2 = A + B * b
    big = np.maximum(np.abs(s1), np.abs(s2))
    analytic = (s1 * s2 < 0) | (np.abs(s2 - s1) >= 0.5 * big)
    analytic &= B != 0
    out = np.empty(A.shape)
    if analytic.any():
        Ba = B[analytic]
        out[analytic] = (_antideriv(s2[analytic], p) - _antideriv(s1[analytic], p)) / Ba
    rest = ~analytic
    if rest.any():
        x, w = _gauss(8, 1)
        x = x[:, 0]
        ar, br, Ar, Br = a[rest], b[rest], A[rest], B[rest]
        half = 0.5 * (br - ar)
        mid = 0.5 * (br + ar)
        t = mid[:, None] + half[:, None] * x[None, :]
        vals = np.abs(Ar[:, None] + Br[:, None] * t) ** p
        out[rest] = half * (vals @ w)
    return out


@dataclass
class IntegralResult:
    value: float
    error: float
    boxes: int


def integrate_abs_power(
    lo: np.ndarray,
    hi: np.ndarray,
    coef: np.ndarray,
    p: float,
    tol: float,
    *,
    max_boxes: int = 4_000_000,
    max_depth: int = 40,
) -> IntegralResult:
    """``sum over cells of int_cell |f_cell(t)|^p dt`` for multilinear ``f``.

    The last axis is integrated in closed form.  The remaining axes use tensor
    Gauss-Legendre of orders 8 and 16 on each box; a box is accepted when the
    two estimates differ by at most its tolerance share, otherwise it is
    bisected along every outer axis.  The tolerance is split equally among the
    input cells and halved per bisected axis.  The reported error is the sum of
    the accepted differences.
    """
    ncell, k = lo.shape
    if ncell == 0:
        return IntegralResult(0.0, 0.0, 0)
    top = 1 << (k - 1)
    if k == 1:
        vals = segment_integral(coef[:, 0], coef[:, 1], lo[:, 0], hi[:, 0], p)
        return IntegralResult(float(np.sum(vals)), 0.0, ncell)

    dim = k - 1
    n8, w8 = _gauss(8, dim)
    n16, w16 = _gauss(16, dim)
    coefA = coef[:, :top]
    coefB = coef[:, top:]
    a_last = lo[:, -1]
    b_last = hi[:, -1]

    def estimate(blo, bhi, cidx, nodes, weights):
        half = 0.5 * (bhi - blo)
        mid = 0.5 * (bhi + blo)
        t = mid[:, None, :] + half[:, None, :] * nodes[None, :, :]
        mono = monomials(t)
        A = np.einsum("bqv,bv->bq", mono, coefA[cidx])
        B = np.einsum("bqv,bv->bq", mono, coefB[cidx])
        g = segment_integral(A, B, a_last[cidx][:, None], b_last[cidx][:, None], p)
        return np.prod(half, axis=1) * (g @ weights)

    blo = lo[:, :dim].copy()
    bhi = hi[:, :dim].copy()
    cidx = np.arange(ncell)
    share = np.full(ncell, tol / ncell)
    total_parts: list[float] = []
    err_parts: list[float] = []
    boxes = 0
    chunk = max(1, (1 << 20) // len(w16))
    for depth in range(max_depth + 1):
        if cidx.size == 0:
            break
        boxes += cidx.size
        q8 = np.empty(cidx.size)
        q16 = np.empty(cidx.size)
        for s in range(0, cidx.size, chunk):
            e = slice(s, s + chunk)
            q8[e] = estimate(blo[e], bhi[e], cidx[e], n8, w8)
            q16[e] = estimate(blo[e], bhi[e], cidx[e], n16, w16)
        diff = np.abs(q16 - q8)
        ok = diff <= np.maximum(share, 64 * _EPS * np.abs(q16))
        total_parts.append(float(np.sum(q16[ok])))
        err_parts.append(float(np.sum(diff[ok])))
        bad = ~ok
        if not bad.any():
            cidx = cidx[:0]
            break
        if depth == max_depth or boxes + bad.sum() * (1 << dim) > max_boxes:
            partial = float(np.sum(total_parts) + np.sum(q16[bad]))
            bound = float(np.sum(err_parts) + np.sum(diff[bad]))
            raise QuadratureBudgetError(
                f"quadrature budget exhausted with {int(bad.sum())} unresolved boxes",
                partial_value=partial,
                partial_bound=bound,
            )
        plo, phi_, pc, ps = blo[bad], bhi[bad], cidx[bad], share[bad]
        pm = 0.5 * (plo + phi_)
        los, his = [], []
        for c in range(1 << dim):
            pick = np.array([(c >> i) & 1 for i in range(dim)], dtype=bool)
            los.append(np.where(pick, pm, plo))
            his.append(np.where(pick, phi_, pm))
        blo = np.concatenate(los)
        bhi = np.concatenate(his)
        cidx = np.tile(pc, 1 << dim)
        share = np.tile(ps / (1 << dim), 1 << dim)
    return IntegralResult(float(np.sum(total_parts)), float(np.sum(err_parts)), boxes)


def root_error(value: float, err: float, p: float) -> float:
    """Bound on ``|value^(1/p) - true^(1/p)|`` given ``|value - true| <= err``."""
    if err <= 0:
        return 0.0
    low = value - err
    if low > 0:
        # mean value theorem; x^(1/p - 1) is decreasing
        return err * low ** (1.0 / p - 1.0) / p
    return (value + err) ** (1.0 / p)


def cell_integral(X: np.ndarray, kind: str, p: float, tol: float) -> IntegralResult:
    """Integral of ``|f|^p`` over ``[0,1]^k`` where ``f`` is the local
    discrepancy (``kind="disc"``) or the normalized kernel sum (``"kernel"``)."""
    grid = CellGrid(X)
    total, err, boxes = 0.0, 0.0, 0
    ncell = grid.ncells
    for lo, hi, rows in grid.blocks():
        coef = grid.kernel_coefficients(rows) if kind == "kernel" else grid.discrepancy_coefficients(rows)
        part = integrate_abs_power(lo, hi, coef, p, tol * lo.shape[0] / ncell)
        total += part.value
        err += part.error
        boxes += part.boxes
    return IntegralResult(total, err, boxes)


def cell_sup(X: np.ndarray, kind: str) -> float:
    """Essential sup of ``|f|`` over ``[0,1]^k``, same ``kind`` as above."""
    grid = CellGrid(X)
    best = 0.0
    for lo, hi, rows in grid.blocks():
        coef = grid.kernel_coefficients(rows) if kind == "kernel" else grid.discrepancy_coefficients(rows)
        best = max(best, float(corner_sup(lo, hi, coef).max()))
    return best


def refine_root(run, p: float, tol: float, start: float | None = None, rounds: int = 8):
    """Drive ``run(tol_integral) -> (value, err)`` until the ``1/p`` root of the
    value is known within ``tol``.  Returns ``(value, err, root_err)``."""
    t = tol if start is None else start
    for _ in range(rounds):
        value, err = run(t)
        rerr = root_error(value, err, p)
        if rerr <= tol:
            return value, err, rerr
        t = t * 0.5 * tol / rerr
    return value, err, rerr
