"""Upper and lower bound machinery for the ANOVA worst-case error."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .core import PointSet, PStar, Weights, check_enumerable
from .discrepancy import DEFAULT_TOL, lp_discrepancy, weighted_lp_discrepancy
from .pointsets import is_projection_regular
from .wce import wce


def tilde_weights(w: Weights, pstar) -> Weights:
    """Modified weights turning the error bound into a weighted discrepancy.

    For finite ``p*``::

        gt_u = ((p*+1)^|u| sum_{v >= u, gamma_v > 0} gamma_v^p* (2^(p*-1)/(p*+1))^|v|)^(1/p*)

    and ``gt_u = 2^|u| gamma_u`` for ``p* = inf``.  ``gt_empty`` is 0.
    """
    ps = PStar.parse(pstar)
    d = w.d
    size = 1 << d
    out = [0.0] * size
    if ps.is_inf:
        for u in range(1, size):
            out[u] = 2.0 ** bin(u).count("1") * w.gamma[u]
        return Weights(d, tuple(out))
    p = ps.value
    c = 2.0 ** (p - 1.0) / (p + 1.0)
    # sum over supersets: zeta transform over the subset lattice
    acc = [w.gamma[v] ** p * c ** bin(v).count("1") if w.gamma[v] > 0 else 0.0 for v in range(size)]
    for i in range(d):
        bit = 1 << i
        for u in range(size):
            if not u & bit:
                acc[u] += acc[u | bit]
    for u in range(1, size):
        out[u] = ((p + 1.0) ** bin(u).count("1") * acc[u]) ** (1.0 / p)
    return Weights(d, tuple(out))


def tilde_product_weights(gammas, pstar) -> Weights:
    """Closed form of :func:`tilde_weights` for product weights."""
    ps = PStar.parse(pstar)
    d = len(gammas)
    check_enumerable(d)
    out = [0.0] * (1 << d)
    for u in range(1, 1 << d):
        val = 1.0
        for j, g in enumerate(gammas):
            if u >> j & 1:
                val *= 2.0 * g if ps.is_inf else 2.0 * g / 2.0 ** (1.0 / ps.value)
            elif not ps.is_inf:
                p = ps.value
                val *= (1.0 + 2.0 ** (p - 1.0) / (p + 1.0) * g**p) ** (1.0 / p)
        out[u] = val
    return Weights(d, tuple(out))


def upper_bound_cor1(P: PointSet, w: Weights, pstar, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Weighted discrepancy with the modified weights; bounds ``wce`` from above."""
    return weighted_lp_discrepancy(P, tilde_weights(w, pstar), pstar, tol)


def t_sequence(d: int, ell: int) -> Fraction:
    """``(ell!)^2 / (d!)^2`` as an exact fraction."""
    if not 1 <= ell <= d:
        raise ValueError(f"need 1 <= ell <= d, got ell={ell}, d={d}")
    return Fraction(factorial(ell) ** 2, factorial(d) ** 2)


def t_inequality_holds(d: int) -> bool:
    """Check ``T_d(l) > sum_{k<l} C(l,k) T_d(k)`` for every ``l`` in ``2..d`` exactly."""
    if d < 2:
        raise ValueError("the inequality is stated for d >= 2")
    if d > 20:
        raise ValueError("d > 20 is outside the supported range")
    for ell in range(2, d + 1):
        rhs = sum(comb(ell, k) * t_sequence(d, k) for k in range(1, ell))
        if not t_sequence(d, ell) > rhs:
            return False
    return True


def g_norm_bound(pstar) -> float:
    """Constant ``2^(p*+1) / (p*+1)^2`` bounding the L_p* norm of the
    correction term in the two-dimensional lower bound."""
    p = PStar.parse(pstar).value
    return 2.0 ** (p + 1.0) / (p + 1.0) ** 2


@dataclass(frozen=True)
class Sandwich:
    lower_proxy: float
    upper: float
    wce_value: float
    tolerance: float = 0.0

    def holds(self, slack: float = 0.0) -> bool:
        return (
            self.lower_proxy <= self.wce_value + self.tolerance + slack
            and self.wce_value <= self.upper + self.tolerance + slack
        )


def sandwich_2d(P: PointSet, w: Weights, pstar, tol: float = DEFAULT_TOL) -> Sandwich:
    """Explicit two-sided bounds for a projection-regular 2D rule.

    ``upper`` is ``(1/n)[(g1^p + g2^p)/(p+1) + 3^(p-1) g12^p (2/(p+1)^2 + (n L_p)^p)]^(1/p)``;
    ``lower_proxy`` is ``g12 (L_p - g_norm_bound/n)``, which may be negative.
    """
    if P.d != 2 or w.d != 2:
        raise ValueError("sandwich bounds are two-dimensional")
    if not is_projection_regular(P):
        raise ValueError("point set is not projection regular")
    ps = PStar.parse(pstar)
    if ps.is_inf:
        raise ValueError("sandwich bounds need finite p*")
    p = ps.value
    n = P.n
    L, ltol = lp_discrepancy(P, ps, tol)
    g1, g2, g12 = w[1], w[2], w[3]
    bracket = (g1**p + g2**p) / (p + 1.0) + 3.0 ** (p - 1.0) * g12**p * (
        2.0 / (p + 1.0) ** 2 + (n * L) ** p
    )
    upper = bracket ** (1.0 / p) / n
    lower = g12 * (L - g_norm_bound(p) / n)
    rep = wce(P, w, ps, tol)
    # the upper bound is increasing in L, so its slack comes from ltol
    up_tol = 0.0
    if ltol > 0:
        hi = (bracket + 3.0 ** (p - 1.0) * g12**p * ((n * (L + ltol)) ** p - (n * L) ** p)) ** (1.0 / p) / n
        up_tol = hi - upper
    return Sandwich(lower, upper, rep.total, rep.tolerance + g12 * ltol + up_tol)


def embedding_norm_1d_p2(gamma1: float) -> float:
    """Norm of the identity embedding between the 1D ANOVA and anchored
    spaces for ``p = 2`` and ``gamma_empty = 1``."""
    if gamma1 <= 0:
        raise ValueError("gamma1 must be positive")
    g = gamma1
    return math.sqrt(1.0 + g / math.sqrt(3.0) * (math.sqrt(1.0 + g * g / 12.0) + g / math.sqrt(12.0)))
