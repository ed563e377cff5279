"""Shared vocabulary: point sets, coordinate subsets, weights and exponents.

Subsets of the coordinate indices ``{1, ..., d}`` are encoded as bit masks:
coordinate ``i`` corresponds to bit ``i - 1``.  All types are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

MAX_ENUM_DIM = 20


class SubsetId(int):
    """A subset of ``{1, ..., d}`` stored as a bit mask.

    Subclasses ``int`` so masks can be used directly as indices and with the
    usual bitwise operators.
    """

    def __new__(cls, mask: int = 0):
        if mask < 0:
            raise ValueError("subset mask must be nonnegative")
        return super().__new__(cls, mask)

    @classmethod
    def from_coords(cls, coords: Iterable[int]) -> "SubsetId":
        mask = 0
        for c in coords:
            if c < 1:
                raise ValueError(f"coordinate indices are 1-based, got {c}")
            mask |= 1 << (c - 1)
        return cls(mask)

    @property
    def mask(self) -> int:
        return int(self)

    def coords(self) -> tuple[int, ...]:
        """1-based coordinate indices in increasing order."""
        m, out, i = int(self), [], 1
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return tuple(out)

    def axes(self) -> tuple[int, ...]:
        """0-based column indices in increasing order."""
        return tuple(c - 1 for c in self.coords())

    def __len__(self) -> int:
        return bin(int(self)).count("1")

    def __iter__(self) -> Iterator[int]:
        return iter(self.coords())

    def issubset(self, other: int) -> bool:
        return int(self) & ~int(other) == 0

    def issuperset(self, other: int) -> bool:
        return int(other) & ~int(self) == 0

    def __repr__(self) -> str:
        return "SubsetId({" + ",".join(map(str, self.coords())) + "})"

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.coords())) + ")"


def full_mask(d: int) -> SubsetId:
    return SubsetId((1 << d) - 1)


def all_subsets(d: int, nonempty: bool = True) -> list[SubsetId]:
    """Every subset of ``[d]`` in increasing mask order."""
    check_enumerable(d)
    start = 1 if nonempty else 0
    return [SubsetId(m) for m in range(start, 1 << d)]


def submasks(mask: int, nonempty: bool = True) -> list[SubsetId]:
    """All subsets of ``mask`` in increasing mask order."""
    out = []
    sub = mask
    while True:
        if sub or not nonempty:
            out.append(SubsetId(sub))
        if sub == 0:
            break
        sub = (sub - 1) & mask
    out.reverse()
    return out


def check_enumerable(d: int) -> None:
    if d > MAX_ENUM_DIM:
        raise ValueError(
            f"d={d} exceeds {MAX_ENUM_DIM}; enumerating all 2^d subsets is not supported"
        )


@dataclass(frozen=True)
class PointSet:
    """``n`` nodes in ``[0, 1]^d``, stored as a read-only ``(n, d)`` array."""

    points: np.ndarray

    def __post_init__(self):
        arr = np.array(self.points, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("a point set needs n >= 1 points of dimension d >= 1")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("coordinates must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )

    def __hash__(self):
        return hash((self.points.shape, self.points.tobytes()))

    def as_multiset(self) -> list[tuple[float, ...]]:
        return sorted(map(tuple, self.points.tolist()))

    def reflect(self) -> "PointSet":
        """The set ``{1 - x}`` with every coordinate reflected."""
        return PointSet(1.0 - self.points)


def project(P: PointSet, u: int) -> PointSet:
    """Keep the coordinates in ``u``; point order and duplicates are kept."""
    u = SubsetId(u)
    if u == 0:
        raise ValueError("cannot project onto the empty set of coordinates")
    if u >> P.d:
        raise ValueError(f"subset {u} has coordinates beyond d={P.d}")
    return PointSet(P.points[:, list(u.axes())])


@dataclass(frozen=True)
class Weights:
    """Nonnegative weights ``gamma[mask]`` for all ``2^d`` subsets."""

    d: int
    gamma: tuple[float, ...]

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be positive")
        check_enumerable(self.d)
        g = tuple(float(x) for x in self.gamma)
        if len(g) != 1 << self.d:
            raise ValueError(f"expected {1 << self.d} weights, got {len(g)}")
        if any(not math.isfinite(x) or x < 0 for x in g):
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_mapping(cls, d: int, gamma: Mapping[int, float], empty: float = 1.0) -> "Weights":
        g = [0.0] * (1 << d)
        g[0] = empty
        for mask, val in gamma.items():
            mask = int(mask)
            if mask >> d:
                raise ValueError(f"subset {SubsetId(mask)} does not fit in d={d}")
            g[mask] = val
        return cls(d, tuple(g))

    @classmethod
    def product(cls, gammas: Sequence[float]) -> "Weights":
        """Product weights ``gamma_u = prod_{j in u} gamma_j`` (``gamma_empty = 1``)."""
        d = len(gammas)
        check_enumerable(d)
        g = [1.0] * (1 << d)
        for mask in range(1, 1 << d):
            low = mask & -mask
            j = low.bit_length() - 1
            g[mask] = g[mask ^ low] * float(gammas[j])
        return cls(d, tuple(g))

    @classmethod
    def single(cls, d: int, u: int, value: float = 1.0) -> "Weights":
        """Only ``gamma_u`` (and ``gamma_empty = 1``) nonzero."""
        return cls.from_mapping(d, {int(u): value})

    @classmethod
    def uniform(cls, d: int, value: float = 1.0) -> "Weights":
        return cls(d, (1.0,) + (value,) * ((1 << d) - 1))

    def __getitem__(self, u: int) -> float:
        return self.gamma[int(u)]

    @property
    def u_plus(self) -> list[SubsetId]:
        """Subsets with positive weight, including the empty set if positive."""
        return [SubsetId(m) for m, g in enumerate(self.gamma) if g > 0]

    def active(self) -> list[SubsetId]:
        """Nonempty subsets with positive weight, increasing mask order."""
        return [SubsetId(m) for m, g in enumerate(self.gamma) if m and g > 0]

    def scaled(self, c: float) -> "Weights":
        """All nonempty-subset weights multiplied by ``c``."""
        return Weights(self.d, (self.gamma[0],) + tuple(c * g for g in self.gamma[1:]))

    def with_weight(self, u: int, value: float) -> "Weights":
        g = list(self.gamma)
        g[int(u)] = value
        return Weights(self.d, tuple(g))


def condition9_holds(w: Weights) -> bool:
    """True iff the positive-weight subsets are closed under taking subsets.

    The empty set is exempt: only nonempty subsets of a positive-weight subset
    are required to carry positive weight.
    """
    for mask in range(1, 1 << w.d):
        if w.gamma[mask] > 0:
            for sub in submasks(mask):
                if w.gamma[sub] <= 0:
                    return False
    return True


@dataclass(frozen=True)
class PStar:
    """Integrability exponent ``p*`` in ``[1, inf]``; ``inf`` is a regular value."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v) or v < 1:
            raise ValueError(f"p* must lie in [1, inf], got {self.value}")
        object.__setattr__(self, "value", v)

    @classmethod
    def parse(cls, s: "str | float | PStar") -> "PStar":
        if isinstance(s, PStar):
            return s
        if isinstance(s, str):
            t = s.strip().lower()
            if t in ("inf", "infinity", "oo"):
                return cls(math.inf)
            if "/" in t:
                return cls(float(Fraction(t)))
            return cls(float(t))
        return cls(float(s))

    @classmethod
    def from_conjugate(cls, p: float) -> "PStar":
        return cls(conjugate_exponent(p))

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.value)

    @property
    def conjugate(self) -> float:
        """The exponent ``p`` with ``1/p + 1/p* = 1``."""
        return conjugate_exponent(self.value)

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        return "inf" if self.is_inf else repr(self.value)


def conjugate_exponent(q: float) -> float:
    q = float(q)
    if q < 1:
        raise ValueError("exponent must be >= 1")
    if math.isinf(q):
        return 1.0
    if q == 1:
        return math.inf
    return q / (q - 1.0)


METHODS = ("exact_closed_form", "exact_grid_sup", "quadrature")


@dataclass(frozen=True)
class ErrorReport:
    """A worst-case error with its per-subset terms.

    For finite ``p*`` each term is the subset contribution before the outer
    ``1/p*`` root, so ``total = sum(terms) ** (1/p*)``; for ``p* = inf`` the
    terms are the candidates for the maximum.
    """

    total: float
    per_subset: dict[SubsetId, float]
    method: str
    tolerance: float = 0.0
    pstar: PStar = field(default_factory=lambda: PStar(2.0))
    subset_methods: dict[SubsetId, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")

    def argmax(self) -> SubsetId | None:
        """Subset attaining the largest term; ties go to the smallest mask."""
        best = None
        for u in sorted(self.per_subset):
            if best is None or self.per_subset[u] > self.per_subset[best]:
                best = u
        return best
