"""Node-set constructors and the point-set / weights text formats."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import PointSet, SubsetId, Weights


def midpoint_1d(n: int) -> PointSet:
    """Nodes ``(2j - 1) / (2n)`` for ``j = 1, ..., n``."""
    if n < 1:
        raise ValueError("midpoint rule needs n >= 1")
    j = np.arange(1, n + 1)
    return PointSet(((2 * j - 1) / (2.0 * n))[:, None])


def _bits(sigma) -> tuple[int, ...]:
    if isinstance(sigma, str):
        sigma = [int(c) for c in sigma]
    out = tuple(int(s) for s in sigma)
    if any(s not in (0, 1) for s in out):
        raise ValueError("sigma must consist of bits 0/1")
    return out


def hammersley_2d(m: int, sigma: Sequence[int] | str | None = None) -> PointSet:
    """Digitally shifted Hammersley set with ``2^m`` points.

    For the digit vector ``(t_1, ..., t_m)`` the first coordinate is the
    binary fraction ``0.t_m t_{m-1} ... t_1`` and the second is
    ``0.(t_1^s_1)(t_2^s_2)...(t_m^s_m)``.  ``sigma = 0`` gives the classical
    Hammersley set.  Points come out ordered by increasing first coordinate.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m > 52:
        raise ValueError("m > 52 is not exactly representable in double precision")
    sig = (0,) * m if sigma is None else _bits(sigma)
    if len(sig) != m:
        raise ValueError(f"sigma has {len(sig)} bits, expected m={m}")
    n = 1 << m
    # k = sum_i t_i 2^(i-1) is the first-coordinate numerator over 2^m.
    k = np.arange(n, dtype=np.int64)
    shift = 0
    for i, s in enumerate(sig):
        shift |= s << (m - 1 - i)
    # t_i sits at bit (i - 1) of k; in the second coordinate it has weight 2^(m - i)
    rev = np.zeros(n, dtype=np.int64)
    for i in range(m):
        rev |= ((k >> i) & 1) << (m - 1 - i)
    y = rev ^ shift
    scale = float(n)
    return PointSet(np.column_stack([k / scale, y / scale]))


def balanced_sigma(m: int) -> tuple[int, ...]:
    """Shift with ``floor(m/2)`` zeros placed first, then ones."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    z = m // 2
    return (0,) * z + (1,) * (m - z)


def is_projection_regular(P: PointSet) -> bool:
    """Both coordinate projections equal ``{0, 1/n, ..., (n-1)/n}`` exactly."""
    if P.d != 2:
        raise ValueError("projection regularity is defined for d = 2")
    n = P.n
    for col in P.points.T:
        nums = col * n
        if not np.all(nums == np.round(nums)):
            return False
        # exact rational check guards against rounding in col * n
        vals = sorted(Fraction(float(v)) for v in col)
        if vals != [Fraction(j, n) for j in range(n)]:
            return False
    return True


def random_pointset(d: int, n: int, seed: int) -> PointSet:
    """Uniform points from numpy's PCG64 generator seeded with ``seed``."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    return PointSet(rng.random((n, d)))


def format_pointset(P: PointSet) -> str:
    lines = [f"{P.d} {P.n}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in P.points]
    return "\n".join(lines) + "\n"


def parse_pointset(text: str) -> PointSet:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ValueError("empty point-set file")
    try:
        d, n = (int(v) for v in rows[0])
    except ValueError as exc:
        raise ValueError("first line must be 'd n'") from exc
    body = rows[1:]
    if len(body) != n:
        raise ValueError(f"header announces {n} points, found {len(body)}")
    pts = []
    for i, r in enumerate(body, start=2):
        if len(r) != d:
            raise ValueError(f"line {i}: expected {d} coordinates, got {len(r)}")
        pts.append([float(Fraction(v)) if "/" in v else float(v) for v in r])
    return PointSet(np.array(pts, dtype=float).reshape(n, d))


def read_pointset(path) -> PointSet:
    return parse_pointset(Path(path).read_text())


def write_pointset(P: PointSet, path) -> None:
    Path(path).write_text(format_pointset(P))


def parse_weights(text: str, d: int) -> Weights:
    """Parse lines ``"1,2 0.5"``; ``"() 1"`` sets the empty-set weight."""
    gamma: dict[int, float] = {}
    empty = 1.0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'mask gamma'")
        spec, val = parts
        spec = spec.strip("(){}")
        value = float(val)
        if not spec:
            empty = value
            continue
        coords = [int(c) for c in spec.split(",") if c]
        u = SubsetId.from_coords(coords)
        if u >> d:
            raise ValueError(f"line {lineno}: coordinate beyond d={d}")
        gamma[int(u)] = value
    return Weights.from_mapping(d, gamma, empty=empty)


def read_weights(path, d: int) -> Weights:
    return parse_weights(Path(path).read_text(), d)


def format_weights(w: Weights) -> str:
    lines = [f"() {w.gamma[0]!r}"]
    for mask in range(1, 1 << w.d):
        if w.gamma[mask] != 0:
            lines.append(f"{','.join(map(str, SubsetId(mask).coords()))} {w.gamma[mask]!r}")
    return "\n".join(lines) + "\n"
