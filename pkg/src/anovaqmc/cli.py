"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 computation failure
(quadrature budget exhausted), 3 verification failure.  The worker count for
``study`` and ``bounds`` fan-out is read from ``ANOVA_QMC_WORKERS``.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._cells import QuadratureBudgetError
from .bounds import sandwich_2d, t_inequality_holds, tilde_product_weights, tilde_weights, upper_bound_cor1
from .core import PointSet, PStar, SubsetId, Weights, full_mask
from .discrepancy import DEFAULT_TOL, lp_discrepancy, weighted_lp_discrepancy
from .oracle import one_point_per_interval_check, optimality_search_1d, quadrature_oracle
from .pointsets import (
    balanced_sigma,
    format_pointset,
    hammersley_2d,
    midpoint_1d,
    random_pointset,
    read_pointset,
    read_weights,
    write_pointset,
)
from .wce import kernel_sum, kernel_sum_via_discrepancy, wce

WORKERS_ENV = "ANOVA_QMC_WORKERS"
FAMILIES = ("midpoint", "hammersley-classical", "hammersley-balanced")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        k = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}")
    return max(k, 1)


def _map(fn, items):
    """Ordered map, fanned out across processes when more than one worker is set."""
    k = _workers()
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def _load_weights(path: str | None, d: int, uniform: bool = False) -> Weights:
    if path is not None:
        return read_weights(path, d)
    if uniform:
        return Weights.uniform(d, 1.0)
    return Weights.single(d, full_mask(d), 1.0)


def _emit_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if path == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())


# gen


def cmd_gen(args) -> int:
    if args.kind == "midpoint":
        if args.n is None:
            raise UsageError("midpoint needs --n")
        P = midpoint_1d(args.n)
    elif args.kind == "hammersley":
        if args.m is None:
            raise UsageError("hammersley needs --m")
        P = hammersley_2d(args.m, args.sigma)
    elif args.kind == "hammersley-shifted":
        if args.m is None:
            raise UsageError("hammersley-shifted needs --m")
        P = hammersley_2d(args.m, balanced_sigma(args.m))
    else:
        if args.d is None or args.n is None:
            raise UsageError("random needs --d and --n")
        P = random_pointset(args.d, args.n, args.seed)
    if args.out == "-":
        sys.stdout.write(format_pointset(P))
    else:
        write_pointset(P, args.out)
    return 0


# wce / disc


def cmd_wce(args) -> int:
    P = read_pointset(args.pointset)
    w = _load_weights(args.weights, P.d)
    rep = wce(P, w, args.pstar, args.tol)
    print(f"total: {_fmt(rep.total)}")
    print(f"method: {rep.method}")
    print(f"tolerance: {_fmt(rep.tolerance)}")
    print(f"p*: {rep.pstar}")
    for u in sorted(rep.per_subset):
        print(f"  {str(u):<12} {_fmt(rep.per_subset[u]):<24} {rep.subset_methods[u]}")
    if args.csv:
        rows = [[str(int(u)), _fmt(rep.per_subset[u]), rep.subset_methods[u]] for u in sorted(rep.per_subset)]
        _emit_csv(args.csv, ["mask", "term", "method"], rows)
    return 0


def cmd_disc(args) -> int:
    P = read_pointset(args.pointset)
    if args.weights:
        value, err = weighted_lp_discrepancy(P, read_weights(args.weights, P.d), args.pstar, args.tol)
    else:
        value, err = lp_discrepancy(P, args.pstar, args.tol)
    print(f"discrepancy: {_fmt(value)}")
    print(f"tolerance: {_fmt(err)}")
    return 0


# bounds


def _hammersley_family(family: str, m: int, seed: int) -> PointSet:
    if family == "hammersley-classical":
        return hammersley_2d(m)
    if family == "hammersley-balanced":
        return hammersley_2d(m, balanced_sigma(m))
    rng = np.random.Generator(np.random.PCG64([seed, m]))
    return hammersley_2d(m, tuple(int(b) for b in rng.integers(0, 2, m)))


def _bounds_row(job):
    label, P, w, pstar, tol = job
    ps = PStar.parse(pstar)
    if P.d == 2 and not ps.is_inf:
        try:
            s = sandwich_2d(P, w, ps, tol)
            return [label, str(P.n), _fmt(s.wce_value), _fmt(s.upper), _fmt(s.lower_proxy), "sandwich", _fmt(s.tolerance)]
        except ValueError:
            pass
    rep = wce(P, w, ps, tol)
    up, uerr = upper_bound_cor1(P, w, ps, tol)
    return [label, str(P.n), _fmt(rep.total), _fmt(up), "nan", "modified_weights", _fmt(rep.tolerance + uerr)]


def cmd_bounds(args) -> int:
    jobs = []
    for path in args.pointsets:
        P = read_pointset(path)
        jobs.append((path, P, _load_weights(args.weights, P.d, args.uniform_weights), args.pstar, args.tol))
    if args.family:
        for m in range(args.m_min, args.m_max + 1):
            P = _hammersley_family(args.family, m, args.seed)
            jobs.append((f"{args.family}:m={m}", P, _load_weights(args.weights, 2, args.uniform_weights), args.pstar, args.tol))
    if not jobs:
        raise UsageError("give point-set files or --family")
    rows = _map(_bounds_row, jobs)
    header = ["source", "n", "wce", "upper", "lower_proxy", "bound", "tolerance"]
    _emit_csv(args.csv or "-", header, rows)
    return 0


# study


def _study_row(job):
    family, size, wpath, uniform, pstar, tol = job
    if family == "midpoint":
        P = midpoint_1d(size)
    else:
        P = _hammersley_family(family, size, 0)
    w = _load_weights(wpath, P.d, uniform)
    rep = wce(P, w, pstar, tol)
    disc, _ = lp_discrepancy(P, pstar, tol)
    n = P.n
    nw = n * rep.total
    ln = math.log(n)
    sq = nw / math.sqrt(ln) if n > 1 else math.nan
    lg = nw / ln if n > 1 else math.nan
    head = [str(size)] if family != "midpoint" else []
    return head + [str(n), _fmt(rep.total), _fmt(nw), _fmt(sq), _fmt(lg), _fmt(disc), _fmt(rep.tolerance)]


def study_rows(family: str, sizes, pstar, tol=DEFAULT_TOL, weights_path=None, uniform=False):
    """Header and rows of a convergence study, in the order of ``sizes``."""
    if family not in FAMILIES:
        raise UsageError(f"unknown family {family!r}")
    jobs = [(family, s, weights_path, uniform, str(PStar.parse(pstar)), tol) for s in sizes]
    header = ["n", "wce", "n_wce", "n_wce_over_sqrt_log_n", "n_wce_over_log_n", "lp_discrepancy", "tolerance"]
    if family != "midpoint":
        header = ["m"] + header
    return header, _map(_study_row, jobs)


def cmd_study(args) -> int:
    if args.family == "midpoint":
        sizes = range(args.n_min, args.n_max + 1)
    else:
        sizes = range(args.m_min, args.m_max + 1)
    header, rows = study_rows(args.family, list(sizes), args.pstar, args.tol, args.weights, args.uniform_weights)
    _emit_csv(args.csv or "-", header, rows)
    return 0


# verify


@dataclass
class Check:
    suite: str
    label: str
    fn: Callable[[], tuple[bool, str]]


def _check_lemma_identity(seed: int, trials: int = 200):
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 5))
        n = int(rng.integers(1, 65))
        P = PointSet(rng.random((n, d)))
        u = SubsetId(int(rng.integers(1, 1 << d)))
        t = rng.random(len(u))
        worst = max(worst, abs(kernel_sum(P, u, t) - kernel_sum_via_discrepancy(P, u, t)))
    return worst <= 1e-12, f"max abs diff {worst:.2e} over {trials} trials"


def _check_l2_oracle(seed: int, count: int = 4):
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for k in range(count):
        d = 2 + k % 2
        P = PointSet(rng.random((int(rng.integers(2, 17)), d)))
        w = Weights.product(list(rng.uniform(0.2, 1.0, d)))
        # plain midpoint in 2D, extrapolated midpoint in 3D
        est = quadrature_oracle(P, w, 2, 2048) if d == 2 else quadrature_oracle(P, w, 2, 48, extrapolate=True)
        worst = max(worst, abs(wce(P, w, 2).total - est))
    return worst <= 1e-5, f"max abs diff {worst:.2e} vs midpoint oracle"


def _check_product_tilde():
    rng = np.random.Generator(np.random.PCG64(11))
    worst = 0.0
    for _ in range(20):
        g = list(rng.uniform(0.05, 2.0, int(rng.integers(1, 5))))
        for q in (1.5, 2, 3, "inf"):
            a = tilde_weights(Weights.product(g), q).gamma
            b = tilde_product_weights(g, q).gamma
            worst = max(worst, max(abs(x - y) for x, y in zip(a, b)))
    return worst <= 1e-12, f"max abs diff {worst:.2e}"


def _check_cor1(seed: int, count: int = 24):
    rng = np.random.Generator(np.random.PCG64(seed))
    bad = 0
    for k in range(count):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 13))
        q = ("1.5", "2", "3", "inf")[k % 4]
        P = PointSet(rng.random((n, d)))
        w = Weights.from_mapping(d, {u: float(rng.random()) for u in range(1, 1 << d)})
        rep = wce(P, w, q, 1e-8)
        up, uerr = upper_bound_cor1(P, w, q, 1e-8)
        bad += rep.total > up + rep.tolerance + uerr
    return bad == 0, f"{bad} violations in {count} instances"


def _check_sandwich():
    bad = total = 0
    for m in range(2, 9):
        for sigma in (None, balanced_sigma(m)):
            s = sandwich_2d(hammersley_2d(m, sigma), Weights.uniform(2), 2)
            total += 1
            bad += not s.holds()
    return bad == 0, f"{bad} violations in {total} sets"


def _check_t_inequality():
    ok = all(t_inequality_holds(d) for d in range(2, 21))
    return ok, "exact check for 2 <= d <= 20"


def _check_optimality(n: int, q: str):
    best, err = optimality_search_1d(n, q, 256)
    target = (2 * np.arange(1, n + 1) - 1) / (2 * n)
    near = bool(np.all(np.abs(best.points[:, 0] - target) <= 1 / 256)) if best.n == n else False
    ok = near and one_point_per_interval_check(best, n)
    return ok, f"best {np.round(best.points[:, 0], 4).tolist()}, error {err:.6f}"


def verify_checks() -> list[Check]:
    checks = [
        Check("identities", "kernel sum vs discrepancy expansion", lambda: _check_lemma_identity(3)),
        Check("identities", "p*=2 closed form vs midpoint oracle", lambda: _check_l2_oracle(5)),
        Check("bounds", "product-weight closed form of modified weights", _check_product_tilde),
        Check("bounds", "modified-weight upper bound", lambda: _check_cor1(7)),
        Check("bounds", "Hammersley two-sided bounds", _check_sandwich),
        Check("bounds", "factorial-ratio inequality", _check_t_inequality),
    ]
    for n in (1, 2, 3):
        for q in ("1", "2", "inf"):
            checks.append(Check("optimality", f"search n={n} p*={q}", lambda n=n, q=q: _check_optimality(n, q)))
    return checks


def cmd_verify(args) -> int:
    checks = [c for c in verify_checks() if args.suite in ("all", c.suite)]
    failures = []
    width = max(len(c.label) for c in checks)
    for c in checks:
        try:
            ok, detail = c.fn()
        except Exception as exc:  # a crash is a failed check, not a crashed table
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        print(f"{c.suite:<11} {c.label:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
        if not ok:
            failures.append(c.label)
    if failures:
        print("failed: " + "; ".join(failures), file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="anova-qmc", description="Worst-case errors of QMC rules in weighted ANOVA spaces.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, csv_help="write CSV to this path ('-' for stdout)"):
        p.add_argument("--pstar", default="2", help="dual exponent p*, a number >= 1 or 'inf' (default 2)")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="absolute tolerance for quadrature paths")
        p.add_argument("--weights", help="weights file; default is the single full-set weight 1")
        p.add_argument("--csv", help=csv_help)

    g = sub.add_parser("gen", help="generate a point set")
    g.add_argument("kind", choices=["midpoint", "hammersley", "hammersley-shifted", "random"])
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--sigma", help="shift bits as a 0/1 string, e.g. 011")
    g.add_argument("--d", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out", default="-")
    g.set_defaults(func=cmd_gen)

    w = sub.add_parser("wce", help="worst-case error of a point set")
    w.add_argument("pointset")
    common(w)
    w.set_defaults(func=cmd_wce)

    d = sub.add_parser("disc", help="(weighted) L_p* discrepancy of a point set")
    d.add_argument("pointset")
    common(d)
    d.set_defaults(func=cmd_disc)

    b = sub.add_parser("bounds", help="worst-case error next to its upper and lower bounds")
    b.add_argument("pointsets", nargs="*")
    common(b)
    b.add_argument("--family", choices=["hammersley-classical", "hammersley-balanced", "hammersley-random"])
    b.add_argument("--m-min", type=int, default=2)
    b.add_argument("--m-max", type=int, default=8)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--uniform-weights", action="store_true", help="set every weight to 1")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("study", help="convergence study as CSV")
    s.add_argument("family", choices=FAMILIES)
    common(s)
    s.add_argument("--n-min", type=int, default=1)
    s.add_argument("--n-max", type=int, default=64)
    s.add_argument("--m-min", type=int, default=4)
    s.add_argument("--m-max", type=int, default=12)
    s.add_argument("--seed", type=int, default=0, help="unused by the deterministic families")
    s.add_argument("--uniform-weights", action="store_true", help="set every weight to 1")
    s.set_defaults(func=cmd_study)

    v = sub.add_parser("verify", help="run invariant batteries")
    v.add_argument("suite", choices=["identities", "bounds", "optimality", "all"], nargs="?", default="all")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if hasattr(args, "pstar"):
            args.pstar = PStar.parse(args.pstar)
        return args.func(args)
    except QuadratureBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
