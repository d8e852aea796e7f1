"""Command line interface.

Exit codes: 0 success, 2 usage or input error, 3 map not realisable by a tree,
4 n < 2m - 1 without ``--force``.
"""

from __future__ import annotations

import argparse
import random
import sys
from fractions import Fraction
from pathlib import Path

from .counterexample import build_counterexample
from .errors import BelowThresholdError, MMapFormatError, NewickError, NotRealizableError, TreeError
from .mdissim import check_necessary_conditions, compute_mmap, format_mmap, parse_mmap
from .newick import parse_newick, write_newick
from .reconstruct import perturbation_trial, reconstruct
from .scalar import DEFAULT_TOL, ScalarMode
from .tropical import ROW3_FORMS, lift, plucker_residuals, verify_minor_factorization

EXIT_USAGE = 2
EXIT_NOT_REALIZABLE = 3
EXIT_BELOW_THRESHOLD = 4


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _read_tree(path: str, mode: ScalarMode):
    return parse_newick(Path(path).read_text(encoding="utf-8").strip(), mode)


def cmd_weights(args):
    mode = ScalarMode.from_name(args.mode, args.tol)
    tree = _read_tree(args.tree, mode)
    if not 2 <= args.m <= tree.n:
        raise ValueError(f"-m must satisfy 2 <= m <= n={tree.n}, got {args.m}")
    _emit(format_mmap(compute_mmap(tree, args.m, workers=args.threads)), args.o)
    return 0


def _read_map(args):
    mmap = parse_mmap(Path(args.map).read_text(encoding="utf-8"), args.tol)
    if args.mode and args.mode != mmap.mode.name:
        mmap = mmap.with_mode(ScalarMode.from_name(args.mode, args.tol))
    return mmap


def cmd_reconstruct(args):
    mmap = _read_map(args)
    result = reconstruct(mmap, force=args.force)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    _emit(write_newick(result.tree) + "\n", args.o)
    return 0


def cmd_check(args):
    mmap = _read_map(args)
    report = check_necessary_conditions(mmap)
    name = "four-point condition" if mmap.m == 2 else "three-term conditions"
    lines = [
        f"{'PASS' if report.passed else 'FAIL'}\t{name} (n={mmap.n}, m={mmap.m})",
        f"checked\t{report.checked}",
        f"violations\t{len(report.violations)}",
    ]
    if report.first is not None:
        lines.append(f"witness\t{report.first}")
    _emit("\n".join(lines) + "\n", args.o)
    return 0 if report.passed else EXIT_NOT_REALIZABLE


def cmd_counterexample(args):
    if args.m < 3:
        raise ValueError(f"the counterexample needs m >= 3, got {args.m}")
    if not args.o:
        raise ValueError("-o <directory> is required")
    pair = build_counterexample(args.m, seed=args.seed)
    mmap = compute_mmap(pair.t, args.m)
    if compute_mmap(pair.t_prime, args.m) != mmap:
        raise RuntimeError("the two caterpillars have different m-maps")
    out = Path(args.o)
    out.mkdir(parents=True, exist_ok=True)
    (out / "T.nwk").write_text(write_newick(pair.t) + "\n", encoding="utf-8", newline="\n")
    (out / "Tprime.nwk").write_text(write_newick(pair.t_prime) + "\n", encoding="utf-8", newline="\n")
    (out / "map.tsv").write_text(format_mmap(mmap), encoding="utf-8", newline="\n")
    return 0


def cmd_perturb(args):
    if not 0 <= args.delta_frac < 0.5:
        raise ValueError(f"--delta-frac must lie in [0, 0.5), got {args.delta_frac}")
    tree = _read_tree(args.tree, ScalarMode(True))
    seed = 0 if args.seed is None else args.seed
    tol = 1e-12 if args.tol is None else args.tol
    report = perturbation_trial(tree, args.m, args.delta_frac, seed=seed, trials=args.trials, tol=tol)
    lines = [
        f"trials\t{report.trials}",
        f"topology_identical\t{report.identical}",
        f"success_rate\t{report.rate!r}",
        f"weights_recovered\t{report.weights_recovered}",
        f"max_weight_error\t{report.max_weight_error!r}",
    ]
    _emit("\n".join(lines) + "\n", args.o)
    return 0


def cmd_lift(args):
    n = args.n
    if n < 3:
        raise ValueError(f"-n must be at least 3, got {n}")
    seed = 0 if args.seed is None else args.seed
    lines = ["form\tarithmetic\tmatrices\tmax_factorization_residual\tmax_plucker_residual"]
    for form in ROW3_FORMS:
        for arith in ("float", "exact"):
            fact, pluck = 0.0, 0.0
            for s in range(args.trials):
                rng = random.Random(seed + s)
                if arith == "float":
                    X = [[rng.gauss(0, 1) for _ in range(n)] for _ in range(2)]
                else:
                    X = [[Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(n)] for _ in range(2)]
                fact = max(fact, float(verify_minor_factorization(X, form)))
                res = plucker_residuals(lift(X, form).lifted)
                if res:
                    pluck = max(pluck, max(float(r[3]) for r in res))
            pl = format(pluck, ".3e") if n >= 5 else "NA"
            lines.append(f"{form}\t{arith}\t{args.trials}\t{fact:.3e}\t{pl}")
    _emit("\n".join(lines) + "\n", args.o)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtree", description="Trees from m-leaf subtree weights.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, tree=False, mmap=False, m=False):
        if tree:
            p.add_argument("--tree", required=True, help="Newick file")
        if mmap:
            p.add_argument("--map", required=True, help="m-map TSV file")
        if m:
            p.add_argument("-m", type=int, required=True, help="subset size")
        p.add_argument("-o", help="output path (stdout if omitted)")

    p = sub.add_parser("weights", help="tree -> m-map TSV")
    common(p, tree=True, m=True)
    p.add_argument("--mode", choices=("exact", "float"), default="exact")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("reconstruct", help="m-map TSV -> Newick")
    common(p, mmap=True)
    p.add_argument("--mode", choices=("exact", "float"))
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--force", action="store_true", help="run even when n < 2m-1")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("check", help="necessary conditions / tropical membership")
    common(p, mmap=True)
    p.add_argument("--mode", choices=("exact", "float"))
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("counterexample", help="the n = 2m-2 caterpillar pair")
    common(p, m=True)
    p.add_argument("--seed", type=int, help="random weights (default: primes)")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("perturb", help="noise robustness of reconstruction")
    common(p, tree=True, m=True)
    p.add_argument("--delta-frac", type=float, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("lift", help="lift factorization and Plücker residuals")
    p.add_argument("-n", type=int, required=True, help="number of columns")
    p.add_argument("--seed", type=int, help="first seed")
    p.add_argument("--trials", type=int, default=100, help="number of random matrices")
    p.add_argument("-o", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_lift)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BelowThresholdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BELOW_THRESHOLD
    except NotRealizableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_REALIZABLE
    except (NewickError, MMapFormatError, TreeError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
