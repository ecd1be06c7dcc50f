"""Command line entry point: ``isostencil <subcommand> ...``.

Exit status is 0 on success, 1 for invalid arguments or parameter
combinations, and 2 when a numerical construction fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .bench_harness import (
    METHOD_LABELS,
    BenchError,
    build_method_stencil,
    fraction_better,
    run_convergence,
    run_isotropy,
    write_field_csv,
    write_pgm,
)
from .fractional_stencil import FractionalError, build_fractional, closed_form_1d
from .grid_quadrature import QuadratureError, grid_weights_1d, solve_elimination_scale, verify_orthogonality_1d
from .hermite_poly import laplacian_hermite_arrays
from .integer_stencil import StencilError, build_integer_laplacian, default_scale, format_stencil
from .reference_models import BenchmarkProblem, ReferenceModelError, f1_frac_laplacian, f2_frac_laplacian
from .smolyak2d import implicit_weights, orthogonality_residual, smolyak_weights
from .spectral_integrators import IntegratorConfig, IntegratorError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
_INTEGRATOR = {"he-fft": "fft", "he-filon": "filon", "he-tanhsinh": "tanh-sinh"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(header, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def cmd_weights_1d(args) -> int:
    a = args.a if args.a is not None else default_scale(args.nq)
    rule = grid_weights_1d(args.nq, a)
    rows = [(k, float(x), float(w)) for k, (x, w) in enumerate(zip(rule.nodes, rule.weights))]
    _emit(_table(["k", "node", "weight"], rows, args.format), args.out)
    return EXIT_OK


def cmd_weights_2d(args) -> int:
    a = args.a if args.a is not None else default_scale(args.nq)
    build = smolyak_weights if args.construction == "smolyak" else implicit_weights
    sparse = build(args.nq, a)
    rows = [(i, j, float(w)) for (i, j), w in sorted(sparse.entries.items())]
    _emit(_table(["i", "j", "weight"], rows, args.format), args.out)
    return EXIT_OK


def _config(args, method: str) -> IntegratorConfig:
    return IntegratorConfig(_INTEGRATOR.get(method, "fft"), n_t=args.nt, k_g=args.kg, n_f=args.nf, n_grid=args.ngrid)


def _stencil_text(stencil, fmt: str) -> str:
    if fmt == "json":
        payload = {
            "dimension": stencil.dimension,
            "half_width": stencil.half_width,
            "meta": asdict(stencil.meta),
            "coefficients": stencil.coefficients.tolist(),
        }
        return json.dumps(payload, indent=2) + "\n"
    return format_stencil(stencil)


def cmd_stencil(args) -> int:
    stencil = build_integer_laplacian(args.dim, args.nc, args.nq, a=args.a)
    _emit(_stencil_text(stencil, args.format), args.out)
    return EXIT_OK


def cmd_frac_stencil(args) -> int:
    if args.method == "sin-fft":
        if args.dim != 2:
            raise BenchError("sin-fft is a 2D baseline; use --dim 2")
        stencil = build_method_stencil("sin-fft", args.alpha, args.half_width)
    else:
        base = build_integer_laplacian(args.dim, args.nc, args.nq, a=args.a)
        stencil = build_fractional(base, args.alpha, args.half_width, _config(args, args.method))
    _emit(_stencil_text(stencil, args.format), args.out)
    return EXIT_OK


def cmd_convergence(args) -> int:
    problem = BenchmarkProblem(args.problem, args.alpha)
    report = run_convergence(
        problem, args.method, args.levels, args.nmax, args.nc, args.nq, config=_config(args, args.method)
    )
    _emit(report.to_json() + "\n" if args.format == "json" else report.to_csv(), args.out)
    if report.excluded:
        print(f"warning: {report.excluded} grid point(s) excluded", file=sys.stderr)
    return EXIT_OK


def cmd_isotropy(args) -> int:
    problem = BenchmarkProblem(args.problem, args.alpha)
    settings = ((args.nc, args.nq_low), (args.nc, args.nq_high))
    low, high = run_isotropy(problem, args.n, settings, args.method, config=_config(args, args.method))
    summary = {
        "problem": problem.to_dict(),
        "n": args.n,
        "settings": [low.summary(), high.summary()],
        "fraction_better": fraction_better(high, low),
        "annulus_edges": low.edges.tolist(),
        "scores": {"low": low.scores.tolist(), "high": high.scores.tolist()},
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for res in (low, high):
            stem = f"{args.problem}_a{args.alpha:g}_nc{res.n_c}_nq{res.n_q}".replace(".", "p")
            write_field_csv(res.error, out / f"{stem}.csv")
            write_pgm(res.error, out / f"{stem}.pgm", source=res.summary())
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary if args.format == "json" else {k: summary[k] for k in ("settings", "fraction_better")}, indent=2))
    return EXIT_OK


def selftest_checks():
    """Fast invariant checks: ``(name, passed, detail)`` triples."""

    def quad():
        worst = max(verify_orthogonality_1d(grid_weights_1d(q, default_scale(q))).max_residual for q in range(2, 9, 2))
        return worst <= 1e-10, f"max moment residual {worst:.2e}"

    def root():
        a = solve_elimination_scale(2)
        return abs(a - math.sqrt(3.0)) <= 1e-12, f"a*(2) = {a:.15f}"

    def smolyak():
        diff = 0.0
        for q in range(2, 7):
            a = default_scale(q)
            diff = max(diff, float(np.max(np.abs(implicit_weights(q, a).quadrant() - smolyak_weights(q, a).quadrant()))))
        res = orthogonality_residual(implicit_weights(4, default_scale(4)))
        return diff <= 1e-9 and res <= 1e-10, f"construction gap {diff:.1e}, residual {res:.1e}"

    def lap_hermite():
        h0, h1 = laplacian_hermite_arrays(np.array([0.0, 0.7]), 2, 3)
        return bool(np.all(np.isfinite(h0)) and np.all(np.isfinite(h1))), "tables finite"

    def stencil_sum():
        s = build_integer_laplacian(2, 2, 5)
        total = float(np.sum(s.coefficients))
        return abs(total) <= 1e-12 and s.symmetry_defect() <= 1e-14, f"row sum {total:.1e}"

    def frac_1d():
        base = build_integer_laplacian(1, 1, 2)
        st = build_fractional(base, 1.0, 32, IntegratorConfig("filon", n_f=4))
        exact = np.array([closed_form_1d(1.0, k) for k in st.offsets])
        err = float(np.max(np.abs(st.coefficients - exact)))
        return err <= 1e-8, f"max |h_n - closed form| {err:.1e}"

    def references():
        gap1 = abs(f1_frac_laplacian(1.0 - 1e-12, 1.0) - f1_frac_laplacian(1.0 + 1e-12, 1.0))
        gap2 = abs(f2_frac_laplacian(1.0 - 1e-12, 0.5) - f2_frac_laplacian(1.0 + 1e-12, 0.5))
        return max(gap1, gap2) <= 1e-5, f"jumps at r=1: {gap1:.1e}, {gap2:.1e}"

    checks = [
        ("1d quadrature moments", quad),
        ("elimination scale", root),
        ("2d weight constructions", smolyak),
        ("laplacian-hermite tables", lap_hermite),
        ("integer stencil consistency", stencil_sum),
        ("1d fractional oracle", frac_1d),
        ("reference continuity", references),
    ]
    for name, fn in checks:
        try:
            ok, detail = fn()
        except (ArithmeticError, ValueError) as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        yield name, bool(ok), detail


def cmd_selftest(args) -> int:
    failed = 0
    start = time.perf_counter()
    for name, ok, detail in selftest_checks():
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    print(f"{failed} failure(s) in {time.perf_counter() - start:.2f}s")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isostencil", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *, integer=True, out=True):
        if integer:
            sp.add_argument("--nc", type=int, default=2)
            sp.add_argument("--nq", type=int, default=None)
            sp.add_argument("--a", type=float, default=None, help="grid scale (default: eliminating root)")
        if out:
            sp.add_argument("--out", default=None)
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    def integrator(sp):
        sp.add_argument("--method", choices=METHOD_LABELS, default="he-filon")
        sp.add_argument("--kg", type=int, default=None)
        sp.add_argument("--nf", type=int, default=None)
        sp.add_argument("--nt", type=int, default=None)
        sp.add_argument("--ngrid", type=int, default=None, help="Filon sample count (default: half-width)")

    sp = sub.add_parser("weights-1d", help="1D Hermite grid weights")
    sp.add_argument("--nq", type=int, required=True)
    sp.add_argument("--a", type=float, default=None)
    common(sp, integer=False)
    sp.set_defaults(func=cmd_weights_1d)

    sp = sub.add_parser("weights-2d", help="2D sparse grid weights")
    sp.add_argument("--nq", type=int, required=True)
    sp.add_argument("--a", type=float, default=None)
    sp.add_argument("--construction", choices=("implicit", "smolyak"), default="implicit")
    common(sp, integer=False)
    sp.set_defaults(func=cmd_weights_2d)

    sp = sub.add_parser("stencil", help="integer Laplacian stencil")
    sp.add_argument("--dim", type=int, choices=(1, 2), default=2)
    common(sp)
    sp.set_defaults(func=cmd_stencil)

    sp = sub.add_parser("frac-stencil", help="fractional Laplacian stencil")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--dim", type=int, choices=(1, 2), default=2)
    sp.add_argument("--half-width", type=int, required=True)
    common(sp)
    integrator(sp)
    sp.set_defaults(func=cmd_frac_stencil)

    sp = sub.add_parser("convergence", help="error table E_i and rates r_i on a disk benchmark")
    sp.add_argument("--problem", choices=("f1", "f2"), default="f1")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--levels", type=int, default=2)
    sp.add_argument("--nmax", type=int, default=128)
    common(sp)
    integrator(sp)
    sp.set_defaults(func=cmd_convergence, nq=4)

    sp = sub.add_parser("isotropy", help="error fields and annular isotropy scores")
    sp.add_argument("--problem", choices=("f1", "f2"), default="f1")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--nc", type=int, default=2)
    sp.add_argument("--nq-low", type=int, default=4)
    sp.add_argument("--nq-high", type=int, default=5)
    sp.add_argument("--out", default=None, help="directory for CSV/PGM fields")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    integrator(sp)
    sp.set_defaults(func=cmd_isotropy)

    sp = sub.add_parser("selftest", help="run the fast invariant checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (StencilError, FractionalError, BenchError, IntegratorError) as exc:
        # IntegratorError covers bad integrator settings (unknown method, eps out of range)
        print(f"isostencil: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ReferenceModelError, ArithmeticError) as exc:
        print(f"isostencil: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"isostencil: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
