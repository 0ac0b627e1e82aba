"""Command-line interface: solve-ivp, eigs, convert-sl.

Exit codes: 0 success, 2 schema/expression errors, 3 numeric failures
(the failing error class is printed).  The environment variable
``SPPS_SEED`` overrides the problem file's random seed.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import problems
from .errors import ParseError, SchemaError, SppsError, TruncationWarning
from .grid import GridFn
from .homogeneous import particular_solution
from .oracle import dirac_matrix, general_matrix, integrate_linear_system
from .powers import truncation_bound
from .spectral import SpectrumResult, SweepOptions, sweep_spectrum
from .spps import evaluate_solutions, solution_pair, solve_ivp
from .sturm import sl_particular_solution, sl_to_dirac
from .system import reduce_general


def _parse_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValueError(f"expected RE or RE,IM, got {text!r}")


def _write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as handle:
            handle.write(text)


def _solution_csv(u: GridFn, v: GridFn) -> str:
    lines = ["x,re_u,im_u,re_v,im_v"]
    xs = u.mesh.nodes()
    for x, uu, vv in zip(xs, u.values, v.values):
        lines.append(
            f"{x:.17g},{uu.real:.17g},{uu.imag:.17g},{vv.real:.17g},{vv.imag:.17g}"
        )
    return "\n".join(lines) + "\n"


def _effective_seed(options: problems.ProblemOptions, cli_seed: int | None) -> int:
    env = os.environ.get("SPPS_SEED")
    if env is not None:
        return int(env)
    if cli_seed is not None:
        return cli_seed
    return options.seed


def _cmd_solve_ivp(args) -> int:
    loaded = problems.load_problem(
        args.problem, mesh_override=args.mesh, truncation_override=args.truncation
    )
    if loaded.kind == "sturm-liouville":
        raise SchemaError("solve-ivp expects a dirac or general problem")
    if loaded.mesh_note:
        print(loaded.mesh_note, file=sys.stderr)
    seed = _effective_seed(loaded.options, args.seed)
    lam = _parse_complex(args.lam)
    y1 = _parse_complex(args.y1)
    y2 = _parse_complex(args.y2)

    gauge = None
    if loaded.kind == "general":
        system, gauge_weight = reduce_general(loaded.general)
        gauge = gauge_weight.w
    else:
        system = loaded.dirac

    sol = particular_solution(
        system.P, seed=seed,
        candidates=loaded.options.candidates,
        truncation=loaded.options.truncation,
    )
    pair = solution_pair(system, sol, loaded.options.truncation)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        if gauge is not None:
            # Initial values apply to the original unknown Y = w U.
            w0 = gauge.values[0]
            u, v = solve_ivp(pair, lam, (y1 / w0, y2 / w0))
            u, v = u * gauge, v * gauge
        else:
            u, v = solve_ivp(pair, lam, (y1, y2))
    offset = abs(lam - pair.lambda0)
    bound = truncation_bound(pair.bounds, pair.table.order, pair.table.radius, offset)
    print(
        f"truncation tail bound at |lambda-center| = {offset:.6g}: {bound:.3e}",
        file=sys.stderr,
    )
    for warning in caught:
        print(f"warning: {warning.message}", file=sys.stderr)

    if args.oracle_check:
        matrix = general_matrix(loaded.general) if loaded.kind == "general" else dirac_matrix(system)
        reference = integrate_linear_system(matrix, lam, (y1, y2), loaded.mesh)
        deviation = max(
            float(np.abs(u.values - reference.u.values).max()),
            float(np.abs(v.values - reference.v.values).max()),
        )
        scale = max(u.abs_max(), v.abs_max(), 1e-300)
        print(f"oracle max deviation: {deviation:.3e} (scale {scale:.3e})", file=sys.stderr)
        if deviation > 1e-6 * scale:
            raise SppsError(
                f"oracle check failed: deviation {deviation:.3e} > 1e-6 * {scale:.3e}"
            )

    _write_output(_solution_csv(u, v), args.out)
    return 0


def _squared_result(result: SpectrumResult) -> SpectrumResult:
    rows = [
        type(rec)(
            n=rec.n,
            lam=rec.lam * rec.lam,
            center=rec.center,
            residual=rec.residual,
            stability_gap=rec.stability_gap,
        )
        for rec in result.eigenvalues
    ]
    return SpectrumResult(rows, list(result.warnings))


def _cmd_eigs(args) -> int:
    loaded = problems.load_problem(
        args.problem, mesh_override=args.mesh, truncation_override=args.truncation
    )
    if loaded.mesh_note:
        print(loaded.mesh_note, file=sys.stderr)
    seed = _effective_seed(loaded.options, args.seed)
    opts = SweepOptions(
        order=loaded.options.truncation,
        seed=seed,
        candidates=loaded.options.candidates,
        shift=not args.no_shift,
    )

    if loaded.kind == "sturm-liouville":
        if args.n_min < 0:
            raise SchemaError(
                "Sturm-Liouville eigenvalues are indexed from 0; use --n-min >= 0"
            )
        u0, u0_prime = sl_particular_solution(
            loaded.sl.p, loaded.sl.q, seed=seed, candidates=loaded.options.candidates
        )
        bridge = sl_to_dirac(loaded.sl, u0, u0_prime)
        result = sweep_spectrum(
            bridge.system, bridge.boundary, args.n_min, args.n_max, opts
        )
        result = _squared_result(result)
    else:
        if loaded.kind == "general":
            system, _ = reduce_general(loaded.general)
        else:
            system = loaded.dirac
        result = sweep_spectrum(system, loaded.boundary, args.n_min, args.n_max, opts)

    for note in result.warnings:
        print(f"warning: {note}", file=sys.stderr)
    text = result.to_json() if args.format == "json" else result.to_csv()
    _write_output(text, args.out)
    return 0


def _cmd_convert_sl(args) -> int:
    loaded = problems.load_problem(args.problem, mesh_override=args.mesh)
    if loaded.kind != "sturm-liouville":
        raise SchemaError("convert-sl expects a sturm-liouville problem")
    if loaded.mesh_note:
        print(loaded.mesh_note, file=sys.stderr)
    seed = _effective_seed(loaded.options, args.seed)
    u0, u0_prime = sl_particular_solution(
        loaded.sl.p, loaded.sl.q, seed=seed, candidates=loaded.options.candidates
    )
    bridge = sl_to_dirac(loaded.sl, u0, u0_prime)
    text = problems.emit_dirac_problem(
        loaded.mesh,
        bridge.system,
        bridge.boundary,
        problems.ProblemOptions(
            mesh_points=loaded.mesh.m,
            truncation=loaded.options.truncation,
            seed=seed,
            candidates=loaded.options.candidates,
        ),
        seed_solution={"u0": bridge.u0, "u0_prime": bridge.u0_prime},
    )
    _write_output(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diracspps",
        description="Power-series solver for 2x2 first-order spectral problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", help="problem file (JSON)")
    common.add_argument("--mesh", type=int, default=None, help="override mesh node count")
    common.add_argument("--truncation", type=int, default=None, help="override series order")
    common.add_argument("--seed", type=int, default=None, help="override random seed")
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    ivp = sub.add_parser("solve-ivp", parents=[common], help="solve an initial value problem")
    ivp.add_argument("--lambda", dest="lam", required=True, help="spectral parameter RE[,IM]")
    ivp.add_argument("--y1", required=True, help="initial value of the first component RE[,IM]")
    ivp.add_argument("--y2", required=True, help="initial value of the second component RE[,IM]")
    ivp.add_argument(
        "--oracle-check", action="store_true",
        help="cross-check against the reference integrator",
    )
    ivp.set_defaults(func=_cmd_solve_ivp)

    eigs = sub.add_parser("eigs", parents=[common], help="compute eigenvalues")
    eigs.add_argument("--n-min", type=int, required=True, help="lowest eigenvalue index")
    eigs.add_argument("--n-max", type=int, required=True, help="highest eigenvalue index")
    eigs.add_argument(
        "--no-shift", action="store_true",
        help="only roots of the center-0 expansion (no re-centering)",
    )
    eigs.add_argument("--format", choices=("csv", "json"), default="csv")
    eigs.set_defaults(func=_cmd_eigs)

    conv = sub.add_parser(
        "convert-sl", parents=[common],
        help="emit the equivalent Dirac problem for a Sturm-Liouville file",
    )
    conv.set_defaults(func=_cmd_convert_sl)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SppsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
