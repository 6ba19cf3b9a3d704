"""Command-line front end.

Subcommands: grid, matrices, solve, sweep, lebesgue, divergence.  Numeric
output uses 17 significant digits so binary64 values round-trip losslessly.
Exit codes: 0 ok, 2 usage error, 3 solver non-convergence, 4 every sweep
point failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import analysis
from .barycentric import weights_switch
from .gegenbauer import GegenbauerBasis, ggr_nodes
from .maps import DomainMap, MapKind
from .operators import build_grdm, build_grim
from .problems import get_problem, problem_names
from .solver import SolverConfig, solve
from .transcription import transcribe

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_SWEEP_FAILED = 4


def _fmt(value) -> str:
    return format(float(value), ".17g")


def _timestamp_line() -> str:
    return f"# generated: {datetime.now(timezone.utc).isoformat()}"


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_csv(path, header, rows):
    stream, owned = _open_out(path)
    try:
        stream.write(_timestamp_line() + "\n")
        writer = csv.writer(stream)
        if header is not None:
            writer.writerow(header)
        writer.writerows(rows)
    finally:
        if owned:
            stream.close()


def _emit_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True)
    stream, owned = _open_out(path)
    try:
        stream.write(text + "\n")
    finally:
        if owned:
            stream.close()


def _check_alpha(parser, alpha: float):
    if not alpha > -0.5:
        parser.error(f"--alpha must be > -0.5, got {alpha}")


def _check_epsilon(parser, eps: float):
    if not (0.0 < eps < 1.0):
        parser.error(f"--epsilon must lie in (0, 1), got {eps}")


def _float_list(value: str) -> list[float]:
    return [float(v) for v in value.split(",") if v.strip()]


def _int_list(value: str) -> list[int]:
    return [int(v) for v in value.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ggrips",
        description="Gauss-Radau rational collocation for infinite-horizon control",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_grid = sub.add_parser("grid", help="dump nodes, quadrature weights, and barycentric weights")
    p_grid.add_argument("--n", type=int, required=True)
    p_grid.add_argument("--alpha", type=float, required=True)
    p_grid.add_argument("--epsilon", type=float, default=0.1)
    p_grid.add_argument("--format", choices=("csv", "json"), default="csv")
    p_grid.add_argument("--out", default=None)

    p_mat = sub.add_parser("matrices", help="dump the integration and differentiation matrices")
    p_mat.add_argument("--n", type=int, required=True)
    p_mat.add_argument("--alpha", type=float, required=True)
    p_mat.add_argument("--epsilon", type=float, default=0.1)
    p_mat.add_argument("--format", choices=("csv", "json"), default="csv")
    p_mat.add_argument("--out", default=None, help="file prefix; three files are written")

    p_solve = sub.add_parser("solve", help="solve one problem instance")
    p_solve.add_argument("--problem", required=True)
    p_solve.add_argument("--n", type=int, required=True)
    p_solve.add_argument("--alpha", type=float, required=True)
    p_solve.add_argument("--L", type=float, required=True)
    p_solve.add_argument("--map", choices=[k.value for k in MapKind], required=True)
    p_solve.add_argument("--guess", default="ones", choices=("ones", "half"))
    p_solve.add_argument("--epsilon", type=float, default=0.1)
    p_solve.add_argument("--out", default=None)
    _add_solver_flags(p_solve)

    p_sweep = sub.add_parser("sweep", help="run a sweep described by a JSON config")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None, help="CSV output path (default from config)")
    p_sweep.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p_leb = sub.add_parser("lebesgue", help="Lebesgue constants and their log fit")
    p_leb.add_argument("--alpha", type=_float_list, required=True,
                       help="comma-separated list")
    p_leb.add_argument("--n-min", type=int, default=5)
    p_leb.add_argument("--n-max", type=int, default=60)
    p_leb.add_argument("--format", choices=("csv", "json"), default="csv")
    p_leb.add_argument("--out", default=None)
    p_leb.add_argument("--emit", choices=("table", "plotdata"), default="table")

    p_div = sub.add_parser("divergence", help="error profile over growing grid sizes")
    p_div.add_argument("--problem", required=True)
    p_div.add_argument("--map", choices=[k.value for k in MapKind], required=True)
    p_div.add_argument("--alpha", type=float, required=True)
    p_div.add_argument("--L-list", type=_float_list, default=[0.25, 0.5, 1.0, 2.0])
    p_div.add_argument("--n-list", type=_int_list, default=[10, 20, 40, 80])
    p_div.add_argument("--out", default=None)
    p_div.add_argument("--emit", choices=("table", "plotdata"), default="table")
    _add_solver_flags(p_div)

    return parser


def _add_solver_flags(parser):
    group = parser.add_argument_group("solver")
    group.add_argument("--outer-tol", type=float, default=1e-12)
    group.add_argument("--inner-grad-tol", type=float, default=1e-9)
    group.add_argument("--max-outer", type=int, default=50)
    group.add_argument("--max-inner", type=int, default=500)
    group.add_argument("--penalty-init", type=float, default=10.0)
    group.add_argument("--penalty-growth", type=float, default=10.0)
    group.add_argument("--constraint-tol", type=float, default=1e-10)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        outer_tol=args.outer_tol,
        inner_grad_tol=args.inner_grad_tol,
        max_outer=args.max_outer,
        max_inner=args.max_inner,
        penalty_init=args.penalty_init,
        penalty_growth=args.penalty_growth,
        constraint_tol=args.constraint_tol,
    )


# -- subcommand bodies ------------------------------------------------------------


def _cmd_grid(parser, args) -> int:
    _check_alpha(parser, args.alpha)
    _check_epsilon(parser, args.epsilon)
    if args.n < 0:
        parser.error(f"--n must be nonnegative, got {args.n}")
    grid = ggr_nodes(GegenbauerBasis(args.alpha), args.n)
    weights = weights_switch(grid, args.epsilon)
    if args.format == "json":
        _emit_json(
            args.out,
            {
                "n": args.n,
                "alpha": args.alpha,
                "epsilon": args.epsilon,
                "nodes": grid.nodes.tolist(),
                "christoffel": grid.christoffel.tolist(),
                "xi": weights.xi.tolist(),
            },
        )
    else:
        rows = [
            (_fmt(t), _fmt(w), _fmt(x))
            for t, w, x in zip(grid.nodes, grid.christoffel, weights.xi)
        ]
        _write_csv(args.out, ("node", "christoffel", "xi"), rows)
    return EXIT_OK


def _cmd_matrices(parser, args) -> int:
    _check_alpha(parser, args.alpha)
    _check_epsilon(parser, args.epsilon)
    if args.n < 0:
        parser.error(f"--n must be nonnegative, got {args.n}")
    grid = ggr_nodes(GegenbauerBasis(args.alpha), args.n)
    weights = weights_switch(grid, args.epsilon)
    grim = build_grim(grid, weights)
    grdm = build_grdm(grid, weights)
    if args.format == "json":
        _emit_json(
            args.out,
            {
                "n": args.n,
                "alpha": args.alpha,
                "Q": grim.Q.tolist(),
                "D": grdm.D.tolist(),
                "qcost": grim.qcost.tolist(),
            },
        )
        return EXIT_OK
    matrices = {"Q": grim.Q, "D": grdm.D, "qcost": grim.qcost.reshape(1, -1)}
    if args.out:
        for label, mat in matrices.items():
            _write_csv(
                f"{args.out}_{label}.csv",
                None,
                [[_fmt(v) for v in row] for row in mat],
            )
    else:
        for label, mat in matrices.items():
            print(f"# {label}")
            for row in mat:
                print(",".join(_fmt(v) for v in row))
    return EXIT_OK


def _cmd_solve(parser, args) -> int:
    _check_alpha(parser, args.alpha)
    _check_epsilon(parser, args.epsilon)
    if args.n < 1:
        parser.error(f"--n must be at least 1 for a solve, got {args.n}")
    if args.L <= 0:
        parser.error(f"--L must be positive, got {args.L}")
    try:
        problem = get_problem(args.problem)
    except KeyError:
        parser.error(
            f"--problem must be one of: {', '.join(problem_names())}; got {args.problem!r}"
        )
    cfg = _solver_config(args)
    record, report, trans = analysis.run_point(
        problem, args.n, args.alpha, args.L, args.map, args.guess, cfg
    )
    payload = {
        "problem": problem.name,
        "n": args.n,
        "alpha": args.alpha,
        "L": args.L,
        "map": args.map,
        "guess": args.guess,
        "status": report.status.value,
        "J_n": report.cost,
        "outer_iters": report.outer_iters,
        "inner_iters": report.inner_iters_total,
        "max_constraint_violation": report.max_constraint_violation,
        "kkt_residual": report.kkt_residual,
    }
    if problem.exact is not None:
        traj = trans.recover(report.z_opt)
        nodes_err = analysis.error_report(traj, problem.exact, "nodes")
        uniform_err = analysis.error_report(traj, problem.exact, "uniform")
        payload["error"] = {
            "mae_xu_nodes": nodes_err.mae_xu,
            "mae_xu_uniform": uniform_err.mae_xu,
            "ae_j": nodes_err.ae_j,
            "J_exact": problem.exact.cost,
        }
    _emit_json(args.out, payload)
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def _cmd_sweep(parser, args) -> int:
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"--config could not be read: {exc}")
    try:
        problem = get_problem(config["problem"])
        axes = analysis.SweepAxes(
            n_values=config["n"],
            alpha_values=config["alpha"],
            L_values=config["L"],
            map_kinds=config.get("map", [MapKind.LOGARITHMIC.value]),
            guesses=config.get("guess", ["ones"]),
        )
    except KeyError as exc:
        parser.error(f"--config is missing required key {exc}")
    solver_cfg = SolverConfig(**config.get("solver", {}))
    out_path = args.out or config.get("out")
    error_grid = config.get("error_grid", "nodes")

    stream, owned = _open_out(out_path)
    stream.write(_timestamp_line() + "\n")
    writer = csv.writer(stream)
    writer.writerow(analysis.SweepRecord.CSV_FIELDS)

    def persist(record):
        writer.writerow(record.csv_row())
        stream.flush()

    try:
        result = analysis.sweep(
            problem,
            axes,
            solver_cfg,
            jobs=max(1, args.jobs),
            error_grid=error_grid,
            on_record=persist,
        )
    finally:
        if owned:
            stream.close()

    best = result.best_by_n()
    print("best point per n (by MAE):")
    for n in sorted(best):
        rec = best[n]
        print(
            f"  n={n:4d} alpha={rec.alpha:g} L={rec.L:g} map={rec.map_kind} "
            f"mae_xu={rec.mae_xu:.5e} ae_j={rec.ae_j:.5e}"
        )
    return EXIT_SWEEP_FAILED if result.all_failed else EXIT_OK


def _cmd_lebesgue(parser, args) -> int:
    for alpha in args.alpha:
        _check_alpha(parser, alpha)
    if args.n_min < 0 or args.n_max < args.n_min:
        parser.error("--n-min/--n-max must describe a nonempty range")
    n_values = list(range(args.n_min, args.n_max + 1))
    studies = [analysis.lebesgue_study(alpha, n_values) for alpha in args.alpha]
    if args.format == "json":
        _emit_json(args.out, {"studies": studies})
        return EXIT_OK
    if args.emit == "plotdata":
        rows = []
        for study in studies:
            rows.extend(
                (str(n), _fmt(lam)) for n, lam in zip(study["n"], study["lebesgue"])
            )
        _write_csv(args.out, ("x", "y"), rows)
        return EXIT_OK
    rows = []
    for study in studies:
        rows.extend(
            (_fmt(study["alpha"]), str(n), _fmt(lam))
            for n, lam in zip(study["n"], study["lebesgue"])
        )
    _write_csv(args.out, ("alpha", "n", "lebesgue"), rows)
    for study in studies:
        print(
            f"alpha={study['alpha']:g}: fit {study['c1']:.6g} + {study['c2']:.6g} ln n, "
            f"R^2={study['r_squared']:.4f}"
        )
    return EXIT_OK


def _cmd_divergence(parser, args) -> int:
    _check_alpha(parser, args.alpha)
    try:
        problem = get_problem(args.problem)
    except KeyError:
        parser.error(
            f"--problem must be one of: {', '.join(problem_names())}; got {args.problem!r}"
        )
    if sorted(args.n_list) != list(args.n_list):
        parser.error("--n-list must be ascending")
    cfg = _solver_config(args)
    all_rows = []
    for L in args.L_list:
        all_rows.extend(
            analysis.divergence_profile(problem, args.map, args.alpha, L, args.n_list, cfg)
        )
    if args.emit == "plotdata":
        best = {}
        for row in all_rows:
            cur = best.get(row.n)
            if cur is None or (not np.isnan(row.mae_xu) and row.mae_xu < cur.mae_xu):
                best[row.n] = row
        rows = [(str(n), _fmt(best[n].mae_xu)) for n in sorted(best)]
        _write_csv(args.out, ("x", "y"), rows)
        return EXIT_OK
    rows = [
        (
            str(r.n),
            _fmt(r.L),
            r.map_kind,
            r.status,
            _fmt(r.mae_xu),
            _fmt(r.ae_j),
            _fmt(r.max_tprime),
            _fmt(r.min_gap),
        )
        for r in all_rows
    ]
    _write_csv(
        args.out,
        ("n", "L", "map", "status", "mae_xu", "ae_j", "max_tprime", "min_gap"),
        rows,
    )
    return EXIT_OK


_COMMANDS = {
    "grid": _cmd_grid,
    "matrices": _cmd_matrices,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "lebesgue": _cmd_lebesgue,
    "divergence": _cmd_divergence,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](parser, args)


if __name__ == "__main__":
    sys.exit(main())
