"""Command-line interface.

Exit codes
----------
0  success
1  any other failure
2  usage error
3  a matrix file could not be parsed
4  the solve did not converge within its budget
5  the solve diverged (non-finite residual)
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import logging
import math
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .controller import PdParams, pdgmres_solve, preset
from .errors import DivergenceError, FactorizationError, MatrixMarketError
from .krylov import SolveTrace, gmres_restarted
from .matio import read_matrix_market, save_matrix_market
from .precond import ilu0_factor
from .problems import acceptance_suite, convection_diffusion_2d, laplacian_2d
from .quadtree import ParamDomain, QuadtreeResult, Sample, render
from .runtime_model import (
    DEFAULT_SAMPLE_DIMS,
    PENALTY,
    RuntimeModel,
    ToleranceWindow,
    calibrate,
    synthetic_model,
    trace_cost,
)
from .tuner import (
    DEFAULT_TIERS,
    Problem,
    ResolutionBudget,
    TuningConfig,
    budget_resolution,
    geometric_mean,
    run_procedure,
)

log = logging.getLogger("pdgmres")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NOT_CONVERGED = 4
EXIT_DIVERGED = 5


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _write(path: Path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(data)


def _write_manifest(out: Path, command: str, args: argparse.Namespace):
    resolved = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    manifest = {
        "command": command,
        "arguments": resolved,
        "config_file": str(args.config) if getattr(args, "config", None) else None,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _write(out / "manifest.json", _dump_json(manifest))


def _load_matrix(path):
    return read_matrix_market(path)


def _unique_names(paths) -> list[str]:
    names, seen = [], {}
    for p in paths:
        stem = Path(p).stem
        k = seen.get(stem, 0)
        seen[stem] = k + 1
        names.append(stem if k == 0 else f"{stem}_{k}")
    return names


def _window(args) -> ToleranceWindow:
    return ToleranceWindow(args.window_max, args.window_min)


def _model_for(args, matrix, name) -> RuntimeModel | None:
    if args.synthetic:
        return synthetic_model(matrix, name)
    model_path = getattr(args, "model", None)
    if model_path:
        return RuntimeModel.load(model_path)
    model_dir = getattr(args, "model_dir", None)
    if model_dir:
        path = Path(model_dir) / f"{name}.json"
        if path.exists():
            return RuntimeModel.load(path)
    return None


def _precond(args, matrix, name, notes: dict):
    if not args.ilu0:
        return None
    try:
        return ilu0_factor(matrix)
    except FactorizationError as exc:
        log.warning("%s: ILU(0) failed (%s); solving unpreconditioned", name, exc)
        notes[name] = f"ilu0 failed: {exc}"
        return None


def _explicit_params(args) -> PdParams:
    if args.params:
        vals = args.params
        if len(vals) != 5:
            raise UsageError("--params needs m_init,m_min,m_step,alpha_p,alpha_d")
        base = PdParams(int(vals[0]), int(vals[1]), int(vals[2]), vals[3], vals[4])
    else:
        try:
            base = preset(args.preset)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.m_max is not None:
        base = PdParams(base.m_init, base.m_min, base.m_step, base.alpha_p, base.alpha_d, args.m_max)
    return base


def trace_csv(trace: SolveTrace) -> str:
    """Residual history: ``inner,residual_norm,cycle,m``; row 0 is the initial residual."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["inner", "residual_norm", "cycle", "m"])
    w.writerow([0, repr(trace.inner_residual_norms[0]), "", ""])
    for (j, k, m), r in zip(trace.cycle_of_inner(), trace.inner_residual_norms[1:]):
        w.writerow([j, repr(r), k, m])
    return buf.getvalue()


# ---------------------------------------------------------------- solve


def cmd_solve(args) -> int:
    matrix = _load_matrix(args.matrix)
    name = Path(args.matrix).stem
    notes: dict = {}
    pc = _precond(args, matrix, name, notes)
    b = np.ones(matrix.n_rows)
    try:
        if args.fixed_restart is not None:
            label = f"GMRES({args.fixed_restart})"
            trace = gmres_restarted(
                matrix, b, args.fixed_restart, args.tol, args.budget, pc, relative=args.relative
            )
        else:
            params = _explicit_params(args)
            label = f"PD-GMRES{tuple(params.as_dict().values())}"
            trace = pdgmres_solve(matrix, b, params, args.tol, args.budget, pc, relative=args.relative)
    except DivergenceError as exc:
        print(f"diverged: {exc}")
        return EXIT_DIVERGED

    lines = [
        f"solver: {label}",
        f"converged: {'yes' if trace.converged else 'no'}",
        f"inner_iterations: {trace.total_inner_iterations}",
        f"restarts: {trace.restarts}",
        f"resets: {trace.resets}",
        f"final_residual: {trace.final_residual_norm:.6e}",
    ]
    if notes:
        lines.append(f"note: {notes[name]}")
    model = _model_for(args, matrix, name)
    cost = None
    if model is not None:
        cost = trace_cost(trace, model, _window(args))
        lines.append(f"heuristic_cost: {cost:.6e}")
    print("\n".join(lines))

    if args.out:
        out = Path(args.out)
        _write(out / "trace.csv", trace_csv(trace))
        summary = {
            "matrix": name,
            "solver": label,
            "converged": trace.converged,
            "stagnated": trace.stagnated,
            "inner_iterations": trace.total_inner_iterations,
            "restarts": trace.restarts,
            "resets": trace.resets,
            "restart_params": trace.restart_params,
            "final_residual": trace.final_residual_norm,
            "heuristic_cost": cost,
            "notes": notes,
        }
        _write(out / "report.json", _dump_json(summary))
        _write_manifest(out, "solve", args)
    return EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------- calibrate


def cmd_calibrate(args) -> int:
    matrix = _load_matrix(args.matrix)
    name = Path(args.matrix).stem
    if args.synthetic:
        model = synthetic_model(matrix, name)
    else:
        dims = [d for d in args.dims if d <= matrix.n_rows]
        model = calibrate(matrix, dims, args.trials, name=name)
    text = model.to_json()
    if args.out:
        path = Path(args.out)
        if path.suffix != ".json":
            path = path / f"{name}.json"
        _write(path, text)
        log.info("wrote %s", path)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- tune


def _problems(args, notes: dict) -> list[Problem]:
    problems = []
    for path, name in zip(args.matrices, _unique_names(args.matrices)):
        try:
            matrix = _load_matrix(path)
        except (MatrixMarketError, OSError) as exc:
            log.warning("skipping %s: %s", path, exc)
            notes[name] = f"unreadable: {exc}"
            continue
        model = _model_for(args, matrix, name)
        if model is None:
            log.info("calibrating %s", name)
            model = calibrate(matrix, [d for d in DEFAULT_SAMPLE_DIMS if d <= matrix.n_rows], name=name)
        problems.append(Problem(name, matrix, model, _precond(args, matrix, name, notes)))
    if not problems:
        raise MatrixMarketError("no readable matrix")
    return problems


def _quadtree_dict(r: QuadtreeResult) -> dict:
    return {
        "depth": r.depth,
        "domain": r.domain.as_dict(),
        "ratios": list(r.ratios),
        "q": r.q.tolist(),
        "penalized": r.penalized_mask.astype(int).tolist(),
        "owner": r.owner.tolist(),
        "samples": [[s.u, s.v, s.value, s.level, s.penalized] for s in r.samples],
        "evaluations_per_level": list(r.evaluations_per_level),
    }


def _quadtree_from_dict(d: dict) -> QuadtreeResult:
    return QuadtreeResult(
        depth=int(d["depth"]),
        domain=ParamDomain(**d["domain"]),
        ratios=tuple(d["ratios"]),
        q=np.array(d["q"], dtype=np.float64),
        penalized_mask=np.array(d["penalized"], dtype=bool),
        owner=np.array(d["owner"], dtype=np.int64),
        samples=[Sample(float(u), float(v), float(x), int(lv), bool(p)) for u, v, x, lv, p in d["samples"]],
        evaluations_per_level=list(d.get("evaluations_per_level", [])),
    )


def _emit_quadtree(out: Path, stem: str, r: QuadtreeResult, factor: float):
    img = render(r, factor, cell_px=4)
    _write(out / f"{stem}.ppm", img.ppm)
    _write(out / f"{stem}.pgm", img.pgm)
    _write(out / f"{stem}.csv", img.csv)
    _write(out / f"{stem}.json", _dump_json(_quadtree_dict(r)))


def _tuning_config(args) -> TuningConfig:
    if args.quadrant == "positive":
        alpha = ParamDomain(0.0, 40.0, 0.0, 40.0)
    else:
        alpha = ParamDomain(-40.0, 0.0, 0.0, 40.0)
    if args.ratios is not None:
        resolution = ResolutionBudget(len(args.ratios), args.ratios)
    elif args.depth is not None and args.depth != 6:
        resolution = ResolutionBudget(args.depth, (1.0,) * min(args.depth, 2) + (0.25,) * max(args.depth - 2, 0))
    else:
        resolution = DEFAULT_TIERS[1]
    return TuningConfig(
        m_init_candidates=tuple(args.m_init),
        cycles=args.cycles,
        alpha_domain=alpha,
        initial_m_min=args.initial_m_min,
        initial_m_step=args.initial_m_step,
        resolution=resolution,
        window=_window(args),
        m_max=args.m_max,
        iteration_budget=args.budget,
    )


def cmd_tune(args) -> int:
    notes: dict = {}
    problems = _problems(args, notes)
    config = _tuning_config(args)
    probes = None
    if args.time_budget is not None:
        tiers = DEFAULT_TIERS if config.resolution.depth == 6 else (config.resolution,)
        budgets, probes = budget_resolution(
            problems, args.time_budget, args.probe_points, config=config, tiers=tiers, seed=args.seed
        )
        config.budgets = budgets
    report = run_procedure(problems, config)
    report.probes = probes
    data = report.to_dict()
    data["notes"] = dict(sorted(notes.items()))
    data["seed"] = args.seed

    winner = report.winner
    print("winner: " + ", ".join(f"{k}={v}" for k, v in winner.as_dict().items()))
    for m_init, g in report.final_geomeans.items():
        print(f"m_init={m_init}: geomean {g:.4f}  trajectory " + " ".join(f"{t:.4f}" for t in report.trajectories[m_init]))

    if args.out:
        out = Path(args.out)
        _write(out / "report.json", _dump_json(data))
        rows = [["matrix", "planned_depth", "planned_evaluations", "samples", "solves", "model_cost"]]
        for name, acc in sorted(report.accounting.items()):
            b = report.budgets[name]
            rows.append([name, b.depth, b.planned, acc["samples"], acc["solves"], repr(acc["model_cost"])])
        _write(out / "accounting.csv", _csv(rows))
        traj = [["m_init", "step", "which", "geomean"]]
        for c in report.candidates:
            for i, (s, t) in enumerate(zip(c.steps, report.trajectories[c.m_init]), start=1):
                traj.append([c.m_init, i, s.which, repr(t)])
        _write(out / "trajectory.csv", _csv(traj))
        for c in report.candidates:
            for i, s in enumerate(c.steps, start=1):
                stem = f"m{c.m_init}_step{i}_{s.which}"
                _emit_quadtree(out / "quadtrees", f"{stem}_aggregate", s.aggregate, args.scale_max)
                if args.per_matrix:
                    for name, r in s.per_matrix.items():
                        _emit_quadtree(out / "quadtrees", f"{stem}_{name}", r, args.scale_max)
        _write_manifest(out, "tune", args)
    return EXIT_OK


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- compare


def _parse_solver(spec: str):
    """``preset:NAME``, ``gmres:M`` or ``pd:m_init,m_min,m_step,alpha_p,alpha_d[,m_max]``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "preset":
            return spec, preset(rest)
        if kind == "gmres":
            m = int(rest)
            if m < 1:
                raise ValueError
            return spec, m
        if kind == "pd":
            v = _float_list(rest)
            if len(v) not in (5, 6):
                raise ValueError
            return spec, PdParams(int(v[0]), int(v[1]), int(v[2]), v[3], v[4], int(v[5]) if len(v) == 6 else None)
    except (ValueError, argparse.ArgumentTypeError):
        pass
    raise UsageError(f"bad solver specification {spec!r}")


def compare_table(costs: dict[str, dict[str, float]], labels: list[str]):
    """Normalize each row by its first column and take column-wise geometric means.

    Rows where the first configuration or the column's configuration failed
    are left out of that column's mean.
    """
    ratios: dict[str, dict[str, float]] = {}
    for name, row in costs.items():
        base = row[labels[0]]
        ratios[name] = {
            l: (row[l] / base if base < PENALTY and row[l] < PENALTY else math.nan) for l in labels
        }
    means = {}
    for l in labels:
        vals = [r[l] for r in ratios.values() if not math.isnan(r[l])]
        means[l] = geometric_mean(vals) if vals else math.nan
    return ratios, means


def cmd_compare(args) -> int:
    solvers = [_parse_solver(s) for s in args.solver]
    if len(solvers) < 2:
        raise UsageError("compare needs at least two --solver entries")
    labels = [label for label, _ in solvers]
    if len(set(labels)) != len(labels):
        raise UsageError("duplicate --solver entries")
    notes: dict = {}
    problems = _problems(args, notes)
    window = _window(args)
    costs: dict[str, dict[str, float]] = {}
    for p in problems:
        b = np.ones(p.matrix.n_rows)
        row = {}
        for label, solver in solvers:
            try:
                if isinstance(solver, int):
                    trace = gmres_restarted(p.matrix, b, solver, window.tol_min, args.budget, p.precond)
                else:
                    params = solver
                    if args.m_max is not None and params.m_max is None:
                        params = PdParams(params.m_init, params.m_min, params.m_step, params.alpha_p, params.alpha_d, args.m_max)
                    trace = pdgmres_solve(p.matrix, b, params, window.tol_min, args.budget, p.precond)
                row[label] = trace_cost(trace, p.model, window)
            except DivergenceError:
                row[label] = PENALTY
        costs[p.name] = row
    ratios, means = compare_table(costs, labels)

    rows = [["matrix"] + labels]
    for name in costs:
        rows.append([name] + [_fmt_ratio(ratios[name][l]) for l in labels])
    rows.append(["geomean"] + [_fmt_ratio(means[l]) for l in labels])
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())

    if args.out:
        out = Path(args.out)
        _write(out / "compare.csv", _csv(rows))
        raw = [["matrix"] + labels] + [[n] + [repr(costs[n][l]) for l in labels] for n in costs]
        _write(out / "costs.csv", _csv(raw))
        _write(
            out / "report.json",
            _dump_json({"costs": costs, "geomeans": {l: _nan_none(means[l]) for l in labels}, "notes": notes}),
        )
        _write_manifest(out, "compare", args)
    return EXIT_OK


def _fmt_ratio(x: float) -> str:
    return "-" if math.isnan(x) else f"{x:.4f}"


def _nan_none(x: float):
    return None if math.isnan(x) else x


# ---------------------------------------------------------------- render


def cmd_render(args) -> int:
    with open(args.quadtree) as fh:
        result = _quadtree_from_dict(json.load(fh))
    img = render(result, args.scale_max, cell_px=args.cell_px)
    out = Path(args.out) if args.out else Path(args.quadtree).with_suffix("")
    stem = out.name
    _write(out.with_name(stem + ".ppm"), img.ppm)
    _write(out.with_name(stem + ".pgm"), img.pgm)
    _write(out.with_name(stem + ".csv"), img.csv)
    print(f"wrote {out.with_name(stem + '.ppm')}")
    return EXIT_OK


# ---------------------------------------------------------------- generate


def cmd_generate(args) -> int:
    out = Path(args.out or ".")
    if args.kind == "suite":
        mats = acceptance_suite()
    elif args.kind == "laplacian":
        mats = {f"lap{args.size}": laplacian_2d(args.size)}
    else:
        mats = {f"cd{args.size}": convection_diffusion_2d(args.size, args.peclet_x, args.peclet_y)}
    out.mkdir(parents=True, exist_ok=True)
    for name, m in mats.items():
        save_matrix_market(out / f"{name}.mtx", m)
        print(out / f"{name}.mtx")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _shared(p: argparse.ArgumentParser, solver=True):
    p.add_argument("--config", help="JSON file with option defaults (flags override it)")
    p.add_argument("--out", help="output directory (or file for calibrate)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--synthetic", action="store_true", help="use the flop-count runtime model")
    p.add_argument("--window-max", type=float, default=1e-3)
    p.add_argument("--window-min", type=float, default=1e-9)
    if solver:
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--budget", type=int, default=None, help="cap on total inner iterations")
        p.add_argument("--m-max", type=int, default=None)
        p.add_argument("--ilu0", action="store_true", help="right ILU(0) preconditioning")
        p.add_argument("--preset", default="optimized")
        p.add_argument("--model", help="runtime model JSON file")
        p.add_argument("--model-dir", help="directory of <matrix>.json runtime models")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdgmres", description="PD-GMRES solver and parameter tuner")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve Mx = ones with PD-GMRES or GMRES(m)")
    p.add_argument("matrix")
    _shared(p)
    p.add_argument("--params", type=_float_list, help="m_init,m_min,m_step,alpha_p,alpha_d")
    p.add_argument("--fixed-restart", type=int, default=None, metavar="M")
    p.add_argument("--relative", action="store_true", help="tolerance relative to ||b||")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("calibrate", help="fit the runtime model of one matrix")
    p.add_argument("matrix")
    _shared(p, solver=False)
    p.add_argument("--dims", type=_int_list, default=list(DEFAULT_SAMPLE_DIMS))
    p.add_argument("--trials", type=int, default=5)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("tune", help="optimize PD-GMRES parameters on a matrix set")
    p.add_argument("matrices", nargs="+")
    _shared(p)
    p.add_argument("--m-init", type=_int_list, default=[10, 20, 30])
    p.add_argument("--cycles", type=int, default=3)
    p.add_argument("--quadrant", choices=("negative", "positive"), default="negative")
    p.add_argument("--initial-m-min", type=int, default=10)
    p.add_argument("--initial-m-step", type=int, default=5)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--ratios", type=_float_list, default=None)
    p.add_argument("--time-budget", type=float, default=None, help="model-cost budget for resolution tiers")
    p.add_argument("--probe-points", type=int, default=5)
    p.add_argument("--scale-max", type=float, default=1.5)
    p.add_argument("--per-matrix", action="store_true", help="also emit every per-matrix quadtree")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("compare", help="compare solver configurations on a matrix set")
    p.add_argument("matrices", nargs="+")
    _shared(p)
    p.add_argument(
        "--solver",
        action="append",
        default=[],
        help="preset:NAME, gmres:M or pd:m_init,m_min,m_step,alpha_p,alpha_d[,m_max]; repeat",
    )
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("render", help="render a saved quadtree JSON to PPM/PGM/CSV")
    p.add_argument("quadtree")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--scale-max", type=float, default=1.5)
    p.add_argument("--cell-px", type=int, default=4)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("generate", help="write generated test matrices")
    p.add_argument("kind", choices=("suite", "laplacian", "convdiff"))
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--peclet-x", type=float, default=0.5)
    p.add_argument("--peclet-y", type=float, default=0.25)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv):
    """Parse twice: the config file sets defaults, explicit flags override them."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except UsageError as exc:
        print(f"pdgmres: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"pdgmres: error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pdgmres: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MatrixMarketError as exc:
        print(f"pdgmres: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DivergenceError as exc:
        print(f"pdgmres: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except Exception as exc:  # keep the documented exit code contract
        log.debug("unhandled error", exc_info=True)
        print(f"pdgmres: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
