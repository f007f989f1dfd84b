"""Command-line front end.

Exit codes: 0 success or certified, 1 certificate failure or not certified,
2 solver failure, 3 input error.
"""
import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import _accel
from .adaptivity import AdaptiveOptions, Status, adaptive_certify
from .certificate import certify, certify_2d_global
from .config import RunConfig, load_config
from .errors import (
    CoefficientBoundsViolation,
    LinearSolveFailure,
    NonlinearSolveFailure,
    QuasiFEMError,
)
from .fem import error_norms, read_field_csv, write_field_csv, write_vtk
from .geometry import check_regularity, generate_mesh, is_conforming, read_mesh, refine_uniform, write_mesh
from .models import ProblemSpec, builtin_model, constant_source, counterexample_1d, counterexample_2d
from .models import manufactured_problem
from .solver import SolverOptions, picard_solve

log = logging.getLogger("quasifem")

EXIT_OK, EXIT_UNCERTIFIED, EXIT_SOLVER, EXIT_INPUT = 0, 1, 2, 3
_GENERATORS = ("interval", "equilateral", "square")


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _dumps(obj):
    # repr-based float output round-trips bit for bit
    return json.dumps(obj, default=_json_default, sort_keys=False)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _write_jsonl(path, rows):
    with open(path, "w") as fh:
        for r in rows:
            fh.write(_dumps(r) + "\n")


def load_mesh(spec):
    if spec is None:
        return None
    first = spec.split()[0].lower() if spec.split() else ""
    if first in _GENERATORS:
        try:
            return generate_mesh(spec)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    path = Path(spec)
    if not path.is_file():
        raise InputError(f"mesh file not found: {spec}")
    return read_mesh(path)


def solver_options(cfg):
    try:
        return SolverOptions(
            linear_tol=cfg.linear_tol,
            linear_max_iter=cfg.linear_max_iter,
            nonlinear_tol=cfg.nonlinear_tol,
            nonlinear_max_iter=cfg.nonlinear_max_iter,
            damping=cfg.damping,
            quad_order=cfg.quad_order,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def build_problem(cfg):
    mesh = load_mesh(cfg.mesh)
    if cfg.problem:
        return manufactured_problem(cfg.problem, mesh)
    if mesh is None:
        raise InputError("need either problem = <id> or a mesh")
    g = float(cfg.dirichlet)
    return ProblemSpec(
        mesh,
        builtin_model(cfg.model),
        constant_source(cfg.source),
        neumann=float(cfg.neumann),
        dirichlet=(lambda x: np.full(len(x), g)) if g else None,
        name="config",
    )


def certificate_constants(cfg):
    if cfg.k_alpha is not None and cfg.lipschitz is not None:
        return cfg.k_alpha, cfg.lipschitz
    model = manufactured_problem(cfg.problem).model if cfg.problem else builtin_model(cfg.model)
    return (cfg.k_alpha if cfg.k_alpha is not None else model.k_alpha,
            cfg.lipschitz if cfg.lipschitz is not None else model.lipschitz)


def _outdir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_field(field, out, cell_data=None):
    write_vtk(field, out / "field.vtk", cell_data=cell_data)
    write_field_csv(field, out / "field.csv")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_solve(cfg):
    problem = build_problem(cfg)
    out = _outdir(cfg)
    try:
        u, report = picard_solve(problem, solver_options(cfg))
    except (NonlinearSolveFailure, LinearSolveFailure, CoefficientBoundsViolation) as exc:
        rows = exc.report.as_records() if getattr(exc, "report", None) else []
        _write_jsonl(out / "solve_report.jsonl", rows + [{"error": str(exc)}])
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _write_field(u, out)
    _write_jsonl(out / "solve_report.jsonl", report.as_records())
    print(_dumps({"converged": True, "iterations": report.iterations, "vertices": problem.mesh.n_vertices}))
    return EXIT_OK


def cmd_certify(cfg):
    mesh = load_mesh(cfg.mesh)
    if mesh is None:
        raise InputError("certify needs --mesh")
    if cfg.field is None or not Path(cfg.field).is_file():
        raise InputError(f"field file not found: {cfg.field}")
    u = read_field_csv(cfg.field, mesh)
    k_alpha, lipschitz = certificate_constants(cfg)
    cert = certify(u, k_alpha, lipschitz)
    out = _outdir(cfg)
    (out / "certificate.csv").write_text(cert.to_csv())
    summary = cert.summary()
    if mesh.dim == 2 and cfg.t_min is not None:
        ok, bound = certify_2d_global(u, k_alpha, lipschitz, cfg.t_min)
        summary.update(global_bound=bound, global_bound_pass=ok)
    print(_dumps(summary))
    return EXIT_OK if cert.passed else EXIT_UNCERTIFIED


def cmd_adapt(cfg):
    problem = build_problem(cfg)
    out = _outdir(cfg)
    try:
        opts = AdaptiveOptions(
            rounds=cfg.rounds if cfg.rounds is not None else 20,
            strategy=cfg.strategy,
            theta=cfg.theta,
            budget=cfg.budget,
            solver=solver_options(cfg),
            t_min=cfg.t_min,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if cfg.budget < problem.mesh.n_elements:
        raise InputError("budget is below the initial element count")
    result = adaptive_certify(problem, opts)
    _write_jsonl(out / "history.jsonl", [r.as_dict() for r in result.history] + [result.summary()])
    if result.field is not None:
        write_mesh(result.field.mesh, out / "mesh.txt")
        _write_field(result.field, out)
        (out / "certificate.csv").write_text(result.certificate.to_csv())
    print(_dumps(result.summary()))
    if result.status == Status.CERTIFIED:
        return EXIT_OK
    return EXIT_SOLVER if result.status == Status.SOLVE_FAILED else EXIT_UNCERTIFIED


def cmd_counterexample(cfg):
    if cfg.k is None:
        raise InputError("counterexample needs --k")
    if cfg.dim not in (1, 2):
        raise InputError("--dim must be 1 or 2")
    analysis = (counterexample_1d if cfg.dim == 1 else counterexample_2d)(cfg.k, cfg.u1)
    print(_dumps(analysis.as_dict()))
    return EXIT_UNCERTIFIED if analysis.violated else EXIT_OK


def convergence_study(problem, levels, quad_order=2, opts=None):
    """Uniform refinement study; returns table rows with h, errors and observed rates."""
    rows = []
    mesh = problem.mesh
    for level in range(levels):
        if level:
            mesh = refine_uniform(mesh)
        u, _ = picard_solve(problem.with_mesh(mesh), opts)
        l2, h1 = error_norms(u, problem.exact, problem.exact_grad)
        h = float(mesh.h.max()) if mesh.dim == 1 else float(mesh.geometry[1].max())
        row = {"level": level, "elements": mesh.n_elements, "h": h, "l2": l2, "h1": h1,
               "l2_rate": None, "h1_rate": None}
        if rows:
            prev = rows[-1]
            r = math.log(prev["h"] / h)
            if l2 > 0 and prev["l2"] > 0:
                row["l2_rate"] = math.log(prev["l2"] / l2) / r
            if h1 > 0 and prev["h1"] > 0:
                row["h1_rate"] = math.log(prev["h1"] / h1) / r
        rows.append(row)
    return rows


MACHINE_PRECISION_ERROR = 1e-10


def rates_within_bands(rows, cfg):
    """Judge the finest-level rates; exact reproduction (tiny errors) passes outright."""
    last = rows[-1]
    if last["l2"] < MACHINE_PRECISION_ERROR and last["h1"] < MACHINE_PRECISION_ERROR:
        return True
    l2r, h1r = last["l2_rate"], last["h1_rate"]
    return (l2r is not None and cfg.l2_rate_min <= l2r <= cfg.l2_rate_max
            and h1r is not None and cfg.h1_rate_min <= h1r <= cfg.h1_rate_max)


def cmd_convergence(cfg):
    levels = cfg.rounds if cfg.rounds is not None else 4
    if levels < 2:
        raise InputError("convergence needs --rounds >= 2 to define a rate")
    if not cfg.problem:
        raise InputError("convergence needs a manufactured problem (problem = <id>)")
    problem = build_problem(cfg)
    if problem.exact is None:
        raise InputError(f"problem {cfg.problem!r} has no exact solution")
    try:
        rows = convergence_study(problem, levels, opts=solver_options(cfg))
    except (NonlinearSolveFailure, LinearSolveFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = _outdir(cfg)
    _write_jsonl(out / "convergence.jsonl", rows)
    print(f"{'h':>24} {'L2 error':>24} {'H1 error':>24} {'L2 rate':>8} {'H1 rate':>8}")
    for r in rows:
        fr = lambda v: "-" if v is None else f"{v:.3f}"
        print(f"{r['h']:24.17g} {r['l2']:24.17g} {r['h1']:24.17g} {fr(r['l2_rate']):>8} {fr(r['h1_rate']):>8}")
    return EXIT_OK if rates_within_bands(rows, cfg) else EXIT_UNCERTIFIED


def cmd_mesh_info(cfg):
    mesh = load_mesh(cfg.mesh)
    if mesh is None:
        raise InputError("mesh-info needs --mesh")
    info = {"dim": mesh.dim, "vertices": mesh.n_vertices, "elements": mesh.n_elements}
    if mesh.dim == 1:
        info.update(h_min=float(mesh.h.min()), h_max=float(mesh.h.max()), bc=list(mesh.bc))
    else:
        reg = check_regularity(mesh, cfg.t_min if cfg.t_min is not None else 0.0)
        info.update(
            min_angle=reg.min_angle,
            max_angle=reg.max_angle,
            s_min=reg.s_min,
            c_min=reg.c_min,
            gamma_min=float(mesh.gamma.min()),
            acute=bool(reg.c_min > 0),
            conforming=is_conforming(mesh),
            regularity_violations=len(reg.violations),
            dirichlet_edges=sum(lab == "D" for lab in mesh.boundary_labels),
            neumann_edges=sum(lab == "N" for lab in mesh.boundary_labels),
        )
    print(_dumps(info))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "certify": cmd_certify,
    "adapt": cmd_adapt,
    "counterexample": cmd_counterexample,
    "convergence": cmd_convergence,
    "mesh-info": cmd_mesh_info,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="quasifem", description="P1 solver and uniqueness certificates "
                                "for quasilinear elliptic problems")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key = value run configuration")
    p.add_argument("--problem", help="manufactured problem id (sin, steep, affine, bubble, plane)")
    p.add_argument("--mesh", help="mesh file or generator spec, e.g. 'interval 8' or 'square 1'")
    p.add_argument("--field", help="field CSV (certify)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--k", type=float, help="counterexample constant k in (0, 1/2)")
    p.add_argument("--u1", type=float, help="counterexample value u1 > 0")
    p.add_argument("--dim", type=int, choices=(1, 2))
    p.add_argument("--rounds", type=int, help="adapt: max rounds; convergence: number of meshes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg.update(problem=args.problem, mesh=args.mesh, field=args.field, out=args.out, seed=args.seed,
                   threads=args.threads, k=args.k, u1=args.u1, dim=args.dim, rounds=args.rounds)
        _accel.set_threads(cfg.threads)
        np.random.seed(cfg.seed % 2**32)
        return COMMANDS[args.command](cfg)
    except (InputError, QuasiFEMError, OSError, ValueError) as exc:
        if isinstance(exc, (NonlinearSolveFailure, LinearSolveFailure)):
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
