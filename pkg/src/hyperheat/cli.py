"""Command-line front end.

Commands read a JSON run manifest (file paths, exponent, grid, tolerances)
and write CSV/JSON artifacts into the output directory.  Outputs are
byte-deterministic for a fixed manifest and seed.

Exit codes: 0 success, 1 input error, 2 convergence failure,
3 steady-state objective unbounded below.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, hypergraph, solver
from .constraint import Schedule, schedule_from_json
from .energy import energy
from .errors import (
    ConstraintViolated,
    DisconnectedGraph,
    GridMismatch,
    HyperheatError,
    InitialStateNotAdmissible,
    NoConvergence,
    NonZeroData,
    NotALinearCase,
    NotConverged,
    OutOfRange,
    ParseError,
    ValidationError,
)

_INPUT_ERRORS = (
    ParseError,
    ValidationError,
    OutOfRange,
    GridMismatch,
    NonZeroData,
    InitialStateNotAdmissible,
    DisconnectedGraph,
    NotALinearCase,
    ConstraintViolated,
    FileNotFoundError,
    ValueError,
    KeyError,
)

_CONVERGENCE_ERRORS = (NoConvergence, NotConverged)


def _read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def _load_graph(path) -> hypergraph.Hypergraph:
    g = hypergraph.load(Path(path).read_text())
    hypergraph.validate(g)
    return g


def _load_schedule(path, expected_dim) -> Schedule:
    return schedule_from_json(Path(path).read_text(), expected_dim)


def _load_x0(spec, manifest_dir: Path) -> np.ndarray:
    if isinstance(spec, str):
        return np.asarray(_read_json(manifest_dir / spec), dtype=np.float64)
    return np.asarray(spec, dtype=np.float64)


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _out_dir(manifest, args) -> Path:
    out = args.out or manifest.get("out_dir", ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _solver_config(manifest, args) -> solver.SolverConfig:
    p = args.p if args.p is not None else manifest["p"]
    dt = args.dt if args.dt is not None else manifest["dt"]
    t_end = args.t_end if args.t_end is not None else manifest["t_end"]
    lam = args.lam if args.lam is not None else manifest.get("lambda")
    tol = args.tol if args.tol is not None else manifest.get("prox_tol", 1e-8)
    return solver.SolverConfig(
        p=float(p),
        dt=float(dt),
        t_end=float(t_end),
        prox_tol=float(tol),
        lam=None if lam is None else float(lam),
        tie_tol=float(manifest.get("tie_tol", 1e-9)),
    )


def _load_simulation_inputs(manifest_path, args):
    manifest = _read_json(manifest_path)
    mdir = Path(manifest_path).parent
    g = _load_graph(mdir / manifest["graph"])
    a = _load_schedule(mdir / manifest["a_schedule"], g.m_pinned)
    h = None
    if manifest.get("h_schedule"):
        h = _load_schedule(mdir / manifest["h_schedule"], g.n_vertices)
    x0 = _load_x0(manifest["x0"], mdir)
    cfg = _solver_config(manifest, args)
    seed = args.seed if args.seed is not None else manifest.get("seed", 0)
    return manifest, g, a, h, x0, cfg, seed


def cmd_validate(args) -> int:
    try:
        g = hypergraph.load(Path(args.graph).read_text())
        hypergraph.validate(g)
    except _INPUT_ERRORS as exc:
        print(f"invalid: {exc}")
        return 1
    comps = hypergraph.components(g)
    print(
        f"vertices: {g.n_vertices} ({g.n_free} free, {g.m_pinned} pinned); "
        f"edges: {g.n_edges}"
    )
    if len(comps) != 1:
        named = [[g.names[v] for v in comp] for comp in comps]
        print(f"disconnected: {len(comps)} components: {named}")
        return 1
    print("valid and connected")
    return 0


def cmd_simulate(args) -> int:
    manifest, g, a, h, x0, cfg, seed = _load_simulation_inputs(args.manifest, args)
    out = _out_dir(manifest, args)
    if cfg.lam is not None:
        traj = solver.yosida_trajectory(g, x0, a, h, cfg)
    else:
        traj = solver.implicit_euler(g, x0, a, h, cfg)
    (out / "trajectory.csv").write_text(solver.trajectory_to_csv(traj))
    summary = {
        "final_state": traj.final_state().tolist(),
        "final_energy": energy(g, cfg.p, traj.final_state()),
        "max_residual": float(traj.residuals.max()),
        "n_steps": traj.n_steps,
        "scheme": "penalized" if cfg.lam is not None else "constrained",
        "seed": seed,
    }
    if args.with_oracle:
        oracle = solver.linear_oracle(g, x0, a, h, cfg)
        (out / "oracle.csv").write_text(solver.trajectory_to_csv(oracle))
        summary["oracle_sup_error"] = float(
            np.abs(traj.states - oracle.states).max()
        )
    _dump_json(out / "summary.json", summary)
    print(f"wrote {out / 'trajectory.csv'}")
    return 0


def cmd_steady(args) -> int:
    manifest = _read_json(args.manifest)
    mdir = Path(args.manifest).parent
    g = _load_graph(mdir / manifest["graph"])
    p = float(args.p if args.p is not None else manifest["p"])
    tol = float(args.tol if args.tol is not None else manifest.get("tol", 1e-8))
    a_inf = np.asarray(manifest["a_inf"], dtype=np.float64)
    h_inf = np.asarray(manifest["h_inf"], dtype=np.float64)
    out = _out_dir(manifest, args)
    result = solver.steady_state(g, p, a_inf, h_inf, tol=tol)
    if isinstance(result, solver.UnboundedBelow):
        _dump_json(
            out / "steady.json",
            {
                "unbounded_below": True,
                "ray": result.ray.tolist(),
                "recession_value": result.recession_value,
            },
        )
        print(f"unbounded below along ray {result.ray.tolist()}")
        return 3
    _dump_json(
        out / "steady.json",
        {
            "unbounded_below": False,
            "x_inf": result.x_inf.tolist(),
            "phi_value": result.phi_value,
            "stationarity_residual": result.stationarity_residual,
        },
    )
    print(f"wrote {out / 'steady.json'}")
    return 0


def cmd_study_yosida(args) -> int:
    manifest, g, a, h, x0, cfg, seed = _load_simulation_inputs(args.manifest, args)
    out = _out_dir(manifest, args)
    if args.lambdas:
        lambdas = [float(s) for s in args.lambdas.split(",")]
    else:
        lambdas = [float(v) for v in manifest.get("lambdas", [1e-2, 1e-3, 1e-4])]
    study = analysis.yosida_study(g, x0, a, h, cfg, lambdas)
    lines = [
        "lambda,sup_pin_deviation,sup_pin_deviation_sq,"
        "sup_distance_to_reference,deviation_bound,bound_holds"
    ]
    for r in study.rows:
        lines.append(
            f"{r.lam:.17g},{r.sup_pin_deviation:.17g},"
            f"{r.sup_pin_deviation_sq:.17g},{r.sup_distance_to_reference:.17g},"
            f"{r.deviation_bound:.17g},{int(r.bound_holds)}"
        )
    (out / "yosida_study.csv").write_text("\n".join(lines) + "\n")
    _dump_json(
        out / "yosida_summary.json",
        {
            "deviation_order": study.deviation_order,
            "distance_monotone": study.distance_monotone,
            "seed": seed,
        },
    )
    print(f"wrote {out / 'yosida_study.csv'}")
    return 0


def cmd_study_decay(args) -> int:
    manifest = _read_json(args.manifest)
    mdir = Path(args.manifest).parent
    g = _load_graph(mdir / manifest["graph"])
    x0 = _load_x0(manifest["x0"], mdir)
    cfg = _solver_config(manifest, args)
    out = _out_dir(manifest, args)
    atol = float(manifest.get("atol", 1e-10))
    report = analysis.decay_study(g, cfg.p, x0, cfg, atol=atol)
    run = solver.implicit_euler(
        g, x0, Schedule.constant(np.zeros(g.m_pinned)), None, cfg
    )
    norms = np.sqrt((run.states**2).sum(axis=1))
    lines = ["t,state_norm"] + [
        f"{t:.17g},{v:.17g}" for t, v in zip(run.times, norms)
    ]
    (out / "norms.csv").write_text("\n".join(lines) + "\n")
    _dump_json(
        out / "decay.json",
        {
            "regime": report.regime,
            "fitted_rate": report.fitted_rate,
            "extinction_time": report.extinction_time,
            "gamma_fit": report.gamma_fit,
            "r_squared": report.r_squared,
        },
    )
    print(f"wrote {out / 'decay.json'}")
    return 0


def cmd_compare(args) -> int:
    m1, g1, a1, h1, x01, cfg1, _ = _load_simulation_inputs(args.manifest1, args)
    m2, g2, a2, h2, x02, cfg2, _ = _load_simulation_inputs(args.manifest2, args)
    if g1 != g2:
        raise ValueError("compare requires identical graphs in both manifests")
    if cfg1.p != cfg2.p:
        raise ValueError("compare requires identical exponents")
    out = _out_dir(m1, args)
    run1 = solver.implicit_euler(g1, x01, a1, h1, cfg1)
    run2 = solver.implicit_euler(g2, x02, a2, h2, cfg2)
    report = analysis.dependence_check(g1, cfg1.p, run1, a1, h1, run2, a2, h2)
    _dump_json(
        out / "dependence.json",
        {
            "lhs": report.lhs,
            "rhs": report.rhs,
            "gamma_used": report.gamma_used,
            "holds": report.holds,
            "allowance": report.allowance,
        },
    )
    print(f"wrote {out / 'dependence.json'}")
    return 0


def _add_common_flags(sub) -> None:
    sub.add_argument("--p", type=float, default=None, help="energy exponent")
    sub.add_argument("--dt", type=float, default=None, help="time step")
    sub.add_argument("--t-end", dest="t_end", type=float, default=None)
    sub.add_argument(
        "--lambda", dest="lam", type=float, default=None, help="penalty parameter"
    )
    sub.add_argument("--tol", type=float, default=None, help="solver tolerance")
    sub.add_argument("--seed", type=int, default=None, help="recorded study seed")
    sub.add_argument("--out", type=str, default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperheat",
        description="Diffusion on weighted hypergraphs with pinned vertices.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    v = subs.add_parser("validate", help="validate a graph file and report connectivity")
    v.add_argument("graph")
    v.set_defaults(func=cmd_validate)

    s = subs.add_parser(
        "simulate",
        help="integrate one trajectory; writes trajectory.csv + summary.json",
    )
    s.add_argument("manifest")
    s.add_argument(
        "--with-oracle",
        action="store_true",
        help="also write the p=2 usual-graph oracle trajectory and sup error",
    )
    _add_common_flags(s)
    s.set_defaults(func=cmd_simulate)

    st = subs.add_parser(
        "steady", help="steady-state solve; exit 3 when unbounded below"
    )
    st.add_argument("manifest")
    _add_common_flags(st)
    st.set_defaults(func=cmd_steady)

    y = subs.add_parser(
        "study-yosida",
        help=(
            "penalty study; yosida_study.csv columns: lambda, sup_pin_deviation,"
            " sup_pin_deviation_sq, sup_distance_to_reference, deviation_bound,"
            " bound_holds"
        ),
    )
    y.add_argument("manifest")
    y.add_argument(
        "--lambdas", type=str, default=None, help="comma-separated penalty values"
    )
    _add_common_flags(y)
    y.set_defaults(func=cmd_study_yosida)

    d = subs.add_parser(
        "study-decay",
        help="zero-data decay study; norms.csv columns: t, state_norm",
    )
    d.add_argument("manifest")
    _add_common_flags(d)
    d.set_defaults(func=cmd_study_decay)

    c = subs.add_parser(
        "compare",
        help="run two manifests and check the continuous-dependence bound",
    )
    c.add_argument("manifest1")
    c.add_argument("manifest2")
    _add_common_flags(c)
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONVERGENCE_ERRORS as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 2
    except _INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except HyperheatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
