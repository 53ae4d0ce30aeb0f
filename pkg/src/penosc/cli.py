"""Command-line interface.

Subcommands: simulate, invariant, drift-check, pde, table4, gamma,
crossing, fig2a, fig2b.  Exit codes: 0 success, 1 domain error, 2 usage
error.  All data is emitted as CSV with full-precision floats, each file
accompanied by a ``.manifest`` sidecar; report-style subcommands also
render a PNG figure next to the data unless ``--no-plot`` is given.

Configuration precedence for model parameters: command-line flags override
the optional key=value config file, which overrides built-in defaults.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import crossing as xing
from . import pde as pdemod
from . import report, simulate
from .config import DEFAULTS, ConfigError, build_model, load_config
from .lyapunov import certified_bound, certify_drift, drift_form_value, select_constants
from .models import AssumptionError
from .observables import parse_observable
from .simulate import SimConfig, SimulationDivergedError

_MODEL_KEYS = list(DEFAULTS)


def _add_model_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value model configuration file")
    sub.add_argument("--model", choices=["epp", "fp", "op"])
    sub.add_argument("--n", type=int)
    sub.add_argument("--cb", type=float)
    sub.add_argument("--potential", choices=["zero", "quadratic"])
    sub.add_argument("--k", type=float)
    sub.add_argument("--noise", choices=["white", "ou", "kt"])
    sub.add_argument("--theta-v", dest="theta_v", type=float)
    sub.add_argument("--beta", type=float)
    sub.add_argument("--kt-k", dest="kt_k", type=float)
    sub.add_argument("--kt-gamma0", dest="kt_gamma0", type=float)


def _resolve_model(args) -> dict:
    cfg = load_config(args.config) if args.config else dict(DEFAULTS)
    for key in _MODEL_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out-dir", default=".", help="output directory")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threads", type=int, default=None)
    sub.add_argument("--no-plot", action="store_true",
                     help="skip PNG rendering next to the CSV output")


def _emit(path: Path, header, rows, outputs: list[Path]) -> Path:
    out = report.write_csv(path, header, rows)
    outputs.append(out)
    return out


def _finish(subcommand: str, resolved: dict, outputs: list[Path],
            started: float) -> None:
    entries = report.manifest_entries(subcommand, resolved, outputs, started)
    for out in outputs:
        report.write_manifest(out, entries)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg_map = _resolve_model(args)
    spec = build_model(cfg_map)
    cfg = SimConfig(t_final=args.t_final, dt=args.dt, seed=args.seed,
                    stride=args.stride)
    traj = simulate.simulate_path(spec, cfg)
    outdir = Path(args.out_dir)
    header = ["t"] + list(spec.components)
    rows = ([t] + list(state) for t, state in zip(traj.times, traj.states))
    outputs: list[Path] = []
    out = _emit(outdir / "simulate.csv", header, rows, outputs)
    if not args.no_plot:
        curves = [(traj.times, traj.states[:, j], name)
                  for j, name in enumerate(spec.components)]
        outputs.append(report.plot_series(out.with_suffix(".png"), curves,
                                          "t", "state", title="trajectory"))
    resolved = dict(cfg_map, t_final=args.t_final, dt=traj.dt,
                    stride=args.stride, seed=args.seed)
    _finish("simulate", resolved, outputs, started)
    return 0


def cmd_invariant(args) -> int:
    started = time.perf_counter()
    cfg_map = _resolve_model(args)
    spec = build_model(cfg_map)
    components = tuple(args.components.split(","))
    bounds = []
    for span in args.bounds.split(","):
        lo, _, hi = span.partition(":")
        bounds.append((float(lo), float(hi)))
    if len(bounds) != len(components):
        raise ValueError("--bounds must give one lo:hi span per component")
    burn = args.burn_in if args.burn_in is not None else 0.1 * args.t_final
    cfg = SimConfig(t_final=args.t_final, dt=args.dt, seed=args.seed,
                    stride=args.stride)
    hist = simulate.empirical_invariant_density(
        spec, cfg, burn, components, bounds, args.bins)
    header = ["bin_center_%s" % c for c in components] + ["count", "density"]
    meshes = np.meshgrid(*hist.centers, indexing="ij")
    rows = []
    for idx in np.ndindex(hist.counts.shape):
        rows.append([m[idx] for m in meshes]
                    + [int(hist.counts[idx]), float(hist.density[idx])])
    outdir = Path(args.out_dir)
    outputs: list[Path] = []
    out = _emit(outdir / "invariant.csv", header, rows, outputs)
    if not args.no_plot:
        if len(components) == 2:
            outputs.append(report.plot_density_2d(
                out.with_suffix(".png"), hist.centers[0], hist.centers[1],
                hist.density, components[0], components[1],
                title="empirical invariant density"))
        else:
            outputs.append(report.plot_series(
                out.with_suffix(".png"),
                [(hist.centers[0], hist.density.ravel(), "empirical")],
                components[0], "density"))
    resolved = dict(cfg_map, t_final=args.t_final, burn_in=burn,
                    bins=args.bins, components=args.components,
                    bounds=args.bounds, seed=args.seed, stride=args.stride)
    _finish("invariant", resolved, outputs, started)
    return 0


def cmd_drift_check(args) -> int:
    started = time.perf_counter()
    cfg_map = _resolve_model(args)
    spec = build_model(cfg_map)
    constants = select_constants(spec, margin=args.margin)
    axis = np.linspace(-args.half_width, args.half_width, args.points)
    axes = [axis] * spec.dim
    rep = certify_drift(constants, spec, axes)

    header = list(spec.components) + ["value", "bound", "slack"]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = np.asarray(drift_form_value(constants, spec, pts))
    bounds = np.asarray(certified_bound(constants, spec, pts))
    rows = ([*p, v, b, b - v] for p, v, b in zip(pts, vals, bounds))
    outdir = Path(args.out_dir)
    outputs: list[Path] = []
    _emit(outdir / "drift_check.csv", header, rows, outputs)
    resolved = dict(cfg_map, margin=args.margin, half_width=args.half_width,
                    points=args.points)
    _finish("drift-check", resolved, outputs, started)
    print("drift-check: sup value %.6g, min slack %.6g, violations %d"
          % (rep.sup_value, rep.min_slack, rep.n_violations))
    return 0 if rep.passed else 1


def _grid_from_args(args) -> pdemod.Grid1D:
    return pdemod.Grid1D(half_width=args.half_width, n_nodes=args.nodes,
                         dt=args.dt, t_final=args.t_final)


def cmd_pde(args) -> int:
    started = time.perf_counter()
    grid = _grid_from_args(args)
    obs = parse_observable(args.g)
    sol = pdemod.solve(grid, args.n, obs)
    steps = np.round(sol.times / grid.dt).astype(int)
    rows = zip(sol.times, sol.w_center[steps], sol.v_center[steps])
    outdir = Path(args.out_dir)
    outputs: list[Path] = []
    out = _emit(outdir / "pde_center.csv", ["tau", "w0", "v0"], rows, outputs)
    if args.snapshots:
        for j, tau in enumerate(sol.times):
            snap = outdir / ("pde_field_%04d.csv" % j)
            _emit(snap, ["y", "w", "v"],
                  zip(grid.nodes, sol.w_fields[j], sol.v_fields[j]), outputs)
    if not args.no_plot:
        outputs.append(report.plot_series(
            out.with_suffix(".png"),
            [(sol.times, sol.w_center[steps], "mean at center"),
             (sol.times, sol.v_center[steps], "variance at center")],
            "tau", "field value", logx=True))
    resolved = dict(L=args.half_width, N=args.nodes, dt=args.dt,
                    T=args.t_final, n=args.n, g=args.g)
    _finish("pde", resolved, outputs, started)
    return 0


def cmd_table4(args) -> int:
    started = time.perf_counter()
    n_values = [int(v) for v in args.n_list.split(",")]
    obs = parse_observable(args.g)
    grid = _grid_from_args(args)
    rows = []
    for n in n_values:
        sol = pdemod.solve(grid, n, obs,
                           checkpoint_times=np.array([grid.t_final]))
        rows.append((n, float(sol.v_center[-1])))
    outdir = Path(args.out_dir)
    outputs: list[Path] = []
    out = _emit(outdir / "table4.csv", ["n", "v0T"], rows, outputs)
    if not args.no_plot:
        arr = np.asarray(rows, dtype=float)
        outputs.append(report.plot_series(
            out.with_suffix(".png"), [(arr[:, 0], arr[:, 1], "v(0, T)", "o-")],
            "n", "v(0, T)", logx=True))
    resolved = dict(L=args.half_width, N=args.nodes, dt=args.dt,
                    T=args.t_final, g=args.g, n_list=args.n_list)
    _finish("table4", resolved, outputs, started)
    return 0


def cmd_gamma(args) -> int:
    started = time.perf_counter()
    grid = _grid_from_args(args)
    obs = parse_observable(args.g)
    sol = pdemod.solve(grid, args.n, obs)
    est = pdemod.gamma_from_v(sol, window=args.window)
    outdir = Path(args.out_dir)
    outputs: list[Path] = []
    _emit(outdir / "gamma.csv",
          ["n", "gamma_sq", "residual_rms", "window_lo", "window_hi"],
          [(args.n, est.gamma_sq, est.residual_rms, est.window[0],
            est.window[1])], outputs)
    resolved = dict(L=args.half_width, N=args.nodes, dt=args.dt,
                    T=args.t_final, n=args.n, g=args.g, window=args.window)
    _finish("gamma", resolved, outputs, started)
    print("gamma_sq=%.8g (fit residual %.3g)" % (est.gamma_sq, est.residual_rms))
    return 0


def _friction_spec(n: int, cb: float = 1.0):
    from .models import ModelKind, ModelSpec, WhiteNoise, zero_potential

    return ModelSpec(kind=ModelKind.FRICTION, n=n, cb=cb,
                     potential=zero_potential(), noise=WhiteNoise())


def _gamma_default(args) -> float:
    if args.gamma_sq is not None:
        return args.gamma_sq
    grid = pdemod.Grid1D(half_width=10.0, n_nodes=2001, dt=1e-3, t_final=100.0)
    sol = pdemod.solve(grid, args.n, parse_observable(args.g))
    return pdemod.gamma_from_v(sol).gamma_sq


def cmd_crossing(args) -> int:
    started = time.perf_counter()
    t_grid = np.linspace(args.t_final / args.t_points, args.t_final,
                         args.t_points)
    spec = _friction_spec(args.n)
    obs = parse_observable(args.g)
    rows = []
    if args.method in ("mc", "both"):
        query = xing.CrossingQuery(b=args.b, t_final=args.t_final, p=args.p,
                                   observable=obs)
        times = xing.first_crossing_times(spec, query, args.m_paths,
                                          dt=args.dt, seed=args.seed,
                                          threads=args.threads)
        probs, ses = xing.crossing_curve(times, t_grid)
        rows += [(t, p, s, "mc") for t, p, s in zip(t_grid, probs, ses)]
    if args.method in ("asymptotic", "both"):
        gamma_sq = _gamma_default(args)
        for t in t_grid:
            est = xing.asymptotic_crossing(gamma_sq, args.b, t)
            rows.append((t, est.probability, 0.0, "asymptotic"))
    outdir = Path(args.out_dir)
    outputs: list[Path] = []
    out = _emit(outdir / "crossing.csv",
                ["T", "estimate", "stderr", "method"], rows, outputs)
    if not args.no_plot:
        arr_rows = np.array([(r[0], r[1]) for r in rows if r[3] == "mc"])
        curves = []
        if arr_rows.size:
            curves.append((arr_rows[:, 0], arr_rows[:, 1], "mc"))
        arr_rows = np.array([(r[0], r[1]) for r in rows if r[3] == "asymptotic"])
        if arr_rows.size:
            curves.append((arr_rows[:, 0], arr_rows[:, 1], "asymptotic", "--"))
        outputs.append(report.plot_series(out.with_suffix(".png"), curves,
                                          "T", "crossing probability"))
    resolved = dict(b=args.b, T=args.t_final, p=args.p, M=args.m_paths,
                    method=args.method, n=args.n, g=args.g, seed=args.seed)
    _finish("crossing", resolved, outputs, started)
    return 0


def cmd_fig2a(args) -> int:
    started = time.perf_counter()
    if args.m_paths < 2:
        raise ValueError("need at least 2 Monte Carlo paths")
    taus = np.geomspace(args.tau_min, args.tau_max, args.tau_points)
    taus = np.unique(np.round(taus / args.dt).astype(np.int64)) * args.dt
    taus = taus[taus > 0]

    grid = pdemod.Grid1D(half_width=args.half_width, n_nodes=args.nodes,
                         dt=args.dt, t_final=float(taus[-1]))
    obs = parse_observable(args.g)
    sol = pdemod.solve(grid, args.n, obs, checkpoint_times=np.array([grid.t_final]))
    steps = np.round(taus / args.dt).astype(int)
    pde_vals = sol.v_center[steps]

    spec = _friction_spec(args.n)
    mc_vals, mc_ses = xing.integral_variance_curve(
        spec, obs, taus, args.m_paths, dt=args.dt, seed=args.seed,
        threads=args.threads)

    outdir = Path(args.out_dir)
    outputs: list[Path] = []
    _emit(outdir / "fig2a_pde.csv", ["tau", "v0"], zip(taus, pde_vals),
          outputs)
    _emit(outdir / "fig2a_mc.csv", ["tau", "v0", "stderr"],
          zip(taus, mc_vals, mc_ses), outputs)
    if not args.no_plot:
        outputs.append(report.plot_series(
            outdir / "fig2a.png",
            [(taus, pde_vals, "PDE"), (taus, mc_vals, "MC", "--")],
            "tau", "v(0, tau)", logx=True))
    resolved = dict(n=args.n, g=args.g, m_paths=args.m_paths, dt=args.dt,
                    tau_min=args.tau_min, tau_max=args.tau_max,
                    seed=args.seed, L=args.half_width, N=args.nodes)
    _finish("fig2a", resolved, outputs, started)
    return 0


def cmd_fig2b(args) -> int:
    started = time.perf_counter()
    p_values = [float(v) for v in args.p_list.split(",")]
    t_grid = np.linspace(args.t_final / args.t_points, args.t_final,
                         args.t_points)
    spec = _friction_spec(args.n)
    obs = parse_observable(args.g)
    gamma_sq = _gamma_default(args)

    rows = []
    for p in p_values:
        query = xing.CrossingQuery(b=args.b, t_final=args.t_final, p=p,
                                   observable=obs)
        times = xing.first_crossing_times(spec, query, args.m_paths,
                                          dt=args.dt, seed=args.seed,
                                          threads=args.threads)
        probs, ses = xing.crossing_curve(times, t_grid)
        rows += [("p%g" % p, t, pr, s) for t, pr, s in zip(t_grid, probs, ses)]
    for t in t_grid:
        est = xing.asymptotic_crossing(gamma_sq, args.b, t)
        rows.append(("wstar", t, est.probability, 0.0))

    outdir = Path(args.out_dir)
    outputs: list[Path] = []
    out = _emit(outdir / "fig2b.csv", ["series", "T", "value", "stderr"],
                rows, outputs)
    if not args.no_plot:
        curves = []
        for name in ["p%g" % p for p in p_values] + ["wstar"]:
            arr = np.array([(r[1], r[2]) for r in rows if r[0] == name])
            curves.append((arr[:, 0], arr[:, 1], name,
                           "-" if name == "wstar" else "--"))
        outputs.append(report.plot_series(out.with_suffix(".png"), curves,
                                          "T", "crossing probability"))
    resolved = dict(b=args.b, T=args.t_final, n=args.n, g=args.g,
                    m_paths=args.m_paths, p_list=args.p_list,
                    gamma_sq=gamma_sq, seed=args.seed)
    _finish("fig2b", resolved, outputs, started)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="penosc",
        description="Penalized non-smooth stochastic oscillators: simulation, "
                    "drift certification, parabolic solvers and crossing "
                    "probabilities.")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("simulate", help="write one trajectory as CSV")
    _add_model_flags(p)
    _add_common(p)
    p.add_argument("--T", dest="t_final", type=float, default=50.0)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--stride", type=int, default=10)
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("invariant", help="empirical invariant density histogram")
    _add_model_flags(p)
    _add_common(p)
    p.add_argument("--T", dest="t_final", type=float, default=1000.0)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--burn-in", type=float, default=None,
                   help="default: 10%% of the horizon")
    p.add_argument("--components", default="x,y")
    p.add_argument("--bounds", default="-2:2,-2:2")
    p.add_argument("--bins", type=int, default=40)
    p.set_defaults(func=cmd_invariant)

    p = subs.add_parser("drift-check", help="pointwise drift certification report")
    _add_model_flags(p)
    _add_common(p)
    p.add_argument("--margin", type=float, default=1.01)
    p.add_argument("--half-width", type=float, default=10.0)
    p.add_argument("--points", type=int, default=21)
    p.set_defaults(func=cmd_drift_check)

    def add_grid_flags(sp, t_default):
        sp.add_argument("--half-width", "--L", dest="half_width", type=float,
                        default=10.0)
        sp.add_argument("--nodes", "--N", dest="nodes", type=int, default=2001)
        sp.add_argument("--dt", type=float, default=1e-3)
        sp.add_argument("--T", dest="t_final", type=float, default=t_default)

    p = subs.add_parser("pde", help="march the mean/variance fields")
    _add_common(p)
    add_grid_flags(p, 100.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--g", default="identity",
                   help="identity | square | indicator:a,b")
    p.add_argument("--snapshots", action="store_true",
                   help="also write full fields at every checkpoint")
    p.set_defaults(func=cmd_pde)

    p = subs.add_parser("table4", help="variance value at the final time, swept over n")
    _add_common(p)
    add_grid_flags(p, 100.0)
    p.add_argument("--g", default="identity")
    p.add_argument("--n-list", default="2,5,10,50,100,1000")
    p.set_defaults(func=cmd_table4)

    p = subs.add_parser("gamma", help="extract the diffusive coefficient from the variance growth")
    _add_common(p)
    add_grid_flags(p, 100.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--g", default="identity")
    p.add_argument("--window", type=float, default=0.5)
    p.set_defaults(func=cmd_gamma)

    p = subs.add_parser("crossing", help="threshold-crossing probability curve")
    _add_common(p)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--T", dest="t_final", type=float, default=20.0)
    p.add_argument("--p", type=float, default=None,
                   help="diffusive scaling power (required for mc)")
    p.add_argument("--M", dest="m_paths", type=int, default=10000)
    p.add_argument("--method", choices=["mc", "asymptotic", "both"],
                   default="both")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--g", default="identity")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-points", type=int, default=40)
    p.add_argument("--gamma-sq", type=float, default=None,
                   help="skip the PDE solve and use this value")
    p.set_defaults(func=cmd_crossing)

    p = subs.add_parser("fig2a", help="variance growth: PDE curve vs Monte Carlo")
    _add_common(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--g", default="identity")
    p.add_argument("--m-paths", type=int, default=100000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--tau-min", type=float, default=0.1)
    p.add_argument("--tau-max", type=float, default=10.0)
    p.add_argument("--tau-points", type=int, default=20)
    p.add_argument("--half-width", type=float, default=10.0)
    p.add_argument("--nodes", type=int, default=2001)
    p.set_defaults(func=cmd_fig2a)

    p = subs.add_parser("fig2b", help="crossing curves vs the diffusive limit")
    _add_common(p)
    p.add_argument("--b", type=float, default=0.6)
    p.add_argument("--T", dest="t_final", type=float, default=20.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--g", default="identity")
    p.add_argument("--m-paths", type=int, default=10000)
    p.add_argument("--p-list", default="1,10,100,1000")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-points", type=int, default=40)
    p.add_argument("--gamma-sq", type=float, default=None)
    p.set_defaults(func=cmd_fig2b)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand == "crossing" and args.method in ("mc", "both") \
            and args.p is None:
        parser.error("--p is required when the method includes mc")
    try:
        return args.func(args)
    except (ConfigError, AssumptionError, SimulationDivergedError,
            ValueError, ArithmeticError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
