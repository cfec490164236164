"""Command line entry point: ``gibbsperc <subcommand> [options]``.

Exit codes: 0 success, 1 a check failed (e.g. potential shape), 2 invalid
configuration or a violated hypothesis.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, bounds, config, plotting
from .branching import GW_COLUMNS, extinction_and_size
from .contour2d import CellGrid, c_contours_around_origin, contour_statistics, empty_cells
from .percolation import replica_snapshot, summarize_replicas
from .potential import NoWindow, PotentialError, ShapeViolation, validate_shape
from .sampler import (ConfigError as SamplerConfigError, GENERATOR_NAME, McParams, derive_seed,
                      make_rng, run_chain, write_snapshot)

PERCOLATION_COLUMNS = ("lambda", "beta", "ell", "L", "replicas", "theta_hat", "ci_lo", "ci_hi",
                       "mean_cluster_size")
CONTOUR_COLUMNS = ("n", "empirical_freq", "envelope")
TRACE_COLUMNS = ("sweep", "count", "density", "energy")


class UsageError(Exception):
    """Bad configuration or violated hypothesis; exit code 2."""


# --------------------------------------------------------------------------
# output helpers

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def render_csv(columns, rows, meta: dict) -> str:
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def csv_body(text: str) -> str:
    """The CSV without its ``#`` metadata lines."""
    return "".join(ln for ln in text.splitlines(keepends=True) if not ln.startswith("#"))


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class Output:
    def __init__(self, args, cfg: config.RunConfig, command: str):
        self.out = args.out
        self.json = args.json
        self.plot = args.plot
        self.meta = {"gibbsperc": __version__, "command": command, "seed": cfg.seed,
                     "config_sha256": cfg.sha256(), "rng": GENERATOR_NAME}
        if self.out:
            os.makedirs(self.out, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.out, name)

    def table(self, name: str, columns, rows, extra_meta: dict | None = None) -> None:
        meta = dict(self.meta, **(extra_meta or {}))
        text = render_csv(columns, rows, meta)
        if self.out:
            with open(self.path(name + ".csv"), "w", encoding="utf-8") as fh:
                fh.write(text)
        elif not self.json:
            sys.stdout.write(text)
        if self.json:
            doc = json.dumps(_json_safe({"meta": meta, "columns": list(columns),
                                         "rows": [{c: r[c] for c in columns} for r in rows]}),
                             indent=2) + "\n"
            if self.out:
                with open(self.path(name + ".json"), "w", encoding="utf-8") as fh:
                    fh.write(doc)
            else:
                sys.stdout.write(doc)

    def figure(self, name: str, fn, *a, **kw) -> None:
        if not self.plot:
            return
        target = self.path(name + ".png") if self.out else name + ".png"
        fn(*a, target, **kw)


def _executor(threads: int):
    return ThreadPoolExecutor(max_workers=threads) if threads > 1 else None


def _map(fn, items, threads: int) -> list:
    """Apply ``fn`` to ``items``; results come back in input order for any thread count."""
    items = list(items)
    ex = _executor(threads)
    if ex is None:
        return [fn(x) for x in items]
    with ex:
        return list(ex.map(fn, items))


def _mc_params(cfg: config.RunConfig, lam: float, beta: float, seed: int, **kw) -> McParams:
    s = cfg.section("sampler")
    params = McParams(lam=lam, beta=beta, L=cfg.L, nu=cfg.nu, seed=seed,
                      n_sweeps=int(kw.get("n_sweeps", s["n_sweeps"])),
                      burn_in=int(kw.get("burn_in", s["burn_in"])),
                      thin=int(kw.get("thin", s["thin"])),
                      move_mix=tuple(float(x) for x in s["move_mix"]),
                      r_cut=s.get("r_cut"), min_moves=int(s["min_moves"]))
    params.validate(cfg.potential)
    return params


def _contour_params(cfg: config.RunConfig) -> bounds.ContourParams:
    c = cfg.section("contour")
    return bounds.ContourParams.from_potential(cfg.potential, float(c["m"]), float(c["delta"]))


# --------------------------------------------------------------------------
# subcommands

def cmd_bounds(cfg, args) -> int:
    cp = _contour_params(cfg) if cfg.section("bounds")["plus_side"] else None
    rows = bounds.phase_diagram(cfg.lambda_grid(), cfg.potential, cfg.nu, cfg.ell, contour=cp, strict=True)
    dicts = [r.as_dict() for r in rows]
    out = Output(args, cfg, "bounds")
    out.table("bounds", bounds.PHASE_COLUMNS, dicts)
    out.figure("phase_diagram", plotting.phase_diagram, dicts)
    return 0


def cmd_simulate(cfg, args) -> int:
    s = cfg.section("simulate")
    params = _mc_params(cfg, float(s["lambda"]), float(s["beta"]), cfg.seed,
                        n_sweeps=s["n_sweeps"], thin=s["thin"])
    res = run_chain(params, cfg.potential)
    d = res.diagnostics
    sweeps = np.arange(1, len(d.count_trace) + 1)
    rows = [{"sweep": int(k), "count": int(c), "density": float(rho), "energy": float(e)}
            for k, c, rho, e in zip(sweeps, d.count_trace, d.density_trace, d.energy_trace)]
    extra = {f"acceptance_{k}": _fmt(v) for k, v in d.acceptance_rates.items()}
    extra["r_cut"] = _fmt(d.r_cut)
    extra["neglected_tail_per_particle"] = _fmt(d.neglected_tail_per_particle)
    out = Output(args, cfg, "simulate")
    out.table("simulate", TRACE_COLUMNS, rows, extra)
    if out.out:
        snapdir = out.path("snapshots")
        os.makedirs(snapdir, exist_ok=True)
        for snap in res.snapshots:
            write_snapshot(os.path.join(snapdir, f"sweep_{snap.sweep:07d}.txt"), snap)
    out.figure("traces", plotting.traces, sweeps, d.density_trace, d.energy_trace)
    return 0


def _replica_tasks(cfg, section: str, threads: int):
    pts = cfg.points(section)
    reps = int(cfg.section(section)["replicas"])
    params = [_mc_params(cfg, lam, beta, derive_seed(cfg.seed, i)) for i, (lam, beta) in enumerate(pts)]
    tasks = [(i, r) for i in range(len(pts)) for r in range(reps)]

    def run(task):
        i, r = task
        return replica_snapshot(params[i], cfg.potential, r)

    snaps = _map(run, tasks, threads)
    grouped = [snaps[i * reps:(i + 1) * reps] for i in range(len(pts))]
    return pts, reps, grouped


def cmd_percolation(cfg, args) -> int:
    if cfg.ell <= cfg.potential.f:
        raise UsageError(f"percolation runs need ell > f (ell={cfg.ell}, f={cfg.potential.f})")
    proxy = cfg.section("percolation")["proxy"]
    pts, reps, grouped = _replica_tasks(cfg, "percolation", args.threads)
    rows = []
    for (lam, beta), snaps in zip(pts, grouped):
        est = summarize_replicas(snaps, cfg.ell, proxy)
        rows.append({"lambda": lam, "beta": beta, "ell": cfg.ell, "L": cfg.L, "replicas": reps,
                     "theta_hat": est.theta_hat, "ci_lo": est.ci95[0], "ci_hi": est.ci95[1],
                     "mean_cluster_size": est.mean_cluster_size})
    out = Output(args, cfg, "percolation")
    out.table("percolation", PERCOLATION_COLUMNS, rows, {"proxy": proxy, "caveat": est.caveat})
    out.figure("theta", plotting.theta, rows)
    return 0


def cmd_contours(cfg, args) -> int:
    try:
        bounds.check_percolation_hypotheses(cfg.nu, cfg.ell, cfg.potential.d)
    except bounds.PreconditionViolated as exc:
        raise UsageError(str(exc)) from exc
    cp = _contour_params(cfg)
    grid = CellGrid.from_params(cfg.potential.d, cp.delta, cfg.L)
    pts, reps, grouped = _replica_tasks(cfg, "contours", args.threads)
    out = Output(args, cfg, "contours")
    for i, ((lam, beta), snaps) in enumerate(zip(pts, grouped)):
        st = contour_statistics(snaps, grid, beta=beta, lam=lam, cp=cp)
        rows = [{"n": n, "empirical_freq": f, "envelope": e} for n, f, e in st.rows()]
        extra = {"lambda": _fmt(lam), "beta": _fmt(beta), "replicas": reps, "q": _fmt(grid.q),
                 "alpha": _fmt(cp.alpha), "G": _fmt(st.G)}
        out.table(f"contours_{i}", CONTOUR_COLUMNS, rows, extra)
        if out.json and out.out:
            dump = [c_contours_around_origin(empty_cells(s, grid), grid).to_json() for s in snaps]
            with open(out.path(f"contours_{i}_cells.json"), "w", encoding="utf-8") as fh:
                json.dump(dump, fh)
        out.figure(f"contours_{i}", plotting.contour_frequencies, st.n, st.freq, st.envelope,
                   title=f"lambda={lam:g}, beta={beta:g}")
    return 0


def cmd_gw(cfg, args) -> int:
    s = cfg.section("gw")
    try:
        consts = bounds.bound_constants(cfg.potential, cfg.nu, cfg.ell)
    except bounds.PreconditionViolated as exc:
        raise UsageError(str(exc)) from exc
    pts = cfg.points("gw")

    def run(i):
        lam, beta = pts[i]
        rng = make_rng(derive_seed(cfg.seed, 1_000_000 + i))
        return extinction_and_size(lam, beta, consts, int(s["replicas"]), rng,
                                   int(s["max_generations"])).as_row()

    rows = _map(run, range(len(pts)), args.threads)
    out = Output(args, cfg, "gw")
    out.table("gw", GW_COLUMNS, rows)
    out.figure("gw", plotting.gw, rows)
    return 0


def cmd_validate_potential(cfg, args) -> int:
    v = cfg.section("validate")
    step = float(v["grid_step"]) or None
    horizon = float(v["horizon"]) or None
    try:
        rep = validate_shape(cfg.potential, grid_step=step, horizon=horizon)
    except ShapeViolation as exc:
        print(str(exc), file=sys.stderr)
        print("ok: false")
        return 1
    print(f"ok: true\nchecked: {rep.n_checked}\nhorizon: {rep.horizon!r}\ngrid_step: {rep.grid_step!r}")
    return 0


COMMANDS = {
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "percolation": cmd_percolation,
    "contours": cmd_contours,
    "gw": cmd_gw,
    "validate-potential": cmd_validate_potential,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run configuration")
    common.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads (default 1)")
    common.add_argument("--json", action="store_true", help="also emit JSON mirrors of the tables")
    common.add_argument("--out", metavar="DIR", help="output directory (default: stdout)")
    common.add_argument("--seed", type=int, metavar="U64", help="override the configured seed")
    common.add_argument("--plot", action="store_true", help="render PNG figures next to the tables")
    parser = argparse.ArgumentParser(prog="gibbsperc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gibbsperc {__version__}")
    parser.add_argument("--print-defaults", action="store_true", help="print the default configuration and exit")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        sys.stdout.write(config.defaults_toml())
        return 0
    if args.command is None:
        parser.print_help()
        return 2
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        overrides = {"seed": args.seed} if args.seed is not None else None
        cfg = config.load(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except (UsageError, config.ConfigError, SamplerConfigError, PotentialError, NoWindow,
            bounds.BoundsError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
