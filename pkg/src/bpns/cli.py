"""Command-line entry point ``bpns``.

Subcommands: simulate, sync-modes, sync-nodes, thresholds, sweep, check-bounds.
Exit codes: 0 success, 2 configuration error, 3 numerical blow-up,
4 inconclusive threshold search.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from .config import EXPERIMENT_KINDS, ConfigError, RunConfig, load_config
from .dynamics import (
    BlowUpError,
    Observer,
    SimState,
    diagnostics,
    exp_weighted_integral,
    initial_vorticity,
    integrate,
)
from .forcing import BandLimited, build_forcing
from .io import SeriesWriter, write_snapshot, read_snapshot
from .spectral import SpectralField, norm, zonal_split
from .sync import (
    InconclusiveSearch,
    ModesSyncConfig,
    NodesSyncConfig,
    RegimeTooDissipative,
    run_modes_sync,
    run_nodes_sync,
    threshold_search,
    zonalization_check,
)
from .thresholds import GrashofSet, grashof_set, m0, modes_threshold, nodes_threshold

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_INCONCLUSIVE = 0, 2, 3, 4


def _forcing(cfg: RunConfig):
    return None if cfg.forcing is None else build_forcing(cfg.forcing)


def _initial_state(cfg: RunConfig) -> SimState:
    ini = cfg.initial
    if ini["snapshot"]:
        state = read_snapshot(ini["snapshot"])
        if state.omega.grid != cfg.grid:
            raise ConfigError(f"snapshot grid {state.omega.grid} does not match [grid]")
        return state
    w = initial_vorticity(cfg.grid, ini["seed"], ini["amplitude"], ini["kmin"], ini["kmax"],
                          ini["y_antisymmetric"])
    return SimState(0.0, w)


def _kappa_f(cfg: RunConfig) -> float:
    kf = cfg.experiment.get("kappa_f")
    if kf is not None:
        return kf
    if cfg.forcing is not None and isinstance(cfg.forcing.zonal_class, BandLimited):
        return cfg.forcing.zonal_class.kappa_f
    return cfg.grid.dealias_index * cfg.grid.kappa0


def _out_path(cfg: RunConfig, out_dir: str | None, name: str) -> str:
    d = out_dir or cfg.output["dir"]
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, name)


def _writer(cfg: RunConfig, out_dir: str | None) -> SeriesWriter:
    return SeriesWriter(_out_path(cfg, out_dir, cfg.output["series"]),
                        json.loads(cfg.to_json()), cfg.content_hash)


def _grashof(cfg: RunConfig, f: SpectralField | None) -> GrashofSet:
    ex = cfg.experiment
    gs = grashof_set(f, cfg.params) if f is not None else GrashofSet(0.0)
    over = {k: ex.get(k) for k in ("G0", "G1", "G2", "G3") if ex.get(k) is not None}
    if over:
        gs = GrashofSet(**{**gs.__dict__, **over})
    return gs


def cmd_simulate(cfg: RunConfig, out_dir, say) -> int:
    f = _forcing(cfg)
    state = _initial_state(cfg)
    ex = cfg.experiment
    kf = _kappa_f(cfg)
    with _writer(cfg, out_dir) as w:
        ob = Observer(ex["cadence"], lambda s: w.record(diagnostics(s, cfg.params, kf).as_dict()))
        final = integrate(state, f, cfg.params, cfg.integrator, state.t + ex["T"], [ob],
                          label="simulate")
        last = diagnostics(final, cfg.params, kf).as_dict()
        if cfg.output["snapshot"]:
            write_snapshot(_out_path(cfg, out_dir, cfg.output["snapshot"]), final)
        w.summary({"final": last})
    say(f"simulate: t={final.t:g} enstrophy={last['enstrophy']:.6g}")
    return EXIT_OK


def _sync_common(cfg: RunConfig) -> dict:
    ex, ini = cfg.experiment, cfg.initial
    return dict(T=ex["T"], burn_in=ex["burn_in"], seeds=tuple(ex["seeds"]),
                tol_converged=ex["tol_converged"], tol_diverged=ex["tol_diverged"],
                cadence=ex["cadence"], ic_amplitude=ini["amplitude"],
                ic_band=(ini["kmin"], ini["kmax"]), ic_y_antisymmetric=ini["y_antisymmetric"])


def _emit_sync(cfg, out_dir, result, say) -> int:
    with _writer(cfg, out_dir) as w:
        for rec in result.records():
            w.record(rec)
        w.summary(result.summary())
    say(f"{result.kind} sync: verdict={result.verdict} "
        f"|dw(T)|/|dw(burn_in)|={result.ratio:.3e} decay_rate={result.decay_rate:.4g}")
    return EXIT_OK


def cmd_sync_modes(cfg: RunConfig, out_dir, say) -> int:
    ex = cfg.experiment
    sc = ModesSyncConfig(kappa=ex["kappa"], coupling=ex["coupling"], lam=ex["lam"], **_sync_common(cfg))
    res = run_modes_sync(sc, _forcing(cfg), cfg.params, cfg.integrator, grid=cfg.grid)
    return _emit_sync(cfg, out_dir, res, say)


def cmd_sync_nodes(cfg: RunConfig, out_dir, say) -> int:
    ex = cfg.experiment
    sc = NodesSyncConfig(N=ex["N"], lam=ex["lam"], **_sync_common(cfg))
    res = run_nodes_sync(sc, _forcing(cfg), cfg.params, cfg.integrator, grid=cfg.grid)
    return _emit_sync(cfg, out_dir, res, say)


def _threshold_reports(cfg: RunConfig, f) -> list:
    ex = cfg.experiment
    zc = cfg.forcing.zonal_class if cfg.forcing is not None else None
    if zc is None:
        raise ConfigError("thresholds need a zonal forcing class in [forcing]")
    gs = _grashof(cfg, f)
    fams = ("modes", "nodes") if ex["family"] == "both" else (ex["family"],)
    eps = cfg.params.epsilon
    out = []
    for fam in fams:
        fn = modes_threshold if fam == "modes" else nodes_threshold
        out.append(fn(zc, eps, gs, cfg.constants, cfg.params, M0=ex["M0"]))
    return out


def cmd_thresholds(cfg: RunConfig, out_dir, say) -> int:
    f = _forcing(cfg)
    reports = _threshold_reports(cfg, f)
    with _writer(cfg, out_dir) as w:
        for rep in reports:
            w.record(rep.as_dict())
            say(f"[{rep.family}] case={rep.case}")
            if rep.family == "modes":
                say(f"  kappa/kappa0 > {rep.kappa_over_kappa0:.6g}")
            else:
                say(f"  N > {rep.N_nodes:.6g}")
            say(f"  eps term      = {rep.eps_term:.6g}")
            say(f"  zonal term    = {rep.zonal_term:.6g}")
            say(f"  kappa_f/kappa0 = {rep.kappa_f_over_kappa0:.6g}")
            say(f"  epsilon valid = {rep.epsilon_valid}")
            say(f"  classical     = kappa/kappa0 {rep.classical_kappa:.6g}, N {rep.classical_N:.6g}")
            say(json.dumps(rep.as_dict(), default=str))
        w.summary({"reports": len(reports)})
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out_dir, say) -> int:
    ex = cfg.experiment
    f = _forcing(cfg)
    if f is None:
        raise ConfigError("sweeps need a forcing in [forcing]")
    with _writer(cfg, out_dir) as w:
        if ex["sweep"] == "zonalization":
            rows = zonalization_check(
                f, cfg.params, ex["eps_list"], ex["T"], ex["burn_in"], cfg.integrator,
                seed=cfg.initial["seed"], ic_amplitude=cfg.initial["amplitude"],
                ic_band=(cfg.initial["kmin"], cfg.initial["kmax"]),
                ic_y_antisymmetric=cfg.initial["y_antisymmetric"], consts=cfg.constants)
            for row in rows:
                w.record(row)
                say(" ".join(f"{k}={v}" for k, v in row.items()))
            w.summary({"rows": len(rows)})
            return EXIT_OK
        common = _sync_common(cfg)
        if ex["family"] == "modes":
            base = ModesSyncConfig(kappa=0.0, **common)
        else:
            base = NodesSyncConfig(N=ex["N"], lam=ex["lam"], **common)
        values = [int(v) for v in ex["values"]] if ex["family"] == "nodes" else ex["values"]
        try:
            res = threshold_search(ex["family"], values, f, cfg.params, cfg.integrator, base)
        except RegimeTooDissipative as exc:
            w.record({"control": exc.control.summary()})
            w.summary({"outcome": "regime_too_dissipative", "message": str(exc)})
            say(str(exc))
            return EXIT_INCONCLUSIVE
        except InconclusiveSearch as exc:
            w.record({"table": {str(k): v for k, v in exc.table.items()}})
            w.summary({"outcome": "inconclusive", "message": str(exc)})
            say(str(exc))
            return EXIT_INCONCLUSIVE
        w.record({"control": res.control.summary()})
        for v in sorted(res.results):
            w.record(res.results[v].summary())
        w.summary({"outcome": "threshold", "family": res.family, "threshold": res.threshold,
                   "table": {str(k): v for k, v in res.table.items()}})
        say(f"empirical threshold ({res.family}): {res.threshold:g}")
    return EXIT_OK


def cmd_check_bounds(cfg: RunConfig, out_dir, say) -> int:
    """Monitor a-priori vorticity bounds and the non-zonal enstrophy bound (observe only)."""
    f = _forcing(cfg)
    if f is None:
        raise ConfigError("check-bounds needs a forcing in [forcing]")
    p = cfg.params
    ex = cfg.experiment
    gs = grashof_set(f, p)
    G = (gs.G0, gs.G1, gs.G2, gs.G3)
    mk = p.mu * p.kappa0
    rhs = [G[m] ** 2 * (1 + p.nu0**2 * gs.G0**2) ** m / mk ** (2 * m - 2) for m in range(3)]
    zonal_ref = p.epsilon * m0(gs, cfg.constants) / p.kappa0**2
    acc = [0.0, 0.0, 0.0]
    fine = ex["cadence"] / 20
    last_t = [None]
    state0 = _initial_state(cfg)

    def accumulate(s: SimState):
        if last_t[0] is not None:
            h = s.t - last_t[0]
            if h > 0:
                for m in range(3):
                    acc[m] = exp_weighted_integral(acc[m], norm(s.omega, m + 1.0) ** 2, h, p.nu0)
        last_t[0] = s.t

    with _writer(cfg, out_dir) as w:
        worst = {"m0": 0.0, "m1": 0.0, "m2": 0.0, "nonzonal": 0.0}

        def emit(s: SimState):
            rec = {"t": s.t}
            for m in range(3):
                lhs = norm(s.omega, float(m)) ** 2 + p.mu * acc[m]
                ratio = lhs / rhs[m] if rhs[m] > 0 else math.inf
                worst[f"m{m}"] = max(worst[f"m{m}"], ratio)
                rec[f"vorticity_m{m}"] = {"lhs": lhs, "rhs": rhs[m], "ratio": ratio,
                                          "status": "pass" if ratio <= 1 else "observe"}
            _, wt = zonal_split(s.omega)
            nz = norm(wt) ** 2
            ratio = nz / zonal_ref if zonal_ref > 0 else math.inf
            worst["nonzonal"] = max(worst["nonzonal"], ratio)
            rec["nonzonal_enstrophy"] = {"lhs": nz, "rhs": zonal_ref, "ratio": ratio,
                                         "status": "pass" if ratio <= 1 else "observe"}
            w.record(rec)

        obs = [Observer(fine, accumulate), Observer(ex["cadence"], emit)]
        integrate(state0, f, p, cfg.integrator, state0.t + ex["T"], obs, label="check-bounds")
        w.summary({"max_ratios": worst, "grashof": gs.__dict__})
    say("check-bounds max ratios: " + ", ".join(f"{k}={v:.3g}" for k, v in worst.items()))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sync-modes": cmd_sync_modes,
    "sync-nodes": cmd_sync_nodes,
    "thresholds": cmd_thresholds,
    "sweep": cmd_sweep,
    "check-bounds": cmd_check_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bpns", description="Beta-plane Navier-Stokes experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENT_KINDS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="TOML configuration file")
        sp.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
        sp.add_argument("--seed", type=int, default=None,
                        help="initial-condition seed; sync runs use SEED and SEED+1")
        sp.add_argument("--quiet", action="store_true", help="suppress progress output")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s")

    def say(msg):
        if not args.quiet:
            print(msg)

    try:
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(f"config declares kind {cfg.kind!r}, subcommand is {args.command!r}")
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
    except (ConfigError, OSError) as exc:
        print(f"bpns: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args.out, say)
    except ConfigError as exc:
        print(f"bpns: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"bpns: {exc}", file=sys.stderr)
        return EXIT_BLOWUP

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
