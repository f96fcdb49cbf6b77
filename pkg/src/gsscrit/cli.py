"""Command-line front end: ``gsscrit <subcommand> [flags]``.

Subcommands write ``<subcommand>-<hash>.{csv,json}`` into the output
directory (``--out``, else ``$GSSCRIT_OUT``, else the config's ``out_dir``)
and print one summary line.  Exit codes: 0 success, 1 computational failure,
2 invalid configuration or unwritable output.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .core import GssError
from .dcurve import (build_d_curve, classify_stability, critical_frequency_formula, curve_grid,
                     find_critical_frequency)
from .dynamics import (dynamics_grid, even_bump, evolve, run_instability_experiment,
                       run_stability_experiment)
from .io import write_csv, write_dcurve, write_json, write_profile, write_trajectory
from .profiles import ProfileFamily, default_grid, solve_profile, validate_profile
from .spectral import check_spectral_assumptions, lowest_eigenpairs, assemble_linearized

SUBCOMMANDS = ("profile", "dcurve", "spectrum", "classify", "evolve", "verify")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gsscrit", description="Bound-state stability toolkit.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")
        for f, typ in RunConfig.field_types().items():
            if f == "out_dir":
                continue
            flag = "--" + f.replace("_", "-")
            sp.add_argument(flag, dest=f, default=None, help=f"config key {f} ({typ})")
        if name == "spectrum":
            sp.add_argument("--eigvecs", action="store_true", help="also write eigenvectors CSV")
    return ap


def _resolve_config(ns) -> RunConfig:
    cfg = load_config(ns.config) if ns.config else RunConfig()
    over = {f: getattr(ns, f) for f in RunConfig.field_types() if getattr(ns, f, None) is not None}
    for item in ns.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        over[k.strip()] = v
    out = ns.out or os.environ.get("GSSCRIT_OUT")
    if out:
        over["out_dir"] = out
    return RunConfig.from_mapping(over, cfg) if over else cfg


def _outdir(cfg: RunConfig) -> Path:
    d = Path(cfg.out_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
        probe = d / ".gsscrit-write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {d} is not writable: {exc}") from None
    return d


def _need_omega(cfg: RunConfig) -> float:
    if cfg.omega is None:
        raise ConfigError("this subcommand needs --omega")
    return cfg.omega


def _default_range(cfg: RunConfig):
    if cfg.omega_min is not None:
        return cfg.omega_min, cfg.omega_max
    return (0.1, 0.9) if cfg.model == "nlkg" else (0.05, 2.0)


# -- subcommands ----------------------------------------------------------------

def cmd_profile(cfg, stem):
    m, w = cfg.model_spec(), _need_omega(cfg)
    prof = solve_profile(m, w, default_grid(m, w, cfg.n, cfg.span), tol=cfg.tol).with_derivative()
    checks = validate_profile(prof, tol=max(cfg.tol, 1e-9))
    write_profile(stem, prof, {"validation": checks, "config": cfg.echo()})
    return f"profile omega={w:g} phi(0)={prof.amplitude:.10g} residual={prof.residual:.2e} valid={checks['pass']}"


def cmd_dcurve(cfg, stem):
    m = cfg.model_spec()
    lo, hi = _default_range(cfg)
    grid = curve_grid(m, [lo - 2 * cfg.h_omega, hi + 2 * cfg.h_omega], n=cfg.n, span=cfg.span)
    fam = ProfileFamily(m, grid, cfg.tol)
    tab = build_d_curve(m, (lo, hi), cfg.n_samples, h_omega=cfg.h_omega, family=fam)
    roots = find_critical_frequency(tab, fam)
    write_dcurve(stem.with_suffix(".csv"), tab)
    rec = {"config": cfg.echo(), "grid": grid.to_dict(), "gaps": tab.gaps,
           "critical_points": [r.__dict__ for r in roots],
           "d2_sign": {"min": float(np.nanmin(tab.d2)), "max": float(np.nanmax(tab.d2))},
           "max_d1_consistency": float(np.nanmax(tab.d1_consistency()))}
    if m.kind == "nlkg":
        rec["formula_critical_frequency"] = critical_frequency_formula(m.p, m.dim)
    write_json(stem.with_suffix(".json"), rec)
    crit = ", ".join(f"{r.omega:.6f}" for r in roots) or "none"
    return f"dcurve {len(tab.omegas)} samples on [{lo:g}, {hi:g}]; critical frequencies: {crit}"


def cmd_spectrum(cfg, stem, eigvecs=False):
    m, w = cfg.model_spec(), _need_omega(cfg)
    prof = solve_profile(m, w, default_grid(m, w, cfg.n, cfg.span), tol=cfg.tol)
    rep = check_spectral_assumptions(prof, with_k0=cfg.with_k0)
    write_json(stem.with_suffix(".json"), {"config": cfg.echo(), "report": rep.to_dict(), "ok": rep.ok})
    if eigvecs:
        ops = assemble_linearized(prof)
        _, vp = lowest_eigenpairs(ops, "plus", 2)
        _, vm = lowest_eigenpairs(ops, "minus", 2)
        write_csv(stem.with_suffix(".csv"), ("r", "Lplus0", "Lplus1", "Lminus0", "Lminus1"),
                  zip(prof.grid.r, vp[0], vp[1], vm[0], vm[1]))
    return f"spectrum omega={w:g} n_negative={rep.n_negative} kernel_dim={rep.kernel_dim} k0={rep.k0_estimate} ok={rep.ok}"


def cmd_classify(cfg, stem):
    m, w = cfg.model_spec(), _need_omega(cfg)
    grid = curve_grid(m, [w - 0.1 * (1 - w) if m.kind == "nlkg" else 0.8 * w, w], n=cfg.n, span=cfg.span)
    fam = ProfileFamily(m, grid, cfg.tol)
    v = classify_stability(fam, w, atol=cfg.atol)
    write_json(stem.with_suffix(".json"), {"config": cfg.echo(), **v.to_dict()})
    order = f"(n={v.order})" if v.order else ""
    return f"classify omega={w:g} verdict={v.verdict} rule={v.rule}{order}"


def cmd_evolve(cfg, stem):
    m, w = cfg.model_spec(), _need_omega(cfg)
    grid = dynamics_grid(m, w, h=cfg.dyn_h, span=cfg.span)
    sponge = cfg.sponge or None
    if cfg.experiment == "bound":
        fam = ProfileFamily(m, grid, cfg.tol)
        delta = cfg.deltas[0] if cfg.deltas else 0.0
        u0 = fam.state(w) + delta * even_bump(m, grid)
        log = evolve(u0, cfg.T, cfg.dt, out_dt=cfg.out_dt, family=fam, omega0=w, order=cfg.order,
                     sponge=sponge)
        write_trajectory(stem.with_suffix(".csv"), log)
        write_json(stem.with_suffix(".json"), {"config": cfg.echo(), "summary": log.summary()})
        s = log.summary()
        return (f"evolve omega={w:g} T={s['t_end']:g} max_distance={s['max_distance']:.3e} "
                f"E_drift={s['max_abs_E_drift']:.2e} Q_drift={s['max_abs_Q_drift']:.2e}")
    if cfg.experiment == "stability":
        rec = run_stability_experiment(m, w, cfg.deltas, T=cfg.T, dt=cfg.dt, grid=grid,
                                       lambdas=cfg.lambdas, out_dt=cfg.out_dt, order=cfg.order,
                                       sponge=sponge)
    else:
        if not cfg.lambdas:
            raise ConfigError("instability experiment needs lambdas")
        rec = run_instability_experiment(m, w, cfg.lambdas, T=cfg.T, dt=cfg.dt, grid=grid,
                                         out_dt=cfg.out_dt, order=cfg.order, sponge=sponge,
                                         keep_logs=True)
        for lam, log in zip(cfg.lambdas, rec.logs):
            write_trajectory(stem.parent / f"{stem.name}-lambda{lam:+g}.csv", log)
    d = rec.to_dict()
    d["config_echo"] = cfg.echo()
    write_json(stem.with_suffix(".json"), d)
    return f"evolve {cfg.experiment} omega={w:g} verdict={rec.verdict}"


def cmd_verify(cfg, stem):
    from .verify import run_invariant_suite
    res = run_invariant_suite()
    ok = all(v["pass"] for v in res.values())
    write_json(stem.with_suffix(".json"), {"config": cfg.echo(), "checks": res, "ok": ok})
    failed = [k for k, v in res.items() if not v["pass"]]
    if not ok:
        raise GssError("invariant checks failed: " + ", ".join(failed))
    return f"verify {len(res)} checks passed"


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = _resolve_config(ns)
        outdir = _outdir(cfg)
    except ConfigError as exc:
        print(f"gsscrit: configuration error: {exc}", file=sys.stderr)
        return 2
    stem = outdir / f"{ns.command}-{cfg.content_hash()}"
    try:
        if ns.command == "spectrum":
            msg = cmd_spectrum(cfg, stem, ns.eigvecs)
        else:
            msg = globals()[f"cmd_{ns.command}"](cfg, stem)
    except ConfigError as exc:
        print(f"gsscrit: configuration error: {exc}", file=sys.stderr)
        return 2
    except (GssError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"gsscrit: computation failed: {exc}", file=sys.stderr)
        return 1
    print(msg)
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
