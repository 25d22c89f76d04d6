"""Command-line experiment runner.

    darkcat <subcommand> --config cfg.yaml --out results/ [--threads N] [--tolerance X]

Writes <out>/<subcommand>.csv (header row, units row, data) and
<out>/<subcommand>.summary.json. Exit codes: 0 ok, 2 bad config, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, List, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .cx import (C0, CR, CXConfig, monitored_cx, mu_effective, optimal_gate_time, population_traces,
                 predicted_gate_time, simulate_cx)
from .dark_states import (DarkStateError, DriveConfig, Layout, build_hds, drive_from_angles,
                          find_dark_states_null, find_dark_states_rotation, principal_angle)
from .gates import GateSpec, simulate_gate, virtual_ux_ptm
from .liouville import IntegrationError, OUNoise, build_ou3_system, white_noise_lindbladian
from .ptm import LogicalBasis, error_rates, lindblad_evolver, ou_evolver
from .spin import HalfInt
from .stabilization import StabilizationConfig, dissipative_gap_scan, logical_states, stabilization_lindbladian

log = logging.getLogger("darkcat")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


@dataclass
class ResultTable:
    columns: List[str]
    units: List[str]
    rows: List[list] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.columns) != len(self.units):
            raise ValueError("every column needs a unit entry")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_table(table: ResultTable, path: Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        w.writerow(table.units)
        for row in table.rows:
            w.writerow([_fmt(x) for x in row])


def _pool_map(fn: Callable, items: Sequence, threads: int) -> list:
    """Map in order; results come back sorted by input position regardless of completion."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# --- subcommands ------------------------------------------------------------------

def _drive_from_spec(d: dict) -> tuple:
    if {"alpha", "beta"} <= set(d):
        extra = set(d) - {"alpha", "beta", "omega"}
        if extra:
            raise ConfigError(f"unknown drive keys {sorted(extra)}")
        return drive_from_angles(float(d.get("omega", 1.0)), float(d["beta"]), float(d["alpha"]))
    if {"plus", "zero", "minus"} >= set(d) and d:
        return tuple(complex(*d.get(k, (0.0, 0.0))) for k in ("plus", "zero", "minus"))
    raise ConfigError(f"drive must give alpha/beta[/omega] or plus/zero/minus as [re, im]: {d}")


def cmd_dark_states(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    drives = [_drive_from_spec(d) for d in p.drives]
    rng = np.random.default_rng(p.seed)
    for _ in range(p.n_random):
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        drives.append(tuple(z / np.linalg.norm(z)))
    jobs = [(float(F), k, d) for F in p.Fg for k, d in enumerate(drives)]

    def run(job):
        F, k, d = job
        dc = DriveConfig(d, Fg=F)
        rot, null = find_dark_states_rotation(dc), find_dark_states_null(dc)
        H = build_hds(dc)
        lay = Layout(dc.Fg)
        res = [float(np.linalg.norm(H @ lay.embed_g(v))) for v in (rot.ds1, rot.ds2)]
        ang = principal_angle(rot.basis(), null.basis())
        a1, a2 = rot.angles1, rot.angles2
        return [F, k, a1.theta, a1.phi, a2.theta, a2.phi, rot.degenerate_flag, res[0], res[1], ang,
                max(res) < cfg.tolerance]

    t = ResultTable(["Fg", "drive", "theta1", "phi1", "theta2", "phi2", "degenerate", "residual1",
                     "residual2", "principal_angle", "ok"],
                    ["", "", "rad", "rad", "rad", "rad", "", "|Omega|", "|Omega|", "rad", ""])
    t.rows = _pool_map(run, jobs, cfg.threads)
    t.summary = {"n_drives": len(drives), "max_residual": max(r[7] for r in t.rows) if t.rows else 0.0,
                 "max_principal_angle": max(r[9] for r in t.rows) if t.rows else 0.0}
    return t


def _noise_point(Fg: float, lam, p, tol: float):
    F = HalfInt.of(Fg)
    omega = 0.5 * p.omega        # per-component scale of the +-x drive, |Omega| = 2 omega
    sc = StabilizationConfig(F, omega, p.gamma)
    L = stabilization_lindbladian(sc)
    basis = LogicalBasis(*logical_states(F))
    fz = Layout(F).spin_full("fz", "g")
    if p.kappa == 0:
        return [0.0] * 4, [True] * 4
    if lam == "white":
        ev = lindblad_evolver(white_noise_lindbladian(L, fz, p.kappa))
    else:
        ev = ou_evolver(build_ou3_system(L, fz, OUNoise(p.kappa, lam)))
    est = error_rates(ev, basis, p.kappa)
    return list(est.slopes), list(est.certified)


def cmd_noise_bench(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    lams = list(p.lam) + (["white"] if p.white else [])
    jobs = [(float(F), lam) for F in p.Fg for lam in lams]

    def run(job):
        F, lam = job
        slopes, cert = _noise_point(F, lam, p, cfg.tolerance)
        norm = [s / p.kappa if p.kappa else 0.0 for s in slopes]
        return [F, lam, *slopes, *norm, all(cert)]

    t = ResultTable(["Fg", "lam", "dRII", "dRXX", "dRYY", "dRZZ", "dRII_per_kappa", "dRXX_per_kappa",
                     "dRYY_per_kappa", "dRZZ_per_kappa", "certified"],
                    ["", "|Omega|", "|Omega|", "|Omega|", "|Omega|", "|Omega|", "", "", "", "", ""])
    t.rows = _pool_map(run, jobs, cfg.threads)
    t.summary = {"kappa": p.kappa, "gamma": p.gamma, "omega": p.omega}
    return t


def cmd_stab_gap(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    configs = [StabilizationConfig(HalfInt.of(F), 0.5 * p.omega, g, p.polarization_mode)
               for F in p.Fg for g in p.gamma]
    rows = _pool_map(lambda c: dissipative_gap_scan([c])[0], configs, cfg.threads)
    t = ResultTable(["Fg", "gamma", "omega", "gap", "reference", "ratio"],
                    ["", "|Omega|", "|Omega|", "|Omega|", "|Omega|", ""])
    t.rows = [[r["Fg"], r["gamma"], r["rabi_norm"], r["gap"], r["reference"], r["gap"] / r["reference"]]
              for r in rows]
    return t


def cmd_gate_bench(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    noise = OUNoise(p.kappa, p.lam) if p.kappa else None
    jobs = [(k, float(F), float(T), bool(cd)) for k in p.kind for F in p.Fg for T in p.T
            for cd in p.counter_diabatic]
    rtol = max(cfg.tolerance, 1e-12)

    def run(job):
        kind, F, T, cd = job
        if kind == "ux_virtual":
            d = virtual_ux_ptm().diag
            return [kind, F, T, cd, 0.0, *d, float("nan"), float("nan")]
        spec = GateSpec(kind, T, F, p.omega, p.gamma, cd, p.cd_form, p.stabilize_after, alpha_x=p.alpha_x)
        r = simulate_gate(spec, noise, rtol=rtol, atol=rtol * 1e-2)
        if kind == "prep_plus":
            return [kind, F, T, cd, 1 - r.fidelity, *([float("nan")] * 4), float("nan"), r.fidelity]
        d = r.residual.diag
        a = r.alpha_star if r.alpha_star is not None else float("nan")
        return [kind, F, T, cd, r.infidelity, *d, a, float("nan")]

    t = ResultTable(["kind", "Fg", "T", "counter_diabatic", "infidelity", "RII", "RXX", "RYY", "RZZ",
                     "alpha_star", "fidelity"],
                    ["", "", "1/|Omega|", "", "", "", "", "", "", "rad", ""])
    t.rows = _pool_map(run, jobs, cfg.threads)
    t.summary = {"kappa": p.kappa, "lam": p.lam, "gamma": p.gamma}
    return t


def cmd_cx_bench(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    base = dict(omega_r=p.omega_r, delta_r=p.delta_r, gamma_r=p.gamma_r, ramp=p.ramp)
    if p.mode == "traces":
        t = ResultTable(["Fg", "T", "t", "P0", "P1", "Pr"], ["", "1/Omega_r", "1/Omega_r", "", "", ""])
        for F in p.Fg:
            c = CXConfig(Fg=F, V=p.V[0], **base)
            for f in (p.T_factor or [1.0]):
                T = f * predicted_gate_time(c)
                tr = population_traces(replace(c, T=T), np.linspace(0, T, p.n_times))
                t.rows += [[float(F), T, *vals] for vals in zip(tr["t"], tr["P0"], tr["P1"], tr["Pr"])]
        return t
    if p.mode == "monitor":
        t = ResultTable(["Fg", "V", "n_re", "control", "sigma", "fidelity", "fidelity_joint", "early_stop"],
                        ["", "Omega_r", "", "", "", "", "", ""])
        jobs = [(float(F), float(V), int(n), c, s) for F in p.Fg for V in p.V for n in p.n_re
                for c in (C0, CR) for s in (0, 1)]

        def run(job):
            F, V, n, c, s = job
            cc = CXConfig(Fg=F, V=V, n_re=n, model="extended", **base)
            if p.T_factor:
                cc = replace(cc, T=p.T_factor[0] * predicted_gate_time(cc))
            o = monitored_cx(cc, c, s)
            return [F, V, n, c, s, o.fidelity, o.fidelity_joint, o.early_stop]

        t.rows = _pool_map(run, jobs, cfg.threads)
        return t
    if p.mode != "ptm":
        raise ConfigError(f"cx-bench mode must be ptm, traces or monitor, got {p.mode!r}")
    t = ResultTable(["Fg", "V", "T", "T_over_pi_mu", "control", "infidelity", "RII", "RXX", "RYY", "RZZ"],
                    ["", "Omega_r", "1/Omega_r", "", "", "", "", "", "", ""])
    summary = {}
    jobs = []
    for F in p.Fg:
        c = CXConfig(Fg=F, **base)
        T0 = predicted_gate_time(c)
        if p.T_factor:
            Ts = [f * T0 for f in p.T_factor]
        else:
            T_opt, inf, _ = optimal_gate_time(c)
            summary[f"T_opt[Fg={F}]"] = T_opt
            Ts = [T_opt]
        jobs += [(float(F), float(V), T, T0, ctrl) for V in p.V for T in Ts for ctrl in (C0, CR)]

    def run(job):
        F, V, T, T0, ctrl = job
        o = simulate_cx(CXConfig(Fg=F, V=V, T=T, **base), ctrl)
        return [F, V, T, T / T0, ctrl, o.infidelity, *o.residual.diag]

    t.rows = _pool_map(run, jobs, cfg.threads)
    summary.update({f"mu[Fg={F}]": mu_effective(CXConfig(Fg=F, **base)) for F in p.Fg})
    t.summary = summary
    return t


COMMANDS = {
    "dark-states": cmd_dark_states,
    "noise-bench": cmd_noise_bench,
    "stab-gap": cmd_stab_gap,
    "gate-bench": cmd_gate_bench,
    "cx-bench": cmd_cx_bench,
}


def run_experiment(name: str, cfg: ExperimentConfig, out: Path) -> ResultTable:
    t0 = time.perf_counter()
    table = COMMANDS[name](cfg)
    # timing goes to the log, not the summary, so outputs stay byte-identical across runs
    log.info("%s finished in %.2f s", name, time.perf_counter() - t0)
    out.mkdir(parents=True, exist_ok=True)
    write_table(table, out / f"{name}.csv")
    summary = {"experiment": name, "version": __version__, "config": cfg.raw,
               "units": cfg.units, "tolerance": cfg.tolerance, "threads": cfg.threads,
               "n_rows": len(table.rows), "results": table.summary}
    (out / f"{name}.summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n")
    return table


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="darkcat", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", required=True)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--tolerance", type=float, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            cfg = replace(cfg, threads=args.threads)
        if args.tolerance is not None:
            if args.tolerance <= 0:
                raise ConfigError("--tolerance must be positive")
            cfg = replace(cfg, tolerance=args.tolerance)
        run_experiment(args.command, cfg, Path(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, DarkStateError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError,
            ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
