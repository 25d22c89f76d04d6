#!/usr/bin/env python3
"""Logical error rates of the stabilized cat under white or OU F_z noise, per Fg and correlation rate."""
import argparse
import math

from darkcat.dark_states import Layout
from darkcat.liouville import OUNoise, build_ou3_system, white_noise_lindbladian
from darkcat.ptm import LogicalBasis, error_rates, lindblad_evolver, ou_evolver
from darkcat.stabilization import (StabilizationConfig, bitflip_rate_firstorder, logical_states,
                                   stabilization_lindbladian)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--Fg", type=float, nargs="+", default=[2, 3, 4])
    ap.add_argument("--lam", type=float, nargs="*", default=[1e-3, 1e-1, 10.0],
                    help="OU correlation rates in units of |Omega|; white noise is always added")
    ap.add_argument("--kappa", type=float, default=1e-4)
    ap.add_argument("--gamma", type=float, default=1 / (2 * math.pi))
    args = ap.parse_args()
    print(f"{'Fg':>4} {'lam':>8} {'dRxx/k':>10} {'dRyy/k':>10} {'dRzz/k':>10} {'first-order':>11}")
    for F in args.Fg:
        cfg = StabilizationConfig(F, 0.5, args.gamma)
        L = stabilization_lindbladian(cfg)
        fz = Layout(cfg.Fg).spin_full("fz", "g")
        basis = LogicalBasis(*logical_states(cfg.Fg))
        pred = bitflip_rate_firstorder(cfg.Fg, 1.0).exact
        for lam in [*args.lam, None]:
            if lam is None:
                ev = lindblad_evolver(white_noise_lindbladian(L, fz, args.kappa))
            else:
                ev = ou_evolver(build_ou3_system(L, fz, OUNoise(args.kappa, lam)))
            s = error_rates(ev, basis, args.kappa).normalized(args.kappa)
            tag = "white" if lam is None else f"{lam:g}"
            print(f"{F:>4g} {tag:>8} {s[1]:>10.3e} {s[2]:>10.3e} {s[3]:>10.3e} {pred:>11.3e}", flush=True)


if __name__ == "__main__":
    main()
