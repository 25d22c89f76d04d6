#!/usr/bin/env python3
"""Optimal CX gate time per Fg and the target channel with the control idle or blockading."""
import argparse
from dataclasses import replace

from darkcat.cx import C0, CR, CXConfig, optimal_gate_time, predicted_gate_time, simulate_cx


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--Fg", type=float, nargs="+", default=[2, 3, 4])
    ap.add_argument("--V", type=float, default=100.0)
    args = ap.parse_args()
    for F in args.Fg:
        cfg = CXConfig(Fg=F, V=args.V)
        T, inf0, _ = optimal_gate_time(cfg)
        o1 = simulate_cx(replace(cfg, T=T), CR)
        o0 = simulate_cx(replace(cfg, T=T), C0)
        print(f"Fg={F:g}  T_opt={T:.2f} ({T / predicted_gate_time(cfg):.4f} pi/mu)  "
              f"control0 inf={inf0:.3e} diag={o0.residual.diag.round(6)}  "
              f"control r inf={o1.infidelity:.3e} diag={o1.residual.diag.round(6)}", flush=True)


if __name__ == "__main__":
    main()
