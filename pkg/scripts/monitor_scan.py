#!/usr/bin/env python3
"""Monitored CX: target fidelity against the number of control-decay checks."""
import argparse
import math
from dataclasses import replace

from darkcat.cx import CR, CXConfig, monitored_cx, swap_frequency


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--Fg", type=float, default=4)
    ap.add_argument("--n-max", type=int, default=8)
    args = ap.parse_args()
    base = CXConfig(Fg=args.Fg, ramp="none", model="extended")
    cfg = replace(base, T=math.pi / swap_frequency(base))
    ref = monitored_cx(replace(cfg, gamma_c=0.0), CR, 0)
    print(f"T={cfg.T:.2f}  no control decay: fidelity={ref.fidelity:.6f}")
    for n in range(args.n_max + 1):
        o = monitored_cx(replace(cfg, n_re=n), CR, 0)
        print(f"n_re={n}  fidelity={o.fidelity:.6f}  joint={o.fidelity_joint:.6f}  "
              f"stopped={o.early_stop:.2e}", flush=True)


if __name__ == "__main__":
    main()
