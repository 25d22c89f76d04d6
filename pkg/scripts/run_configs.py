#!/usr/bin/env python3
"""Run every YAML config under configs/ through the CLI, one output folder each."""
import argparse
import sys
from pathlib import Path

import yaml

from darkcat.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=str(ROOT / "configs"))
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", nargs="*", help="config stems to run (default: all)")
    args = ap.parse_args()
    worst = 0
    for path in sorted(Path(args.configs).glob("*.yaml")):
        if args.only and path.stem not in args.only:
            continue
        exp = yaml.safe_load(path.read_text())["experiment"]
        print(f"{path.name} -> {exp}", flush=True)
        rc = cli_main([exp, "--config", str(path), "--out", str(Path(args.out) / path.stem),
                       "--threads", str(args.threads)])
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(main())
