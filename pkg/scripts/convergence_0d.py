#!/usr/bin/env python3
"""Convergence of the 0d radial scenario against a fine reference run.

The stress ramps linearly and then sticks to the yield surface; the observed
order of the time interpolant error is close to one.
"""

import argparse

from plastiproj.harness_cli import cmd_convergence, parse_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/radial_0d.json")
    ap.add_argument("--out", default="out/convergence_0d")
    args = ap.parse_args()

    cfg = parse_config(args.config)
    results = cmd_convergence(cfg, args.out)
    print(f"{'N':>8s}  {'err_sigma_LinfH':>16s}  {'order':>8s}")
    for row in results:
        print(f"{row['N']:8d}  {row['err_sigma_LinfH']:16.6e}  "
              f"{row['order_sigma_LinfH']:8.3f}")
    print(f"full table in {args.out}/convergence.csv")


if __name__ == "__main__":
    main()
