"""Reconfiguration churn with mobile ESs, with and without a movement tolerance."""

import argparse

from rdrnsim.config import load_config
from rdrnsim.scenario import run_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/mobile_es.cfg")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--tolerance", type=float, default=5.0)
    args = ap.parse_args()
    base = load_config(args.config)
    print("seed,tolerance,reconfigurations,overlapping")
    for s in range(args.seeds):
        for eps in (0.0, args.tolerance):
            m, _ = run_scenario(base.with_(seed=base.seed + s, tolerance=eps))
            print(f"{base.seed + s},{eps},{len(m.reconfig_starts)},{m.overlapping_reconfigs}")


if __name__ == "__main__":
    main()
