"""(beam, slot) usage distribution for 4 and 7 RNs over several seeds."""

import argparse
from collections import Counter

from rdrnsim.config import load_config
from rdrnsim.scenario import run_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/link_usage.cfg")
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()
    base = load_config(args.config)
    print("num_rn,tuples_in_use,samples,cdf")
    for num_rn in (4, 7):
        hist: Counter = Counter()
        for s in range(args.seeds):
            m, _ = run_scenario(base.with_(num_rn=num_rn, seed=base.seed + s))
            hist.update(m.tuples_in_use)
        total = sum(hist.values())
        acc = 0
        for k in sorted(hist):
            acc += hist[k]
            print(f"{num_rn},{k},{hist[k]},{acc / total:.4f}")


if __name__ == "__main__":
    main()
