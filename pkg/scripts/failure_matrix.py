"""Packet-loss failure modes with and without the protocol fixes."""

import argparse
import time

from rdrnsim.config import load_config
from rdrnsim.scenario import run_scenario

CASES = [
    ("MYCALL", 0.5, False),
    ("NEWSWITCH", 1.0, False),
    ("NEWSWITCH", 0.5, True),
    ("SWITCHPOS", 0.5, True),
    ("TOPOLOGY", 1.0, False),
    ("TOPOLOGY", 1.0, True),
    ("TOPOLOGY", 0.5, True),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/comm_failures.cfg")
    ap.add_argument("--seeds", type=int, default=100)
    args = ap.parse_args()
    base = load_config(args.config).with_(drop_topology=0.0)
    print("kind,drop,fixes,completed,deadlock,partition,deprived_runs,refused_runs,seconds")
    for kind, p, fixes in CASES:
        t0 = time.time()
        done = dead = part = deprived = refused = 0
        for s in range(args.seeds):
            cfg = base.with_(seed=s + 1, fixes_enabled=fixes, **{f"drop_{kind.lower()}": p})
            m, _ = run_scenario(cfg)
            done += m.config_complete_ms is not None
            dead += m.deadlock
            part += m.partition
            deprived += m.deprived_associations > 0
            refused += m.marks["refused"] > 0
        print(f"{kind},{p},{int(fixes)},{done},{dead},{part},{deprived},{refused},{time.time() - t0:.1f}")


if __name__ == "__main__":
    main()
