"""Configuration time against ES count, simulated and closed form."""

import argparse

from rdrnsim.config import load_config
from rdrnsim.perf import TimingConstants, phase1_time
from rdrnsim.scenario import run_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/mycall_timer.cfg")
    ap.add_argument("--max-es", type=int, default=6)
    args = ap.parse_args()
    base = load_config(args.config)
    tc = TimingConstants(k_top=base.k_top)
    print("n,sim_seconds,p1_seconds,late_mycalls")
    for n in range(2, args.max_es + 1):
        m, _ = run_scenario(base.with_(num_es=n))
        sim = "" if m.config_complete_ms is None else f"{m.config_complete_ms / 1000:.3f}"
        p1 = phase1_time(n, base.mycall_timer, base.fmax, n * (n - 1) // 2, tc)
        print(f"{n},{sim},{p1:.3f},{m.marks['late_mycall']}")


if __name__ == "__main__":
    main()
