"""Closed-form curves: configuration time, RN configuration/handoff time, Aloha capacity."""

import argparse
from pathlib import Path

from rdrnsim.perf import AlohaModel, aloha_csv, p1_csv, p2_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out/models")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "p1.csv").write_text(p1_csv(range(2, 7), 20.0, 3, None))
    (out / "p2_p3.csv").write_text(p2_csv(range(0, 11)))
    for hf in (0.0, 0.5, 1.0):
        (out / f"aloha_hf{hf}.csv").write_text(aloha_csv(range(5, 31), AlohaModel(), hf))
    print(f"wrote {sorted(p.name for p in out.iterdir())}")


if __name__ == "__main__":
    main()
