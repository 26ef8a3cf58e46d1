"""Command line entry point: ``rdrnsim run | model | diff | handoff``."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, load_config
from .perf import AlohaModel, DEFAULT_TIMING, p1_csv, p2_csv, aloha_csv
from .scenario import EXIT_CONFIG, EXIT_OK, compare_golden, exit_code, run_scenario


def _range(text: str) -> list[int]:
    """``5`` or ``2..6`` or ``5,10,20``."""
    out: list[int] = []
    for part in text.split(","):
        if ".." in part:
            a, b = part.split("..", 1)
            out += list(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _one(args: tuple) -> tuple[int, int, list[tuple[str, str]]]:
    cfg, out = args
    m, _ = run_scenario(cfg, out)
    return cfg.seed, exit_code(m), m.csv_rows()


def cmd_run(ns: argparse.Namespace) -> int:
    try:
        cfg = load_config(ns.config)
    except ConfigError as e:
        print(f"{ns.config}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"{ns.config}: {e.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    if ns.seed is not None:
        cfg = cfg.with_(seed=ns.seed)
    out = Path(ns.out)
    if ns.runs <= 1:
        m, _ = run_scenario(cfg, out)
        print((out / "summary.txt").read_text(), end="")
        return exit_code(m)
    jobs = [(cfg.with_(seed=cfg.seed + i), out / f"seed_{cfg.seed + i}") for i in range(ns.runs)]
    with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
        results = sorted(pool.map(_one, jobs))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "exit"] + [k for k, _ in results[0][2]])
    for seed, code, rows in results:
        w.writerow([seed, code] + [v for _, v in rows])
    out.mkdir(parents=True, exist_ok=True)
    (out / "batch_metrics.csv").write_text(buf.getvalue())
    failed = sum(1 for _, c, _ in results if c != EXIT_OK)
    print(f"{len(results)} runs, {failed} with a diagnosed failure; see {out / 'batch_metrics.csv'}")
    return max(c for _, c, _ in results)


def cmd_model(ns: argparse.Namespace) -> int:
    tc = DEFAULT_TIMING if ns.ktop is None else DEFAULT_TIMING.__class__(k_top=ns.ktop)
    if ns.which == "p1":
        text = p1_csv(_range(ns.n), ns.T, ns.L, ns.R, tc)
    elif ns.which in ("p2", "p3"):
        text = p2_csv(_range(ns.u), tc)
    else:
        a = AlohaModel(ns.bandwidth, ns.efficiency, ns.packet_bits)
        text = aloha_csv(_range(ns.num_rn), a, ns.handoff_fraction)
    if ns.csv:
        print(text, end="")
    else:
        rows = list(csv.reader(io.StringIO(text)))
        width = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        for r in rows:
            print("  ".join(c.rjust(wd) for c, wd in zip(r, width)))
    return EXIT_OK


def cmd_diff(ns: argparse.Namespace) -> int:
    try:
        log = Path(ns.log).read_text().splitlines()
        golden = Path(ns.golden).read_text().splitlines()
    except OSError as e:
        print(f"{e.filename}: {e.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    ignore = set(ns.ignore.split(",")) if ns.ignore else None
    diff = compare_golden(log, golden, ignore)
    for line in diff:
        print(line)
    return 1 if diff else EXIT_OK


def cmd_handoff(ns: argparse.Namespace) -> int:
    from .handoff import HandoffSetup, run_with_vnc, run_without_vnc, straight_track, turning_track

    track = straight_track() if ns.track == "straight" else turning_track()
    setup = HandoffSetup(lookahead_ms=int(ns.lookahead * 1000), rns_at_target=ns.u)
    blind, vnc = run_without_vnc(track, setup), run_with_vnc(track, setup)
    print(f"handoffs (no VNC): {blind.handoffs}")
    print(f"handoffs (VNC):    {vnc.handoffs}")
    print(f"interruption no VNC: {blind.max_interruption_s:.3f} s, VNC: {vnc.max_interruption_s:.3f} s")
    print(f"rollbacks {vnc.rollbacks}, antimessages {vnc.antimessages}, aborted branches {vnc.branch_aborts}")
    if ns.verbose:
        for line in vnc.log:
            print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdrnsim", description="RDRN orderwire control-plane emulator")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", default="out")
    r.add_argument("--runs", type=int, default=1, help="consecutive seeds to run in parallel")
    r.add_argument("--jobs", type=int, default=None, help="worker processes for --runs")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("model", help="evaluate the closed-form timing and capacity models")
    m.add_argument("which", choices=["p1", "p2", "p3", "aloha"])
    m.add_argument("--n", default="2..6", help="ES counts for p1")
    m.add_argument("--T", type=float, default=20.0, help="MYCALL timer (s)")
    m.add_argument("--L", type=int, default=3, help="frequencies per link")
    m.add_argument("--R", type=int, default=None, help="constrained links (default: all ES pairs)")
    m.add_argument("--ktop", type=float, default=None)
    m.add_argument("--u", default="0..10", help="RN counts for p2/p3")
    m.add_argument("--num-rn", default="5..30")
    m.add_argument("--packet-bits", type=int, default=400)
    m.add_argument("--bandwidth", type=float, default=19200.0)
    m.add_argument("--efficiency", type=float, default=0.18)
    m.add_argument("--handoff-fraction", type=float, default=0.0)
    m.add_argument("--csv", action="store_true")
    m.set_defaults(func=cmd_model)

    d = sub.add_parser("diff", help="compare a transition log against a golden log")
    d.add_argument("log")
    d.add_argument("golden")
    d.add_argument("--ignore", default="", help="comma-separated nodes to leave out")
    d.set_defaults(func=cmd_diff)

    h = sub.add_parser("handoff", help="predictive vs. reactive handoff demo")
    h.add_argument("--track", choices=["straight", "turning"], default="straight")
    h.add_argument("--lookahead", type=float, default=10.0)
    h.add_argument("--u", type=int, default=0, help="RNs already at the target ES")
    h.add_argument("-v", "--verbose", action="store_true")
    h.set_defaults(func=cmd_handoff)
    return p


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
