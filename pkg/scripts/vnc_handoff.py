"""Handoff interruption with predictive configuration against a reactive baseline."""

from rdrnsim.handoff import HandoffSetup, run_with_vnc, run_without_vnc, straight_track, turning_track


def main():
    print("track,lookahead_s,u,handoffs,interruption_novnc_s,interruption_vnc_s,rollbacks,branch_aborts")
    for name, track in (("straight", straight_track()), ("turning", turning_track())):
        for lam in (2, 5, 10, 20):
            for u in (0, 2, 4):
                setup = HandoffSetup(lookahead_ms=lam * 1000, rns_at_target=u)
                a, b = run_without_vnc(track, setup), run_with_vnc(track, setup)
                assert a.handoffs == b.handoffs
                print(f"{name},{lam},{u},{len(a.handoffs)},{a.max_interruption_s:.3f},"
                      f"{b.max_interruption_s:.3f},{b.rollbacks},{b.branch_aborts}")


if __name__ == "__main__":
    main()
