"""Run the safeguarded augmented Lagrangian method on each built-in problem.

For the tracking problem the primal error against the closed-form solution
is reported for several grid sizes; for the degenerate examples the
multiplier sup-norm history shows the divergence that signals a missing
KKT point.

    python3 scripts/solver_study.py
"""

import time

import numpy as np

from ctp_akkt.alm import AlmConfig, solve
from ctp_akkt.cq import diagnose
from ctp_akkt.problems import build, reference_pair


def tracking_grid_study(sizes=(50, 100, 200, 400)):
    print("tracking: error against the closed-form pair")
    print(f"{'nodes':>6} {'status':>15} {'outer':>5} {'x err':>9} {'v err':>9} {'time':>6}")
    for n in sizes:
        prob = build("tracking", n)
        start = time.perf_counter()
        trace = solve(prob, AlmConfig(n_nodes=n))
        elapsed = time.perf_counter() - start
        xref, mref = reference_pair("tracking", trace.final.x.grid)
        ex = np.max(np.abs(trace.final.x.values - xref.values))
        ev = np.max(np.abs(trace.final.mult.v - mref.v))
        print(f"{n:>6} {trace.status.value:>15} {len(trace):>5} {ex:9.1e} {ev:9.1e} {elapsed:6.2f}")


def divergence_study():
    for pid in ("example2", "example1"):
        prob = build(pid)
        trace = solve(prob)
        print(f"\n{pid}: {trace.status.value} after {len(trace)} outer iterations")
        for note in trace.notes:
            print(f"  note: {note}")
        if not trace.iterates:
            continue
        print(f"{'k':>3} {'rho':>8} {'stat_l1':>10} {'feas':>10} {'mult_sup':>10}")
        for k, rec in enumerate(trace.iterates, start=1):
            r = rec.report
            feas = max(r.feas_eq_sup, r.feas_ineq_sup)
            print(f"{k:>3} {rec.rho:8.0e} {r.stationarity_l1:10.2e} {feas:10.2e} {rec.mult_sup_unprojected:10.3e}")
        rep = diagnose(prob, trace)
        print(f"promotion certified: {rep.promotion_certified}")
        for note in rep.notes:
            print(f"  {note}")


if __name__ == "__main__":
    tracking_grid_study()
    divergence_study()
