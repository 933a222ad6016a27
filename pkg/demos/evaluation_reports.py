"""
Scoring trackers and checking realtime budgets
==============================================

Three small evaluations: identity scores on a toy scene where one track
swaps labels halfway, a fitted density compared against true travel
times, and a latency trace checked against the frame budget.
"""

import numpy as np

from mcvt.core import BBox
from mcvt.eval.ident import idf1_score
from mcvt.eval.reports import LatencyTrace, kde_report, realtime_report
from mcvt.server.clm import fit_kde

# --- identity metrics: a mid-sequence identity swap halves the score
gt, pred = [], []
for f in range(20):
    gt.append(("cam00", f, 1, BBox(100.0, 100.0, 50.0, 50.0)))
    pred.append(("cam00", f, 10 if f < 10 else 11, BBox(100.0, 100.0, 50.0, 50.0)))
score = idf1_score(gt, pred, iou_threshold=0.5)
print(f"identity swap at frame 10: idf1={score.idf1:.1f} "
      f"(idtp={score.idtp}, idfp={score.idfp}, idfn={score.idfn})")

# --- density fit vs truth
rng = np.random.default_rng(0)
truth = rng.normal(12.0, 1.5, size=300)
kde = fit_kde(truth[:150], bandwidth=0.8)     # fit on half, compare on all
rep = kde_report(kde, truth, bin_s=1.0)
print(f"travel-time fit: kde mean {rep.kde_mean_s:.2f} vs true {rep.true_mean_s:.2f}, "
      f"total variation {rep.tv_distance:.3f}")

# --- realtime verdict from a latency trace
trace = LatencyTrace(queue_cap=100)
for fi in range(200):
    for stage, ms in (("gate", 2.0), ("filter", 1.0), ("track", 3.0),
                      ("geomap", 0.5), ("feature", 8.0)):
        trace.add_stage("cam00", fi, stage, ms + rng.uniform(0, 1))
    trace.add_queue("cam00", fi, fi % 7)
report = realtime_report(trace, fps=15.0)
print(f"per-frame p95 {report.frame_total.p95_ms:.1f} ms vs "
      f"budget {report.budget_ms:.1f} ms -> realtime={report.realtime}")
