"""A recurrent graph whose walk entropy still grows linearly.

Backbone 1, 2, 3, ... with a full binary tree of height min(2^^n, H) hung
off vertex n.  Only a truncation can be built, so what shows here is the
mechanism: positive but start-dependent rates, and a recurrent backbone.
"""
from evoset import build_counterexample, per_start_entropy_rates, recurrence_diagnostics
from evoset.counterexample import check_hitting_time_bound, drift_check, rate_ordering

g = build_counterexample(12, 8)
print(g.spec, "heights", g.heights, "vertices", g.vertex_count())

# %% per-start rates, min of E_n/n over n in [20, 40]
starts = [g.backbone(n) for n in range(1, 9)] + [g.tree_vertex(n) for n in (1, 2, 3)]
profiles = per_start_entropy_rates(g, starts, 40, (20, 40))
for p in profiles:
    print(f"{p.start:8s} {p.tree_depth:10s} rate {p.rate:.4f}")
print("ordering:", " > ".join(rate_ordering(profiles)))

# %% recurrence of the finite truncation
diag = recurrence_diagnostics(g, g.backbone(3), [10 ** 3, 10 ** 4, 10 ** 5], 300, 1)
for h, f, se in diag.rows():
    print(f"P(return by {h:>6}) ~ {f:.3f} +- {se:.3f}")

# %% inside a tree the depth drifts up at rate 2/3
print(drift_check(g, 3, 100, 3000, 0).summary())
for rep in check_hitting_time_bound([7, 15, 31, 63]):
    print(rep.summary())
