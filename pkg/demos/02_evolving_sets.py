"""The intermittent evolving set process, step by step.

A superstep from S draws u uniform on (0, 1) and keeps every vertex y with
Q_L(S, y) >= u deg(y).  Its outcomes are nested level sets, so expectations
over u are finite sums.
"""
import math

from evoset import (IntegerLine, RegularTree, SphereUnion, expected_functional, gap_length,
                    seed_stream, simulate_trajectory, superstep_levels, superstep_sample)

z = IntegerLine()
S = frozenset([z.vertex("z:0")])

# %% one superstep on Z with L = 2
for u in (0.6, 0.3, 0.2):
    print(f"u = {u}:", sorted(v.label for v in superstep_sample(z, S, 2, u)))
levels = superstep_levels(z, S, 2)
print("thresholds", levels.thresholds, "masses", levels.masses)
print("E pi(S~) =", expected_functional(levels, float), "(= pi(S) = 2)")
print("E sqrt(pi(S~)) =", expected_functional(levels, math.sqrt))

# %% gap lengths grow with log of the set's mass
for mass in (2, 30, 10 ** 5):
    print(f"pi(S) = {mass:>6}:  L = {gap_length(mass, 1.0)} at C = 1")

# %% on the tree the process stays a union of spheres about the start
tree = RegularTree(3)
ball = SphereUnion.ball(tree, tree.origin, 8)
lv = superstep_levels(tree, ball, gap_length(ball.pi_mass, 0.2))
print(f"\nball of radius 8: pi = {ball.pi_mass}, L = {lv.L}, {len(lv)} outcome levels")
print("martingale check:", expected_functional(lv, float) / ball.pi_mass)

# %% a few trajectories
for i in range(3):
    traj = simulate_trajectory(tree, tree.origin, 1.0, 6, seed_stream(11, (1, i)))
    path = " -> ".join(str(r.S.pi_mass) for r in traj.records)
    print(f"trajectory {i}: pi(S_Tm) = {path}")
