"""Entropy of the simple random walk on three graphs.

On the integer line the entropy grows like log n, on Z^3 it still grows
logarithmically, and on the 3-regular tree it grows linearly.  The Green
partial sums tell the same story from the return-probability side.
"""
import math

from evoset import IntegerLine, Lattice3D, RegularTree, entropy_series, green_partial_sum
from evoset.walks import green_tail_estimate

# %% entropy series
line = entropy_series(IntegerLine(), "z:0", 200)
tree = entropy_series(RegularTree(3), "t3:", 200)
print(" n    E_n (Z)   E_n/n (Z)   E_n (tree)  E_n/n (tree)  E_n - E_{n-1} (tree)")
for n in (10, 20, 50, 100, 200):
    print(f"{n:3d}  {line.values[n]:8.4f}  {line.rate(n):9.4f}   {tree.values[n]:9.4f}  "
          f"{tree.rate(n):11.4f}  {tree.values[n] - tree.values[n - 1]:10.4f}")
print(f"(1/3) ln 2 = {math.log(2) / 3:.4f}, the limit of both tree columns")

# the walk on the tree sits in sphere k with k ~ n/3; the radial route
# keeps only one probability per sphere
print("tree support at n=200:", tree.supports[200], "vertices")

# %% Green partial sums
z = green_partial_sum(IntegerLine(), "z:0", 400)
print(f"\nZ:    S_100 = {z[100]:.4f}  S_200 = {z[200]:.4f}  S_400 = {z[400]:.4f}  (grows like sqrt T)")

t = green_partial_sum(RegularTree(3), "t3:", 400)
print(f"tree: S_40 = {t[40]:.5f}  S_80 = {t[80]:.5f}  S_400 = {t[400]:.7f}  (limit 2)")

z3 = green_partial_sum(Lattice3D(), "z3:0,0,0", 60)
limit, tail = green_tail_estimate(z3)
print(f"Z^3:  S_60 = {z3[60]:.5f}  + tail {tail:.5f} = {limit:.5f}  (G(0,0) = 1.51639)")
