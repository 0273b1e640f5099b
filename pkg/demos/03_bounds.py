"""Certified inequality checks on the 3-regular tree.

Checks that rely on E_n >= C n first need a certificate: the exact entropy
series is computed and the inequality verified over a stated range.
"""
from evoset import (RegularTree, SphereUnion, ball, certify_entropy_constant,
                    check_conddecay, check_escape_bound, check_maincor)
from evoset.graphs import IntegerLine

tree = RegularTree(3)
root = tree.origin

cert = certify_entropy_constant(tree, [root], (5, 20), 0.2)
print("tree certificate:", cert.passed, "min E_n/n =", round(cert.min_ratio, 4))
zcert = certify_entropy_constant(IntegerLine(), ["z:0"], (10, 100), 0.1)
print("Z certificate:", zcert.passed, "first violation", zcert.violations[0])

# %% escape from small balls
for r in (1, 2, 3):
    for n in (15, 20):
        print(check_escape_bound(tree, root, n, ball(tree, root, r), 0.2, cert).summary())

# %% decay of sqrt(pi) over one superstep, exactly
for r in (0, 4, 8, 12):
    rep = check_conddecay(tree, SphereUnion.ball(tree, root, r), 0.2, cert)
    print(rep.summary(), " L =", rep.extra["L"])

# %% and over many supersteps, by Monte Carlo
for rep in check_maincor(tree, root, 0.2, 4, 2000, 5, cert):
    print(rep.summary(), " mean", round(rep.extra["mean"], 4))
