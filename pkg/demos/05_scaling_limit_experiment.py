"""Desk-scale convergence check: binary trees toward the Brownian limit.

For the family with n degree-2 vertices and n+2 leaves, distance matrices
between the first marked leaves, rescaled by lambda = sigma/s, should
approach the law of cut-point distances in the theta0=1 continuum tree;
with one glued pair on each side the same holds for the surplus-1 graphs
against the importance-weighted glued continuum samples.
"""

import surpluslab as sl
from surpluslab.experiments import converge_experiment, rng_stream

theta = sl.ThetaVector(theta0=1.0)

for k in (0, 1):
    family = []
    for n in (32, 128):
        if k == 0:
            seq = sl.validate([2] * n + [0] * (n + 2), "tree")
            family.append({"model": "d-tree", "params": seq,
                           "scale": "lambda", "label": f"n={n}"})
        else:
            seq = sl.validate([2] * n + [0] * n, "surplus", k=1)
            family.append({"model": "dk-graph", "params": seq, "k": 1,
                           "scale": "lambda", "label": f"n={n}"})
    target = ({"model": "icrt", "params": theta} if k == 0
              else {"model": "icrg", "params": theta, "k": 1})
    report = converge_experiment(family, target, n_points=4, n_reps=250,
                                 rng=rng_stream(5, k), n_perms=99)
    print(f"k={k}:")
    for row in report["rows"]:
        print(f"  {row['label']}: energy distance {row['energy']:.4f}, "
              f"max KS {row['ks_max']:.3f}")
    pm = report["last_member_permutation"]
    print(f"  decreasing: {report['decreasing']}; last member vs target: "
          f"observed {pm['observed']:.4f}, 95% permutation threshold "
          f"{pm['threshold95']:.4f}, p = {pm['p']:.2f}")
