"""Deciding whether a jet extends.

Example 1.2 style data: pairs of points whose supporting slack vanishes while
their gradients stay apart. The finite sample still extends, and the
validator reports the near-active pairs as conditioning warnings.

The second part widens the target subspace to the whole plane for data that
only curve along one axis. The validator then adds augmentation jets inside
empty cones so that any extension grows in the missing direction.
"""
from convexjet.datasets import e1_truncated, example_1_2
from convexjet.jets import Subspace
from convexjet.validator import check_new_data, validate

rep = validate(example_1_2(30))
print(f"Example 1.2 sample: {rep.verdict.value}, {len(rep.conditioning_warnings)} warnings")
i, j, slack, gap = rep.conditioning_warnings[-1][:4]
print(f"  e.g. pair ({i}, {j}): slack {slack:.1e}, gradient gap {gap:.3f}")

ds = e1_truncated(10)
print(f"E1 truncation in its own subspace: {validate(ds).verdict.value}")
wide = validate(ds, Subspace.full(2))
print(f"E1 truncation with X = R^2: {wide.verdict.value}")
for cone in wide.plan.cones:
    print(f"  cone apex {cone.apex.round(3)}, axis {cone.axis.round(3)}, eps {cone.eps}")
for q in wide.plan.added_jets:
    print(f"  added jet at {q.x.round(3)}: value {q.f:.3f}, gradient {q.g.round(4)}")
mr = check_new_data(ds, wide.plan, Subspace.full(2))
print(f"  smallest margin {mr.min_margin:.3f} (needs >= 1)")
