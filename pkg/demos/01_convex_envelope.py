"""Convex envelope of a sampled function.

The double well (x^2 - 1)^2 is not convex. Its envelope is flat between the
wells and equal to the function outside. We also cap the envelope slopes,
which bounds its Lipschitz constant.
"""
import numpy as np

from convexjet.envelope import GridFunction, GridSpec, biconjugate, conjugate

spec = GridSpec((-2,), (2,), (201,))
g = GridFunction.sample(spec, lambda X: (X[:, 0] ** 2 - 1) ** 2)
H, (slopes, intercepts) = biconjugate(g)

x = spec.axes[0]
for xi in (-1.5, -1.0, 0.0, 0.5, 1.5):
    k = int(np.argmin(np.abs(x - xi)))
    print(f"x = {x[k]:+.2f}   g = {g.values[k]:8.4f}   envelope = {H.values[k]:8.4f}")
print(f"{len(intercepts)} supporting planes")

# the discrete conjugate g*(s) on a slope grid
s = np.linspace(-4, 4, 5)
print("g*(s):", np.round(conjugate(g, [s]).ravel(), 4))

capped = biconjugate(g, dual_radius=2.0)
print(f"slopes capped at 2: max |slope| = {np.abs(capped.slopes).max():.3f}, "
      f"envelope at x = 2: {capped.H.values[-1]:.3f} (uncapped {H.values[-1]:.3f})")
