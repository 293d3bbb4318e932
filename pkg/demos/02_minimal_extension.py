"""Minimal convex extension and its decomposition.

Jets sampled from sqrt(x1^2 + exp(-2 x2)) on the plane z = 0 of R^3 give a
function that is coercive in two directions and flat along the third.
"""
import numpy as np

from convexjet.datasets import corner_function
from convexjet.minimal import build_minimal, coercivity_minorant, decompose, recenter

ds = corner_function(40, dim=3, k=2, seed=0)
m = build_minimal(ds)
print(f"{len(ds)} jets, minimal extension interpolates: max |m(x_i) - f_i| = "
      f"{np.abs(m(ds.X) - ds.F).max():.1e}")

dec = decompose(m)
print(f"dim Y = {dec.Y.dim}, largest e3 component of the Y basis = {np.abs(dec.Y.basis[:, 2]).max():.1e}")
print(f"linear part v = {np.round(dec.v, 6)}")

x = np.random.default_rng(0).normal(scale=3, size=(5, 3))
print("m(x) - reconstruct(x):", np.round(m(x) - dec.reconstruct(x), 12))

cm = coercivity_minorant(recenter(dec))
print(f"c(y) >= {cm.alpha:.3f} |y| + ({cm.beta:.3f}) on Y")
