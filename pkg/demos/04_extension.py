"""Building a convex extension and checking it.

Jets from |x|^2/2 are extended on a grid. The model is a maximum of affine
planes, so it is convex by construction; residuals at the data shrink as the
grid is refined.
"""
import tempfile
from pathlib import Path

import numpy as np

from convexjet.datasets import bounded_gradient, quadratic
from convexjet.extender import ExtensionModel, build_extension

ds = quadratic(2, 20, seed=0)
for n in (33, 65, 129):
    res = build_extension(ds, grid=n)
    r = res.report["residuals"]
    print(f"grid {n:3d}: h = {res.report['h_grid']:.4f}, value residual {r['value']:.1e}, "
          f"gradient residual {r['gradient']:.4f}, {len(res.model.pieces.offsets)} planes")

x = np.random.default_rng(1).uniform(-3, 3, (4, 2))
val, grad = res.model.eval(x)
for xi, v, g in zip(x, val, grad):
    print(f"F({xi.round(2)}) = {v:.4f}, subgradient {g.round(4)}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.json"
    res.model.save(path)
    back = ExtensionModel.load(path)
    print("reloaded model agrees:", bool(np.array_equal(back(x), res.model(x))))

# capped dual slopes keep the Lipschitz constant proportional to max |G|
ds = bounded_gradient(2, 15, K=2.0, seed=3)
res = build_extension(ds)
S = res.model.pieces.slopes
print(f"max |G| = 2.0, largest plane slope {np.linalg.norm(S, axis=1).max():.3f}")
