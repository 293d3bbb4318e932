"""A convex curve through points with prescribed normals.

Each point x_i gets value 1 and gradient proportional to its normal; the
origin gets value 0. The level set {F = 1} of the extension is a closed
convex curve through the points with the given normals.
"""
import numpy as np

from convexjet.datasets import sphere_normals, square_midpoints
from convexjet.hypersurface import NormalDataset, build_surface, verify_surface

for name, (X, N) in [("circle", sphere_normals(32)), ("square midpoints", square_midpoints())]:
    nd = NormalDataset(X, N)
    res, mesh = build_surface(nd)
    rep = verify_surface(mesh, nd, res.model)
    r = np.linalg.norm(mesh.vertices, axis=1)
    print(f"{name}: {len(mesh.vertices)} vertices, closed {mesh.is_watertight()}, "
          f"radius in [{r.min():.3f}, {r.max():.3f}], worst normal angle {rep['max_angle_deg']:.2f} deg, "
          f"F(0) = {rep['F_origin']:.3f}")
