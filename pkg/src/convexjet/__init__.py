"""Convex C^1 extension of 1-jets: validation, construction and convex bodies from normals."""
from .envelope import GridFunction, GridSpec, biconjugate, conjugate, lft_1d
from .extender import (BuildError, ExtensionModel, ExtensionRejected, ProjectedData,
                       build_extension, project_data, shepard_jet_interpolant)
from .hypersurface import (NormalDataset, SurfaceMesh, build_surface, build_surface_jet,
                           check_normal_conditions, extract_levelset, verify_surface)
from .jets import (DEFAULT_TOL, Jet, JetDataset, JetError, Subspace, Tolerances,
                   orthocomplement_in, project, span_of_differences)
from .minimal import (Decomposition, NotCoercive, PolyhedralConvex, build_minimal,
                      coercivity_minorant, decompose, eval_with_active_set)
from .validator import (AugmentationPlan, ConeSpec, NoConeFound, ValidationReport, Verdict,
                        check_cone_empty, check_convexity, check_cw1, check_new_data,
                        find_augmentation, validate)

__version__ = "0.1.0"
