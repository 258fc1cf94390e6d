"""Free path lengths of linear flows on translation surfaces.

Surfaces are polygons with sides identified by translations; obstacles are
either epsilon-balls around the cone points or perpendicular segments
through them.  The package traces the flow exactly chart to chart, computes
zippered-rectangle decompositions as an exact oracle for the vertical flow,
and estimates the scaled free-path distributions by Monte Carlo.
"""

from .errors import (AngleNotMultipleOf2Pi, DegenerateMatrix, FlatPathError,
                     GridMismatch, IncompleteDecomposition, InvalidEpsilon,
                     LengthMismatch, NonParallelEdges, NotFoundWithinBound,
                     SingularImpact, SpecFileError, SurfaceError, UnpairedEdge)
from .surface import (BUILTIN_SURFACES, ConePointClass, EdgeGluing, Mat2,
                      Polygon, StratumInfo, TranslationSurface, apply_matrix,
                      build_surface, cone_angle, l_surface, regular_octagon,
                      renormalization_matrix, shortest_singularity_separation,
                      square_torus, torus_from_basis)
from .tracing import (Chord, HitKind, HitResult, UnitTangentState,
                      free_path_circular, free_path_segment, step_across_edge)
from .transversal import TransversalSet, build_transversals
from .zippered import (Rectangle, ZipperedDecomposition, compute_decomposition,
                       exact_distribution, heights_histogram)
from .distributions import (ApproximationReport, EmpiricalCCDF,
                            RenormCheckReport, SamplePlan, SweepReport,
                            approximation_check, convergence_sweep, estimate_F,
                            estimate_Ftilde, estimate_ftilde, ks_distance,
                            renormalization_pathwise_check, sample_uniform_state)
from .csvio import read_ccdf_csv, write_ccdf_csv
from .specfile import load_spec, parse_angle
from .svgplot import write_svg

__version__ = "0.1.0"
