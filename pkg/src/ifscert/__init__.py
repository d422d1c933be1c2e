"""Grid-walk intersection certification for iterated function systems on C^2.

Pieces: exact pigeonhole walks on grids of balls, matrix drift correction
with sphere coverings, quasi-linear branch families with structural
validation, a routing certifier with independently re-checkable
certificates, and synthetic instance generation.
"""

__version__ = "0.1.0"

from .certifier import (CertificationError, IntersectionCertificate,
                        LevelRecord, certify_intersection, limit_point,
                        verify_certificate)
from .correction import (CorrectionSystem, Classification, build_covering,
                         check_properties, check_return_lemma, classify,
                         fit_r0, fit_x_of_u)
from .geometry import (Ball, Cone, DegenerateBasisError, GridOfBalls,
                       GridIndexError, PointC2, QuadrupleBasis, QuasiLine,
                       ball_part, center_at, cone_contains, is_quasi_diameter,
                       ray_distance, region_contains)
from .ifs import (CorrectingIFS, QuasiLinearMap, StructureError,
                  TransportError, ValidationReport, composition_differential,
                  image_contains_ball, preimage_batch, transported_grid,
                  validate_correcting)
from .matrices import FiniteMatrixGroup, GroupClosureError, op_norm
from .pigeonhole import (PigeonDirection, PreconditionError, build_direction,
                         congruence_check, empirical_N, find_grid_intersection,
                         fit_theta)
from .polynomials import CurvePoly, Poly2C
from .synth import (SynthInstance, make_certified_instance,
                    make_homothety_ifs, make_instance, make_quasi_line)
