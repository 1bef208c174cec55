"""Numerical laboratory for curvature bounds under the normalized Kähler-Ricci flow."""

__version__ = "0.1.0"

from .curvature import (  # noqa: F401
    CurvatureBounds,
    KahlerCurvatureTensor,
    cone_report,
    constant_curvature_tensor,
    gg_tensor,
    holomorphic_sectional,
    min_holomorphic_sectional,
    min_orthogonal_bisectional,
    orthogonal_bisectional,
    pinching_mu_star,
    sample_kahler_tensor,
    traceless_spectrum,
    traces,
    validate_curvature,
)
from .envelopes import ComparisonEnvelope, Family  # noqa: F401
