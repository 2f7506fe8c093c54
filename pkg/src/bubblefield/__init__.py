"""Dominant time-domain acoustic field near a resonating micro-bubble."""

__version__ = "0.1.0"

from .geometry import SurfaceMesh, make_ellipsoid, make_icosphere, load_mesh, scale_translate  # noqa: E402
from .incident import IncidentPulse  # noqa: E402
from .physics import DerivedConstants, MediumBubbleSpec, derive_constants  # noqa: E402
from .potentials import ShapeFactors, shape_factors  # noqa: E402
from .quadrature import QuadratureConfig  # noqa: E402
