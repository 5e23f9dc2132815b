"""Geodesic flows on cones over closed manifolds and their first integrals."""

from .ambient import (
    Classification,
    Kind,
    PhasePoint,
    classify,
    integral_I,
    scale_phase,
    tangency_parameter,
)
from .correspondence import (
    LiftedGeodesic,
    SigmaGeodesic,
    asymptotic_directions,
    lift_geodesic,
    lift_trajectory,
    project_geodesic,
    self_intersections,
    sigma_geodesic_from_state,
    wrap_count,
)
from .engine import (
    IntegratorSettings,
    SigmaTrajectory,
    Trajectory,
    flow,
    flow_cone_direct,
    flow_sigma,
    sample_trajectory,
)
from .errors import *  # noqa: F401,F403
from .integrals import (
    IntegralVector,
    JVector,
    integrals_I_vec,
    integrals_J,
    reconstruct_geodesic,
    recover,
)
from .manifolds import (
    ChartSpec,
    ManifoldConfig,
    ambient_to_chart,
    chart_to_phase,
    christoffels,
    evaluate_chart,
    induced_metric,
    phase_to_chart,
    random_launch,
    sigma_point,
)

__version__ = "0.1.0"
