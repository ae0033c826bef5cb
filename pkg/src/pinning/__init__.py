"""Stationary barriers against interface propagation in quenched random media.

Library layout:

- `pinning.media` -- reproducible random inputs (obstacle laws and fields,
  Poisson point samples) and the drifted-maximum expectation behind the
  pinning criterion;
- `pinning.barrier` -- greedy discrete barrier construction and exact checks;
- `pinning.dynamics` -- event-driven interface jump dynamics and comparison
  against barriers;
- `pinning.percolation` -- dependent site percolation and minimal open
  Lipschitz surfaces;
- `pinning.continuum` -- scale selection, box classification over signed
  Poisson obstacles, piecewise-parabolic barrier assembly and verification;
- `pinning.harness` / `pinning.cli` -- configured experiments, sweeps,
  deterministic artifacts and figures.
"""
from .barrier import (
    SupersolutionPath,
    barrier_on_window,
    construct_supersolution,
    path_stats,
    verify_discrete,
)
from .continuum import (
    NEG_PROXIMITY,
    ObstacleSet,
    PiecewiseQuadratic,
    ScaleParams,
    assemble,
    blocked_intervals,
    box_rect,
    build_continuum_barrier,
    classify_site,
    connect_cores,
    core_parabola,
    default_shape,
    eval_force,
    force_floor,
    select_scales,
    verify_viscosity,
)
from .dynamics import (
    ComparisonObserver,
    InterfaceState,
    RateRule,
    TrajectorySummary,
    check_comparison,
    lambda_eval,
    rate_at,
    simulate,
)
from .harness import ExperimentConfig, load_config, run, sweep
from .media import (
    MINUS_INF,
    DistributionSpec,
    PointSample,
    SeededField,
    mean_max_exact,
    mean_max_mc,
    pinning_condition,
    sample_poisson_points,
    site_value,
)
from .percolation import (
    LipschitzSurface,
    SiteGrid,
    admissible_path_bound,
    brute_force_minimal_surface,
    critical_probability,
    enumerate_admissible_paths,
    generate_grid_blocked,
    generate_grid_iid,
    minimal_open_surface,
)
from .plots import render_svg

__version__ = "0.1.0"
