"""Seed-constrained level-set image segmentation.

An edge-stopped curvature flow is discretized with complementary finite
volumes; user-painted inside/outside seeds become range bounds on the
level-set function, enforced each time step by a projected SOR solver for
the resulting linear complementarity problem.
"""

from .assembler import PentaSystem, QField, assemble, build_q, corner_value, edge_gradient
from .edgemap import (
    EdgeMap,
    EdgeStopForm,
    EdgeStopParams,
    MollifierParams,
    build_edge_map,
    edge_stop,
    smoothed_gradient,
)
from .engine import (
    ConstraintFields,
    Polyline,
    SegmentationParams,
    Snapshot,
    build_constraints,
    contour_to_json,
    dump_level_set,
    extract_contour,
    free_constraints,
    initial_circle,
    interior_components,
    load_level_set,
    polyline_length,
    run,
    time_step,
)
from .grid import GridField, GridSpec, flatten, max_abs_diff, node_position, unflatten
from .ingest import (
    Image,
    SceneParams,
    SeedLabel,
    SeedMask,
    image_to_field,
    load_image,
    load_seed_mask,
    save_pgm,
    save_seed_mask,
    synth_bar_seed,
    synth_two_rectangles,
)
from .solver import (
    BIG,
    Bounds,
    SolveReport,
    SolverParams,
    complementarity_residual,
    dense_lcp_oracle,
    psor_solve,
    psor_solve_dense,
    sor_solve,
)

__version__ = "0.1.0"
