"""Compactness diagnostics for Schrodinger-type operators on grids.

The package rasterizes measures (potentials, domain constraints, and
their sums) onto uniform cell-centered grids, solves the associated
elliptic problems matrix-free, and reads compactness of the embeddings
off the torsion function: its sup-tail, its integral, and a family of
localized eigenvalue profiles.  A small genetic optimizer searches ball
configurations for eigenvalue-rigidity products, and a gallery of
presets with known verdicts doubles as the regression suite.
"""

__version__ = "0.1.0"

from .diagnostics import (
    CriterionReport,
    CrossCheck,
    DiagnoseConfig,
    Diagnosis,
    Thresholds,
    classify_decay,
    classify_growth,
    classify_l1,
    cross_check,
    diagnose_l1,
    diagnose_l2,
)
from .elliptic import SolveResult, gamma_distance_estimate, resolvent, solve
from .expr import Expression, ExprError
from .gallery import Preset, preset, preset_names, run_gallery, run_preset
from .geometry import (
    Ball,
    Box,
    Complement,
    DiscreteField,
    Grid,
    GridMismatch,
    HalfOpenCube,
    Intersection,
    Region,
    SlitStrip,
    Union,
    build_grid,
    constant_field,
    region_from_dict,
)
from .measure import (
    ClassicalRestriction,
    DirichletRestriction,
    InfinityOn,
    InfinityOutside,
    InvalidMeasure,
    MeasureSpec,
    Potential,
    RasterMeasure,
    Sum,
    Zero,
    measure_from_dict,
    rasterize,
    restrict_mass_to_cube,
    restrict_outside_ball,
    restrict_to_ball,
    restrict_to_cube,
)
from .ptorsion import PRayleighResult, p_diagnose, p_rayleigh, p_solve, p_torsion
from .shapeopt import (
    BallsConfig,
    EvalResult,
    OptResult,
    evaluate_balls,
    genome_to_balls,
    optimize,
    single_ball_reference,
    two_ball_reference,
)
from .spectral import (
    EigenResult,
    Profile,
    ball_probe_profile,
    box_mode_floor,
    cube_quotient,
    cube_quotient_profile,
    dirichlet_eigenvalues,
    eigenvalues_assembled,
    ring_centers,
    spectral_abscissa,
    tail_abscissa_profile,
)
from .torsion import (
    RigidityResult,
    TorsionResult,
    default_radii,
    l1_profile,
    tail_sup_profile,
    torsion_function,
    torsional_rigidity,
)
