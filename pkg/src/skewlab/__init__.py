"""Numerical experiments on strictly ergodic systems, skew products and SL(2,R) cocycles."""

from .base import (
    RokhlinTower,
    RotationSystem,
    SturmianSystem,
    ThueMorseSystem,
    build_rokhlin_tower,
    continued_fraction,
)
from .coboundary import (
    CertificateError,
    build_coboundary,
    condition_a_family,
    lemma_la_path,
    verify_E_membership,
)
from .ergodicity import birkhoff_average, empirical_measure, isomorphic_extension_test, ue_gap
from .lyapunov import (
    FurmanConfig,
    furman_classify,
    invariant_directions,
    lyapunov_estimate,
    uniformity_gap,
)
from .metrics import (
    besicovitch_estimate,
    fiber_diameter_profile,
    mean_equicontinuity_modulus,
    weyl_estimate,
)
from .skew import (
    CircleHomeo,
    CoboundaryCocycle,
    ConstantCocycle,
    HomeoCocycle,
    MobiusCocycle,
    RelativeProduct,
    SkewProduct,
    cocycle_distance,
    load_cocycle,
    save_cocycle,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
