"""Conserved densities of the Toda and Ablowitz-Ladik lattices, computed from
Green's functions of their Lax operators and checked numerically."""

from .al import (
    ALDensityReport,
    ALState,
    TransferPair,
    al_identity_checks,
    al_report,
    al_vector_field,
    coercivity_check,
    currents_al,
    densities_al,
    density_time_derivative_al,
    free_green_al,
    green_table_al,
    in_ball_al,
    lax_block,
    mass_and_energy,
    perturbation_determinant_al,
    z_derivative_check,
)
from .errors import (
    BallUnreachable,
    ConfigError,
    DegenerateGreen,
    DomainError,
    LatticeLawsError,
    LogDetMismatch,
    OutOfBall,
    OutOfBallWarning,
    SeriesDivergence,
    SingularMatrix,
    StepUnderflow,
)
from .flow import Trajectory, conservation_monitor, integrate
from .linalg import BandedMatrix, DenseKernel, invert_window, log_det_ratio, solve_banded
from .toda import (
    TodaDensityReport,
    TodaPhase,
    TodaState,
    casimirs,
    check_identities,
    convexity_probe,
    currents,
    density_time_derivative,
    energy,
    flaschka_forward,
    free_green,
    gamma_density,
    green_table,
    in_ball,
    lax_matrix,
    macroscopic_check,
    rho_density,
    toda_report,
    toda_vector_field,
)
from .window import LatticeWindow

__version__ = "0.1.0"
