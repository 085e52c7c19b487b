"""Douglas-Rachford splitting for stochastic parabolic equations dX + A(t) X dt = X dW."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    LambdaNuTooLargeError,
    NewtonDivergedError,
    RunFailedError,
    SingularStepError,
    StochDRError,
)
from .noise import NoiseSpec, WienerPath, compute_mu_field, compute_nu, sample_path  # noqa: E402
from .operators import (  # noqa: E402
    PorousMediaOperator,
    QuasilinearOperator,
    check_hypotheses,
    laplacian_operator,
    reaction_diffusion,
    shift_operator,
)
from .reference import reference_solve, residual_certificate  # noqa: E402
from .resolvents import SolverOpts  # noqa: E402
from .spaces import GelfandTriple, Grid, TripleKind, build_grid  # noqa: E402
from .splitting import dr_solve, dr_step, gamma_map, h_dr_solve  # noqa: E402

__all__ = [
    "ConfigError", "LambdaNuTooLargeError", "NewtonDivergedError", "RunFailedError",
    "SingularStepError", "StochDRError", "NoiseSpec", "WienerPath", "compute_mu_field",
    "compute_nu", "sample_path", "PorousMediaOperator", "QuasilinearOperator",
    "check_hypotheses", "laplacian_operator", "reaction_diffusion", "shift_operator",
    "reference_solve", "residual_certificate", "SolverOpts", "GelfandTriple", "Grid",
    "TripleKind", "build_grid", "dr_solve", "dr_step", "gamma_map", "h_dr_solve",
]
