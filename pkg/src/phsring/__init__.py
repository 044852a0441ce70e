"""Stochastic port-Hamiltonian single-file ring model.

Simulation of the ring dynamics by Euler-Maruyama, the closed-form spectrum of
the linearized drift, the stationary Gaussian law of the velocity-controlled
model, and Monte-Carlo checks tying the three together.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ParameterError,
    Parameters,
    State,
    SystemMatrices,
    build_matrices,
    distances_from_positions,
    drift,
    hamiltonian,
    hamiltonian_dissipation_rate,
    hamiltonian_expected_drift,
    potential,
    potential_derivative,
    validate_parameters,
)
from .integrator import SimConfig, Trajectory, em_step, mean_velocity_statistics, simulate  # noqa: E402
from .spectral import (  # noqa: E402
    SpectralDecomposition,
    clustered_distance,
    dense_spectrum_oracle,
    eigenvalues,
    is_asymptotically_stable,
    mode_factors,
)
from .stationary import (  # noqa: E402
    StationaryCovariance,
    limit_covariance,
    lyapunov_residual,
    stationary_covariance,
    stationary_v,
)
from .ensemble import (  # noqa: E402
    EnsembleConfig,
    MomentReport,
    divergence_probe,
    hamiltonian_drift_check,
    run_ensemble,
)
