"""Randomized compressive tomography of finite-dimensional time-frequency states."""

from .certify import (
    IccCertificate,
    IccProblem,
    is_informationally_complete,
    random_full_rank_z,
    solve_extrema,
)
from .engine import AggregateCurve, RctConfig, RctTrajectory, aggregate, run_rank_sweep, run_rct
from .measurement import (
    CountRecord,
    MeasurementBasis,
    QpgConfig,
    born_probabilities,
    expected_converted_counts,
    haar_unitary,
    mix_count_records,
    simulate_basis_measurement,
)
from .mle import MlOptions, MlResult, log_likelihood, maximize_likelihood
from .states import (
    BasisInfo,
    BasisKind,
    DensityMatrix,
    StateSpec,
    fidelity,
    frequency_bin_superposition,
    hg_pure_state,
    maximally_mixed,
    mixture,
    numerical_rank,
    trace_distance,
)
from .wigner import PhasePoint, WignerGrid, associated_laguerre, wigner_grid, wigner_value

__version__ = "0.1.0"
