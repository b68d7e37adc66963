"""PT-symmetric kicked rotor simulator and analysis toolkit."""

__version__ = "0.1.0"

from .errors import (
    BracketError,
    ConfigError,
    FitDataError,
    GridOverflowError,
    InsufficientDecayError,
    PtkrError,
    TableSchemaError,
    ZeroStateError,
)
from .rotor import (
    BasisSpec,
    ModelParams,
    WaveState,
    apply_free,
    apply_kick,
    apply_p,
    fidelity,
    floquet_step,
    gaussian_state,
    observables,
    tail_mass,
    to_angle,
    to_momentum,
)
from .otoc import (
    BackwardPass,
    ForwardTrajectory,
    OtocPoint,
    OtocSeries,
    backward_pass,
    build_forward_trajectory,
    linear_sample_times,
    log_sample_times,
    otoc_point,
    otoc_series,
    otoc_series_from_trajectory,
    reversal_ratio_series,
)
from .oracle import dense_floquet_matrix, dense_gaussian, dense_otoc_point, dft_to_angle
from .phase import (
    ClassifyResult,
    GrowthFit,
    LambdaCResult,
    NormSeries,
    PhaseDiagram,
    classify_point,
    evolve_observables,
    find_lambda_c,
    fit_growth_rate,
    mean_log_norm,
    norm_series,
    scan_diagram,
)
from .fits import (
    FitResult,
    backward_growth_exponent,
    fit_ballistic_rate,
    fit_localization_length,
    fit_localization_profile,
    fit_power_law,
    k_scaling_exponent,
    time_avg,
)
from .config import RunConfig, apply_overrides, config_digest, parse_config, serialize_config
from .tables import ResultTable, from_arrays, read_table, write_table
