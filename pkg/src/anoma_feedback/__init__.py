"""Two-user downlink power allocation with limited channel-gain feedback."""

from .allocation import (
    AllocationMethod,
    AllocationResult,
    ConvergenceError,
    SicUser,
    TheoremCheck,
    alpha_anoma_bound,
    alpha_anoma_exact,
    alpha_for_variant,
    alpha_noma,
    bound_alpha_values,
    check_theorem,
    exact_alpha_values,
    g_denominator,
    noma_alpha_values,
    quartic_residual,
)
from .evaluation import (
    MonteCarloResult,
    QuadratureError,
    QuadratureSpec,
    RateReport,
    distortion,
    expected_rate,
    full_csi_rate,
    full_csi_with_estimate,
    monte_carlo,
    with_full_csi,
    write_report_csv,
)
from .experiments import (
    CheckResult,
    ExperimentConfig,
    ValidationReport,
    read_config_file,
    run_bits_sweep,
    run_codebook_dump,
    run_optimizer_experiment,
    run_theorem_check,
    run_validation,
)
from .model import ChannelDistribution, SystemParams, rate_pair, rate_strong, rate_weak
from .optimizer import (
    GradientMode,
    OptimizerConfig,
    OptimizerTrace,
    TracePoint,
    gradient_level_own,
    gradient_level_right,
    objective_and_gradients,
    optimize,
    rate_partials,
)
from .quantizer import (
    Codebook,
    bin_mass,
    bin_masses,
    load_codebook,
    quantize,
    quantize_index,
    save_codebook,
    uniform_codebook,
    uniform_step,
)

__version__ = "0.1.0"
