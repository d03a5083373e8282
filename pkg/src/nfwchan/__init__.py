"""Near-field wideband XL-MIMO channel simulation and estimation workbench."""

from .config import SystemConfig, load_config, save_config
from .channel import (
    ChannelMatrix,
    PathSet,
    RealChannelTensor,
    channel_matrix,
    from_real_tensor,
    rayleigh_distance,
    sample_paths,
    steering_vector,
    subcarrier_frequencies,
    to_real_tensor,
)
from .correlation import (
    CorrelationParams,
    antenna_corr_magnitude,
    empirical_corr_oracle,
    subcarrier_corr_magnitude,
)
from .observation import (
    MeasurementOperator,
    PilotConfig,
    observe,
    operator_from_pilots,
    snr_to_noise_power,
)
from .linear_est import CovarianceModel, lmmse_estimate, ls_estimate, sample_covariance
from .sparse_est import PolarDictionary, build_polar_dictionary, omp_estimate, somp_estimate
from .denoiser import DenoiserParams, NetworkConfig, parameter_count
from .diffusion import (
    NoiseSchedule,
    TrainingConfig,
    forward_sample,
    likelihood_score,
    linear_schedule,
    posterior_estimate,
    prior_score,
    train,
)
from .bench import ExperimentSpec, ResultRow, generate_dataset, nmse, run_sweep

__version__ = "0.1.0"
