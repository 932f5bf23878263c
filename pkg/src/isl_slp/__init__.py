"""Dual-function MIMO-OFDM waveform design.

Synthesizes transmit waveforms that keep the radar range autocorrelation
clean (low integrated sidelobe level toward a probed direction) while every
user's received constellation point stays inside its constructive region at
the requested SNR margin, under a total power budget. Includes the
majorization-minimization designer, the minimum-power communication-only
reference precoder, and a radar simulation harness (range profiles,
range-Doppler maps, Monte Carlo range estimation).
"""

from .config import SystemConfig, ConfigError, load_config, validated
from .comm import (
    TdlChannel,
    generate_tdl_channel,
    taps_to_frequency_response,
    generate_psk_symbols,
    build_ci_constraints,
    verify_ci_margins,
    CiConstraintSet,
)
from .radar_metrics import (
    steering_vector,
    emitted_samples,
    circular_autocorrelation,
    isl_time_domain,
    isl_analytic,
    beam_spectrum,
    structured_quadratics,
)
from .baseline import min_power_precoder
from .subsolver import solve_subproblem, SubsolverError, InfeasibleError
from .optimizer import optimize_waveform, MmTrace, surrogate_b, lambda_a, lambda_b
from .radar_sim import (
    Target,
    attenuation_factor,
    synthesize_echo,
    pmf_cc_range_profile,
    range_doppler_map,
    detect_two_targets,
    monte_carlo_rmse,
)

__version__ = "0.1.0"

__all__ = [
    "SystemConfig",
    "ConfigError",
    "load_config",
    "validated",
    "TdlChannel",
    "generate_tdl_channel",
    "taps_to_frequency_response",
    "generate_psk_symbols",
    "build_ci_constraints",
    "verify_ci_margins",
    "CiConstraintSet",
    "steering_vector",
    "emitted_samples",
    "circular_autocorrelation",
    "isl_time_domain",
    "isl_analytic",
    "beam_spectrum",
    "structured_quadratics",
    "min_power_precoder",
    "solve_subproblem",
    "SubsolverError",
    "InfeasibleError",
    "optimize_waveform",
    "MmTrace",
    "surrogate_b",
    "lambda_a",
    "lambda_b",
    "Target",
    "attenuation_factor",
    "synthesize_echo",
    "pmf_cc_range_profile",
    "range_doppler_map",
    "detect_two_targets",
    "monte_carlo_rmse",
    "__version__",
]
