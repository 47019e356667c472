"""Simulation and verification tools for Hermite-driven moving averages."""

from .chaos_tools import ChaosKernel, RosenblattSpec, chaos2_cumulant, chaos2_sample, rosenblatt_kernel
from .gaussian_noise import FgnSampler, FgnSpec, fgn_autocovariance, sample_fgn
from .hermite_sim import (
    DirectHermiteSimulator,
    HermiteRankSimulator,
    ProcessPath,
    simulate_hermite_direct,
    simulate_hermite_path,
)
from .kernels import BACKEND
from .mc_engine import ExperimentConfig, MCResult, ks_two_sample, run_experiment, sample_cumulants
from .moving_average import KernelSpec, build_ma_path, check_admissible, ou_path, parse_kernel
from .quadratic_functional import compute_G, gaussian_case_variance
from .special_math import HurstParams, derive_params, hermite_scale_c, limit_constant_b, limit_scale

__all__ = [
    "BACKEND",
    "ChaosKernel",
    "DirectHermiteSimulator",
    "ExperimentConfig",
    "FgnSampler",
    "FgnSpec",
    "HermiteRankSimulator",
    "HurstParams",
    "KernelSpec",
    "MCResult",
    "ProcessPath",
    "RosenblattSpec",
    "build_ma_path",
    "chaos2_cumulant",
    "chaos2_sample",
    "check_admissible",
    "compute_G",
    "derive_params",
    "fgn_autocovariance",
    "gaussian_case_variance",
    "hermite_scale_c",
    "ks_two_sample",
    "limit_constant_b",
    "limit_scale",
    "ou_path",
    "parse_kernel",
    "rosenblatt_kernel",
    "run_experiment",
    "sample_cumulants",
    "sample_fgn",
    "simulate_hermite_direct",
    "simulate_hermite_path",
]
