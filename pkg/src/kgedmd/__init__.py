"""Kernel-based estimation of Koopman generators and Schroedinger operators
from Gram matrices of kernel values and kernel derivatives."""

__version__ = "0.1.0"

from .kernels import GaussianKernel, PolynomialKernel, make_kernel  # noqa: E402
from .gram import SampleSet  # noqa: E402
from .eig import EigenSolution, solve_general, solve_symmetric  # noqa: E402
from .config import ExperimentConfig, load_config  # noqa: E402
from .pipeline import run_experiment, write_report  # noqa: E402

__all__ = [
    "__version__",
    "GaussianKernel",
    "PolynomialKernel",
    "make_kernel",
    "SampleSet",
    "EigenSolution",
    "solve_general",
    "solve_symmetric",
    "ExperimentConfig",
    "load_config",
    "run_experiment",
    "write_report",
]
