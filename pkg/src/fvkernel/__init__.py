"""Feynman-Vernon influence functionals for qubits coupled quadratically to
discrete fermionic or bosonic baths."""
from .errors import DivergenceError, FVKernelError, SizeError, ValidationError
from .fock import BathSpec, LinearBoseBathSpec, Statistics, random_bath
from .correlations import (Side, cumulant4, multitime_trace, pair_expectation,
                           pairing_decomposition, two_time_analytic, wick_check)
from .kernels import (InfluenceTable, KernelPair, PathPair, bose_bilinear_kernels,
                      bose_linear_kernels, eta_coefficients, fermi_kernels,
                      fv_action, kernel_limits)
from .dynamics import (SystemSpec, TimeGrid, TrajectorySeries, error_scaling,
                       exact_reduced_dynamics, gaussian_reduced_dynamics,
                       observable_series, pathsum_reduced_dynamics)

__version__ = "0.1.0"
