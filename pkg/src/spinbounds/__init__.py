"""Correlation-function bounds from truncated spectral series, and their use
in a variational free-energy bound for the transverse-field SK model."""

from .series import Kernel, taylor_table, remainder, verify_sign_definiteness
from .hilbert import DenseOperator, gibbs, duhamel, thermal_expectation, spectral_measure
from .bounds import BoundReport, theorem_bounds, lemma_identity_suite, falk_bruch_corollary
from .sk_variational import SKParams, phi_bound, grad_phi, solve_stationary, classical_q
from .experiment import sample_disorder, phi_s_estimate, bound_validation, derivative_identity_check

__version__ = "0.1.0"
