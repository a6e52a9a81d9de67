"""Pseudo-likelihood community detection for Gaussian weighted block models."""
from ._accel import backend_name
from .errors import (ConvergenceError, DegeneracyWarning, InvalidInputError,
                     InvalidParameterError, WSBMError)
from .initializers import OracleSpec, db_init, oracle_init, parse_init, spectral_init
from .metrics import (hungarian_match, misclassification_loss, mismatch_proportion,
                      overlap_table)
from .model import (BlockParams, EdgeDistributionSpec, Labeling, WeightedNetwork,
                    derive_seed, homogeneous_params, sample_robustness_network, sample_wsbm)
from .pl_core import (block_sums, complete_log_likelihood, confusion_matrix, e_step,
                      estimate_block_params, label_update, m_step, mixture_params, pl_fit,
                      pseudo_log_likelihood)
from .theory import balanced_bounds, binary_entropy, bound_heatmap, kappa, unbalanced_bounds

__version__ = "0.1.0"

__all__ = [
    "BlockParams", "ConvergenceError", "DegeneracyWarning", "EdgeDistributionSpec",
    "InvalidInputError", "InvalidParameterError", "Labeling", "OracleSpec", "WSBMError",
    "WeightedNetwork", "backend_name", "balanced_bounds", "binary_entropy", "block_sums",
    "bound_heatmap", "complete_log_likelihood", "confusion_matrix", "db_init", "derive_seed",
    "e_step", "estimate_block_params", "homogeneous_params", "hungarian_match", "kappa",
    "label_update", "m_step", "misclassification_loss", "mismatch_proportion",
    "mixture_params", "oracle_init", "overlap_table", "parse_init", "pl_fit",
    "pseudo_log_likelihood", "sample_robustness_network", "sample_wsbm", "spectral_init",
    "unbalanced_bounds",
]
