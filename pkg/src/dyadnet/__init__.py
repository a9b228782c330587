"""Dyadic digital nets over GF(2), their dual spaces, and shift-randomized discrepancy experiments."""

from .gf2 import BitMatrix, BitVector
from .netgen import DigitalNet, GeneratingMatrixSet, ShiftVector, generate_net, builtin_matrices
from .dual import dual_space, t_parameter_exact, t_parameter_counting
from .discrepancy import local_discrepancy, l2_discrepancy_sq, dm_decomposition, martingale_terms
from .cltlab import chi_p, ks_distance, clt_experiment, moment_ratio_experiment

__all__ = [
    "BitMatrix", "BitVector", "DigitalNet", "GeneratingMatrixSet", "ShiftVector",
    "generate_net", "builtin_matrices", "dual_space", "t_parameter_exact", "t_parameter_counting",
    "local_discrepancy", "l2_discrepancy_sq", "dm_decomposition", "martingale_terms",
    "chi_p", "ks_distance", "clt_experiment", "moment_ratio_experiment",
]
