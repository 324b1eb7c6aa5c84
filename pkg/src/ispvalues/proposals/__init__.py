from .base import MixtureProposal, Proposal, mixture_sample
from .gaussian import GaussianPair, gaussian_sample_and_weight
from .permutation import PermutationFiber, TiltedPermutation, tilted_permutation_logprob, tilted_permutation_sample
from .pointprocess import (
    BinnedPairFiber,
    TiltedPointProcess,
    TiltedPointProcessConfig,
    TiltSign,
    tilted_pointprocess_sample,
    uniform_trains,
)
from .rasch import RaschMixture, rasch_log_weight
from .tables import (
    ConditionalPoissonColumns,
    MarginFiber,
    cp_column_logprob,
    cp_column_sample,
    gale_ryser_feasible,
    structured_table_direct_sample,
    theta_tilted_matrix_sample,
)

__all__ = [
    "BinnedPairFiber",
    "ConditionalPoissonColumns",
    "GaussianPair",
    "MarginFiber",
    "MixtureProposal",
    "PermutationFiber",
    "Proposal",
    "RaschMixture",
    "TiltSign",
    "TiltedPermutation",
    "TiltedPointProcess",
    "TiltedPointProcessConfig",
    "cp_column_logprob",
    "cp_column_sample",
    "gale_ryser_feasible",
    "gaussian_sample_and_weight",
    "mixture_sample",
    "rasch_log_weight",
    "structured_table_direct_sample",
    "theta_tilted_matrix_sample",
    "tilted_permutation_logprob",
    "tilted_permutation_sample",
    "tilted_pointprocess_sample",
    "uniform_trains",
]
