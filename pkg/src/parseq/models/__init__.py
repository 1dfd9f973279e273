from .gru import GruDynamics, GruParameters, gru_dynamics, random_gru, zero_gru
from .langevin import (
    GaussianMixturePotential,
    LangevinDynamics,
    LangevinSpec,
    langevin_dynamics,
    mixture_grad,
    mixture_hessian,
    random_langevin,
    random_mixture,
)
from .linear import LinearDynamics, counter_chain, random_orthogonal_lds
from .permutation import (
    PermutationDynamics,
    PermutationWordProblem,
    decode_word,
    prefix_products,
    random_word,
    s5_dynamics,
)
