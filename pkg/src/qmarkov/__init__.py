"""Classical and coinless quantum evolution of reversible Markov chains."""

__version__ = "0.1.0"

from .chain import (
    EigenSystem,
    Graph,
    MarkovChain,
    SpectralData,
    ValidationReport,
    VertexWindow,
    degenerate_blocks,
    eigendecompose,
    hamiltonian,
    numerical_system,
    simple_random_walk,
    spectral_reconstruct_K,
    symmetrize,
    validate_chain,
)
from .evolution import (
    EvolutionResult,
    classical_evolve_spectral,
    classical_step,
    empirical_average,
    long_time_average,
    measurement_distribution,
    quantum_amplitude,
    quantum_evolve,
    transition_matrix_power,
)
from .families import (
    FAMILIES,
    AnalyticEigenSystem,
    Charlier,
    Hahn,
    Krawtchouk,
    Meixner,
    QHahn,
    SolvableFamily,
    family_from_dict,
)
