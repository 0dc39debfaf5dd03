"""Higher-order correlation toolkit for binary spin data.

Exact parity-constrained loop models, seeded autoregressive sampling,
Shannon information measures up to arbitrary order, contrastive-divergence
training of restricted Boltzmann machines, and closed-form extraction of
the trained machine's effective n-body couplings.
"""

__version__ = "0.1.0"

from .lattice import (
    ExactDistribution,
    LoopModel,
    PartitionSpec,
    condition,
    iid_coin_distribution,
    tc_loop_distribution,
)
from .sampling import (
    SampleSet,
    empirical_distribution,
    read_samples,
    sample_autoregressive,
    write_samples,
)
from .infotheory import (
    EntropyReport,
    conditional_mutual_information,
    entropy,
    interaction_information,
    interaction_information_recursive,
    mutual_information,
    s_topo_kitaev_preskill,
    s_topo_levin_wen,
    s_topo_n,
)
from .rbm import (
    RbmParams,
    TrainConfig,
    cd_gradient,
    energy,
    hidden_conditional,
    read_params,
    sample_rbm,
    train,
    visible_conditional,
    write_params,
)
from .interrogate import (
    InteractionTable,
    SizeCapError,
    effective_energy,
    interaction_pm1,
    interaction_table_pm1,
    interaction_table_zero_one,
    interaction_zero_one,
    oracle_moebius_coefficients,
    oracle_parity_coefficients,
)
