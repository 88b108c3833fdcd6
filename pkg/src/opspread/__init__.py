"""Heisenberg-picture operator spreading in the mixed-field Ising chain.

Folded TEBD evolution of vectorized local operators, Pauli-weight-resolved
diagnostics (contributing/non-contributing densities, direct contributions,
backflow, Operator Weight Entropy) and equilibration-temperature maps, with
a dense brute-force oracle for small chains.
"""

__version__ = "0.1.0"

from .analysis import (
    BackflowRecord,
    OweSeries,
    WeightSeries,
    backflow,
    densities,
    direct_contributions,
    max_owe,
    owe,
)
from .errors import (
    ConfigError,
    InvalidInputError,
    NumericalFailureError,
    OpspreadError,
    ProtocolIncompleteError,
    ResourceLimitError,
)
from .evolution import (
    EvolutionConfig,
    EvolutionLayer,
    QuenchParams,
    build_trotter_layer,
    dense_hamiltonian,
    step,
)
from .mps import (
    OperatorMPS,
    TruncationLedger,
    identity_mps,
    inner,
    load_checkpoint,
    local_operator_mps,
    osee,
    product_state_mps,
    save_checkpoint,
)
from .pauli import BlochAngles, ParallelBasis, PauliString, WeightSplit, parallel_basis
from .thermo import TemperaturePoint, bloch_map, solve_beta
