"""Single-qudit variational classifiers.

Encodes feature vectors into sequences of two-level rotations on a d-level
system, trains the rotation parameters under implicit or explicit
metric-learning losses, and evaluates accuracy under both ideal state-vector
and noisy Lindblad dynamics.
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    AnsatzParams,
    EncodingSpec,
    Rotation,
    VirtualBasis,
    apply_rotation,
    build_circuit,
    build_states,
    encode,
    fidelity,
    ground_state,
    plus_state,
    synthesize_reference_unitary,
)
from .data import Dataset, fit_pca, apply_pca, standardize  # noqa: F401
from .errors import (  # noqa: F401
    ConfigError,
    DataError,
    DimensionError,
    EncodingError,
    NumericalError,
    QuditLearnError,
)
from .metric import (  # noqa: F401
    ClassEnsemble,
    ReferenceSet,
    TrainConfig,
    TrainedModel,
    classify,
    explicit_loss,
    implicit_loss,
    test_accuracy,
    train,
)
from .mos import GAConfig, evolve, gram_matrix, mos_energy  # noqa: F401
from .noise import NoiseModel, Pulse, evolve_schedule, lindblad_rhs  # noqa: F401
