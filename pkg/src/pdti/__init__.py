"""Double tensor integrals over the Einstein-product algebra.

Submodules: ``tensor`` (dense tensors), ``spectral`` (eigendecomposition and
functional calculus), ``operators`` (``T_psi`` and its identities),
``bounds`` (profile catalog and Fourier L1 bounds), ``harness`` (seeded
sampling and Monte Carlo experiments), ``suite`` (verification checks) and
``cli``.
"""

from .errors import (
    DimensionError,
    DivergenceError,
    EvaluationError,
    ParameterError,
    PdtiError,
    ResampleError,
    SingularSymbolError,
    SymmetryError,
)
from .tensor import DenseTensor, Shape, einstein_product, spectral_norm
from .spectral import EigenDecomposition, apply_scalar_function, eigendecompose, tensor_power
from .operators import (
    BivariateSymbol,
    FactorizedRepresentation,
    PdtiOperator,
    fourier_representation,
    pdti_apply_quadrature,
    pdti_apply_spectral,
)
from .bounds import BoundResult, GFunction, fourier_l1_bound
from .harness import SamplerConfig, tail_bound_experiment

__version__ = "0.1.0"
