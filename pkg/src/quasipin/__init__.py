"""Natural occupation numbers of harmonically trapped fermions and their
distance to generalized Pauli constraint facets."""

from quasipin.spectrum import Spectrum
from quasipin.harmonic_model import (
    LengthScales,
    ModelParams,
    delta_from_params,
    ground_state_amplitude,
    params_from_delta,
)
from quasipin.rdm_solver import (
    RdmGram,
    SolverConfig,
    build_hermite_basis,
    natural_occupations,
    occupation_numbers,
    rdm_gram,
)

__all__ = [
    "LengthScales",
    "ModelParams",
    "RdmGram",
    "SolverConfig",
    "Spectrum",
    "build_hermite_basis",
    "delta_from_params",
    "ground_state_amplitude",
    "natural_occupations",
    "occupation_numbers",
    "params_from_delta",
    "rdm_gram",
]

__version__ = "0.1.0"
