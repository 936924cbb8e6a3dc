"""Grid-cell vector symbolic architecture: block hypervectors of 3D modules."""

from .codebook import Codebook, cleanup, readout, superpose
from .core import (
    GcTensor,
    GcVsaError,
    GridConfig,
    PhaseTensor,
    bind,
    bind_all,
    bundle,
    cosine_similarity,
    extract_phases,
    fractional_power,
    identity,
    materialize,
    random_phases,
    random_symbol,
    unbind,
)
from .resonator import ResonatorState, factorize
from .rotation import decode_angle, permute_orientation, rotate
from .spatial import ModuleGeometry, encode_position, position_codebook, similarity_map

__version__ = "0.1.0"

__all__ = [
    "Codebook", "cleanup", "readout", "superpose",
    "GcTensor", "GcVsaError", "GridConfig", "PhaseTensor",
    "bind", "bind_all", "bundle", "cosine_similarity", "extract_phases",
    "fractional_power", "identity", "materialize", "random_phases", "random_symbol", "unbind",
    "ResonatorState", "factorize",
    "decode_angle", "permute_orientation", "rotate",
    "ModuleGeometry", "encode_position", "position_codebook", "similarity_map",
]
