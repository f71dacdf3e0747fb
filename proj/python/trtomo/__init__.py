"""Transverse ray transform toolkit.

Python surface over the C++ core: symmetric tensor algebra, direction
frames, phantom fields, and line-transform evaluation. The full
simulate/reconstruct pipeline lives in the ``trtomo`` command line tool.
"""

from ._core import (
    ContractViolationError,
    CoverageError,
    DegenerateSystemError,
    Error,
    Frame,
    InvalidInputError,
    IoError,
    OutOfDomainError,
    SymTensor,
    TangencyError,
    TensorGrid,
    UnsupportedDimensionError,
    angles_from_direction,
    contract,
    frame_from_angles,
    frame_of_direction,
    great_circles_radius_ok,
    is_generic,
    make_phantom,
    polarize,
    polarize_scalar,
    sym_dim,
    sym_power,
    sym_product,
    trt_extended,
    trt_tensor,
)

__all__ = [
    "ContractViolationError",
    "CoverageError",
    "DegenerateSystemError",
    "Error",
    "Frame",
    "InvalidInputError",
    "IoError",
    "OutOfDomainError",
    "SymTensor",
    "TangencyError",
    "TensorGrid",
    "UnsupportedDimensionError",
    "angles_from_direction",
    "contract",
    "frame_from_angles",
    "frame_of_direction",
    "great_circles_radius_ok",
    "is_generic",
    "make_phantom",
    "polarize",
    "polarize_scalar",
    "sym_dim",
    "sym_power",
    "sym_product",
    "trt_extended",
    "trt_tensor",
]

__version__ = "0.1.0"
