"""Isotropic central-difference stencils for the integer and Riesz fractional Laplacian."""

__version__ = "0.1.0"

from .fractional_stencil import FractionalError, build_fractional, closed_form_1d, sin_fft_stencil
from .grid_quadrature import grid_weights_1d, solve_elimination_scale
from .integer_stencil import Stencil, StencilMeta, build_integer_laplacian, read_stencil, write_stencil
from .smolyak2d import implicit_weights, smolyak_weights
from .spectral_integrators import IntegratorConfig

__all__ = [
    "FractionalError",
    "IntegratorConfig",
    "Stencil",
    "StencilMeta",
    "build_fractional",
    "build_integer_laplacian",
    "closed_form_1d",
    "grid_weights_1d",
    "implicit_weights",
    "read_stencil",
    "sin_fft_stencil",
    "smolyak_weights",
    "solve_elimination_scale",
    "write_stencil",
]
