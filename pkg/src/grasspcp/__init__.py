"""Toy-scale PCP machinery over F_2: Grassmann tests, bilinear Fourier analysis,
the outer two-prover game, the composed CSP and CSP regularization."""

from .errors import DomainError, ResourceError, ValidationError
from .seeding import child_seed

__all__ = ["DomainError", "ResourceError", "ValidationError", "child_seed"]
__version__ = "0.1.0"
