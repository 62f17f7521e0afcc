"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the domain of the operation."""


class ResourceError(RuntimeError):
    """An enumeration or table would exceed the configured cap."""


class ValidationError(DomainError):
    """A loaded object violates a structural invariant."""
