"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A scalar argument is outside its allowed range."""


class InvalidStateError(ValueError):
    """A pointer or density operator violates a structural invariant."""


class PhysicalityError(ValueError):
    """A measurement strength lies outside the unit circle F^2 + G^2 <= 1."""
