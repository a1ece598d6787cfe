"""Exception hierarchy shared across the package."""


class MumhorsError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(MumhorsError, ValueError):
    """Invalid scheme parameter or malformed argument."""


class CapacityError(MumhorsError):
    """No private keys left to sign with."""


class DerivationError(MumhorsError):
    """Index derivation could not produce k distinct indices."""


class NoSolutionError(MumhorsError):
    """Numerical solver found no root in its bracket."""


class FormatError(MumhorsError, ValueError):
    """Malformed serialized state or wire data."""
