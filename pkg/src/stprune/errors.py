"""Exception types raised at the library's validation boundaries."""


class PruneError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(PruneError):
    """Matrices disagree on a shared dimension (e.g. feature width)."""


class LengthMismatchError(PruneError):
    """A per-token vector's length disagrees with the token count."""


class DomainError(PruneError):
    """A parameter lies outside its legal range."""


class ZeroVectorError(PruneError):
    """A zero-norm vector was encountered under the "error" policy."""


class DumpFormatError(PruneError):
    """A token dump file is malformed, truncated, or corrupt."""


class EmptySelectionError(PruneError):
    """An operation requiring at least one selected token got none."""
