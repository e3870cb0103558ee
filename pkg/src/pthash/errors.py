"""Exception types shared across the package."""


class PTHashError(Exception):
    pass


class SeedFailure(PTHashError):
    """Construction failed for one seed; the builder retries with the next."""

    def __init__(self, reason: str, seed: int):
        super().__init__(f"seed {seed}: {reason}")
        self.reason = reason
        self.seed = seed


class BuildError(PTHashError):
    pass


class FormatError(PTHashError, ValueError):
    """Base class for deserialization failures."""


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncationError(FormatError):
    pass
