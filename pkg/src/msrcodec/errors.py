"""Exception hierarchy shared by all msrcodec modules."""


class MsrError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(MsrError, ValueError):
    """An argument violates an operation's precondition."""


class RateMismatchError(InvalidInputError):
    """A feature map arrived at the wrong frame rate."""


class InvalidTokenError(InvalidInputError):
    """A token index is outside the codebook range."""


class InvalidSpeakerError(InvalidInputError):
    """A speaker id is not present in the speaker table."""


class FrozenCodebookError(MsrError, RuntimeError):
    """Attempted to update a frozen codebook."""


class UndefinedF0Error(InvalidInputError):
    """F0 statistics requested for fully unvoiced audio."""


class ConfigError(MsrError, ValueError):
    """A configuration file or configuration value is invalid."""


class NonFiniteLossError(MsrError, RuntimeError):
    """Training produced a non-finite loss; message names the offending term."""


class FormatError(MsrError, ValueError):
    """Base class for binary container format violations."""


class MagicError(FormatError):
    """Container does not start with the expected magic bytes."""


class VersionError(FormatError):
    """Container declares an unsupported format version."""


class TruncatedError(FormatError):
    """Container ends before its declared contents."""


class ChecksumError(FormatError):
    """Container CRC does not match its payload."""
