"""Exception hierarchy and the process exit codes each class maps to."""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_FORMAT = 4
EXIT_VERIFY = 5
EXIT_QUALITY = 6


class VjigError(Exception):
    """Base class for all package errors."""

    exit_code = EXIT_FAILURE


class InvalidArgumentError(VjigError, ValueError):
    """A caller-supplied value violates a documented precondition."""

    exit_code = EXIT_USAGE


class CapacityError(VjigError):
    """A requested computation exceeds a size, budget, or overflow limit."""

    exit_code = EXIT_CAPACITY


class FormatError(VjigError):
    """A file does not conform to its declared on-disk format."""

    exit_code = EXIT_FORMAT


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class BadVersionError(FormatError):
    """File declares a format version this build does not support."""


class ChecksumError(FormatError):
    """File content does not match its embedded checksum."""


class VerificationError(VjigError):
    """Dataset content failed an integrity or consistency check."""

    exit_code = EXIT_VERIFY


class StalePermutationError(VerificationError):
    """Record or shard is bound to a different permutation file."""
