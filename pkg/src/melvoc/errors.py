"""Exception taxonomy shared across the package.

Plain invalid arguments raise ValueError. The classes here exist where
callers need to branch on the failure kind: model-identifier handling,
file formats, and numeric blow-ups during synthesis.
"""


class ModelIdParseError(ValueError):
    """Model identifier string does not match the C<N>...[I] grammar."""


class ArchitectureError(ValueError):
    """Identifier parses but describes an impossible architecture."""


class NumericError(ArithmeticError):
    """Non-finite values appeared during synthesis."""


class FormatError(Exception):
    """Base class for file-format violations."""


class MagicMismatchError(FormatError):
    """File does not start with the expected magic bytes."""


class ScheduleMismatchError(FormatError):
    """Stored tensors disagree with the shape schedule of the model id."""


class TruncatedFileError(FormatError):
    """File ends before the declared payload is complete."""
