"""Exception taxonomy shared by all modules.

The CLI maps these onto process exit codes: parameter/config problems
exit 2, data/format problems exit 3, numeric failures exit 4.
"""


class GlyphAlignError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(GlyphAlignError, ValueError):
    """Caller passed an argument outside an operation's contract."""


class ConfigError(ParameterError):
    """Invalid experiment configuration (bad key, missing path, bad preset)."""


class DataError(GlyphAlignError):
    """Input data violates a precondition (empty pool, missing glyphs)."""


class FormatError(DataError):
    """A file does not parse as its declared format."""


class EmptyInputError(DataError):
    """An operation requiring non-empty input received an empty one."""


class NumericError(GlyphAlignError):
    """A computation produced non-finite values."""
