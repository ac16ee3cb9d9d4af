"""Exception hierarchy.

Bad volumes, bad files and bad arguments all derive from :class:`DataError`;
missing or unreadable files surface as plain ``OSError``.  The CLI maps the two
families onto different exit codes.
"""


class VoxfuseError(Exception):
    """Base class for every error raised by this package."""


class DataError(VoxfuseError, ValueError):
    pass


class ShapeMismatchError(DataError):
    def __init__(self, a, b):
        super().__init__(f"shape mismatch: {tuple(a)} vs {tuple(b)}")
        self.shapes = (tuple(a), tuple(b))


class EmptyInputError(DataError):
    pass


class RegionError(DataError):
    pass


class UndefinedReferenceError(DataError):
    """Percent error requested against a zero reference value."""


class ConfigError(VoxfuseError, ValueError):
    pass


class FormatError(DataError):
    pass


class MalformedHeaderError(FormatError):
    pass


class UnsupportedDatatypeError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class BadMagicError(FormatError):
    pass


class AtlasLabelError(FormatError):
    pass
