"""Exception types shared across the package."""


class DataFormatError(ValueError):
    """An input file does not match its declared on-disk format."""


class DataConsistencyError(ValueError):
    """Structurally valid inputs contradict each other or a dataset invariant."""


class TruncatedFileError(OSError):
    """A binary file ends before its declared payload.

    ``offset`` is the byte position at which data ran out.
    """

    def __init__(self, path, offset, message=None):
        self.path = str(path)
        self.offset = int(offset)
        super().__init__(
            message
            or f"{self.path}: file truncated at byte offset {self.offset}"
        )


class CalibrationError(RuntimeError):
    """A requested reduction rate lies outside the achievable range."""
