"""Exception hierarchy shared across the package."""


class VloError(Exception):
    """Base class for all package errors."""


class ConfigError(VloError):
    """Invalid configuration value or combination."""


class DomainError(VloError):
    """Operation called with inputs outside its domain."""


class ParseError(VloError):
    """Malformed textual input; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class TransportError(VloError):
    """Backend unreachable or retries exhausted."""


class MalformedResponseError(VloError):
    """Backend reply failed schema validation after all retries."""


class SampleAborted(VloError):
    """A generation stage exhausted its retry budget; the sample is discarded."""

    def __init__(self, stage: str, reason: str):
        super().__init__(f"sample aborted at {stage}: {reason}")
        self.stage = stage
        self.reason = reason


class DatasetError(VloError):
    """Dataset file unreadable or, in strict mode, schema-invalid."""


class AlignmentError(VloError):
    """Model trace cannot be aligned to the reasoning tree."""
