"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SpkiError(Exception):
    """Base class for all library errors."""


class ModelError(SpkiError, ValueError):
    """A value violates a structural invariant of the certificate model."""


class NotFullyQualified(ModelError):
    pass


class RevokerMismatch(ModelError):
    pass


class CodecError(SpkiError, ValueError):
    """Raised for any input the S-expression layer refuses."""


class ParseError(CodecError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class EmptyInput(ParseError):
    def __init__(self, position: int = 0):
        super().__init__("empty input", position)


class UnbalancedParens(ParseError):
    pass


class TrailingInput(ParseError):
    pass


class InvalidEncoding(ParseError):
    pass


class MalformedCert(CodecError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class OnlineTestUnsupported(MalformedCert):
    """Online-test validity forms (revalidation, one-time checks) are out of scope."""


class EngineError(SpkiError):
    pass


class UnknownRule(EngineError, ValueError):
    pass


class NotLive(EngineError, ValueError):
    pass


class BoundTooSmall(EngineError, ValueError):
    pass


class NotConcrete(EngineError, ValueError):
    pass


class OracleError(SpkiError):
    pass


class InconsistentCRLs(OracleError, ValueError):
    def __init__(self, first, second):
        issuer = getattr(first, "issuer", None)
        super().__init__(
            f"CRLs from {issuer!r} have overlapping validity: {first.validity!r} and {second.validity!r}"
        )
        self.pair = (first, second)


class UniverseError(OracleError, ValueError):
    pass


class SupplyTooSmall(OracleError, ValueError):
    pass


class WitnessFailure(OracleError, AssertionError):
    """The constructed witness run did not refute the target formula."""
