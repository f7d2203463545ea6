"""Exception types shared across the toolkit."""

from __future__ import annotations


class FragscriptError(Exception):
    """Base class for all errors raised by this package."""


class LexError(FragscriptError):
    def __init__(self, message: str, span: tuple[int, int]):
        super().__init__(f"{message} at {span[0]}..{span[1]}")
        self.span = span


class ParseError(FragscriptError):
    def __init__(self, message: str, span: tuple[int, int]):
        super().__init__(f"{message} at {span[0]}..{span[1]}")
        self.span = span


class UnknownVariable(FragscriptError):
    pass


class AmbiguousRunningVariable(FragscriptError):
    pass


class NotASubtype(FragscriptError):
    pass


class UnknownBuiltin(FragscriptError):
    pass


class ArityMismatch(FragscriptError):
    pass


class NonTermination(FragscriptError):
    """Fixed-point iteration exceeded its bound; indicates a monotonicity bug."""


class CodegenError(FragscriptError):
    pass


class UnsupportedNode(CodegenError):
    pass


class BadOutputType(CodegenError):
    pass


class NonConstLoopBound(CodegenError):
    pass


class GlslError(FragscriptError):
    """Emitted shader source failed validation or simulation."""


class RuntimeTypeError(FragscriptError):
    pass


class UnboundVariable(FragscriptError):
    pass


class UnknownTexture(FragscriptError):
    pass
