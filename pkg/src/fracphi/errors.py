"""Exception types shared across the package."""

from __future__ import annotations


class FracphiError(Exception):
    """Base class for all package-specific errors."""


class ExprSyntaxError(FracphiError):
    """Raised by the expression parser; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"syntax error at offset {offset}: {message}")
        self.offset = offset


class ExprDomainError(FracphiError):
    """Raised when evaluating an expression outside its natural domain."""

    def __init__(self, message: str, node: str):
        super().__init__(f"{message} in '{node}'")
        self.node = node


class ValidationFailure(FracphiError):
    """Raised when a problem fails validation; carries every finding."""

    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("; ".join(str(f) for f in self.findings))


class GammaPoleError(FracphiError):
    """Gamma evaluated at a non-positive integer."""


class SeriesDivergenceError(FracphiError):
    """A series hit its level cap without meeting the stopping rule.

    Carries the partial sum and the magnitude of the last level so callers
    can inspect how far the accumulation got.
    """

    def __init__(self, message: str, partial, last_level: float):
        super().__init__(message)
        self.partial = partial
        self.last_level = last_level


class IterationLimitError(FracphiError):
    """Fixed-point iteration exceeded kmax; carries the last iterate and defect."""

    def __init__(self, message: str, last_iterate, defect: float):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.defect = defect
