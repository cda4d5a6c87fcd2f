"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: argument problems exit 2, data
validation problems exit 3 and numeric degeneracy exits 4.
"""


class AncestryMapError(Exception):
    """Base class for all package errors."""


class ArgumentError(AncestryMapError, ValueError):
    """An argument is outside its allowed range."""


class DataValidationError(AncestryMapError, ValueError):
    """Input data violates a structural invariant (ids, tokens, shapes)."""


class ParseError(DataValidationError):
    """A file could not be parsed. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class DegeneratePanelError(AncestryMapError, ArithmeticError):
    """No usable (polymorphic) SNPs remain for a set of subjects."""


class ConstraintError(AncestryMapError, ValueError):
    """Matching ratio bounds make the flow problem infeasible."""

    def __init__(self, message, bound=None):
        self.bound = bound
        super().__init__(message)
