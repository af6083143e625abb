class TermlabError(Exception):
    """Base class for all errors raised by termlab."""


class InputError(TermlabError, ValueError):
    """Malformed or inconsistent input data. The CLI maps this to exit code 2."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{':'.join(where)}: {message}"
        super().__init__(message)


class NumericalError(TermlabError, ArithmeticError):
    """A numerical routine could not produce a valid result (exit code 3)."""
