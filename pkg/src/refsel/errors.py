"""Exception hierarchy shared by every module."""


class RefselError(Exception):
    """Base class for all errors raised by refsel."""


class InvalidInputError(RefselError, ValueError):
    pass


class InvalidStateError(RefselError):
    pass


class EmptyResultError(RefselError):
    """An operation would return an empty reference set."""


class CapacityError(RefselError):
    """An exhaustive search exceeds its configured cap."""

    def __init__(self, needed, cap, what="candidates"):
        self.needed = needed
        self.cap = cap
        super().__init__(f"search space of {needed} {what} exceeds cap {cap}")


class InfeasibleError(RefselError):
    pass


class NumericError(RefselError, ArithmeticError):
    pass


class ParseError(RefselError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


class ConfigError(RefselError, ValueError):
    pass


class EvaluationError(RefselError):
    pass
