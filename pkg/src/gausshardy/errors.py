"""Exception types shared by the estimators and the CLI."""


class InvalidInputError(ValueError):
    """Malformed arguments (overlapping pieces, non-admissible balls, ...)."""


class PreconditionError(ValueError):
    """Arguments are well-formed but violate an operation's precondition."""
