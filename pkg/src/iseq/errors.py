"""Shared exception types."""


class ParseError(ValueError):
    """Raised on malformed program, graph, or state text.

    Carries 1-based line/column of the offending token when known.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}, col {col}: " if col is not None else f"line {line}: "
        super().__init__(where + message)
