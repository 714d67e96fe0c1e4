"""Exception types shared across the package."""


class DegenerateDataError(ValueError):
    """Raised when data has no usable variation for the requested operation
    (constant columns, identical projections, zero denominators)."""


class CsvParseError(ValueError):
    """Raised on malformed CSV input; carries 1-based row/column coordinates."""

    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.row = row
        self.column = column
