"""Exception types shared across modules."""


class OutOfRangeError(ValueError):
    """A year or parameter falls outside the domain of the shipped data."""


class MissingDataError(FileNotFoundError):
    """A required data file or curve is absent."""

    def __init__(self, what):
        super().__init__(f"missing data file: {what}")
        self.what = str(what)


class NoIrrError(ValueError):
    """The cash flows never change sign, or no root lies inside the bracket."""


class MultipleIrrWarning(UserWarning):
    """More than one IRR root lies inside the search bracket."""


class ZeroProductionError(ValueError):
    """A hydrogen design delivers no hydrogen."""
