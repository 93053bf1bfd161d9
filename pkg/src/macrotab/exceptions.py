class MacrotabError(Exception):
    pass


class NotUnisolventError(MacrotabError):
    """Raised when a generalized Vandermonde matrix is numerically singular."""

    def __init__(self, message, null_vector=None, condition=None):
        super().__init__(message)
        self.null_vector = null_vector
        self.condition = condition


class DegenerateCellError(MacrotabError):
    pass


class IncompatibleComplexesError(MacrotabError):
    pass
