"""Exception hierarchy shared by all modules."""


class RFClusterError(Exception):
    """Base class for every error raised by this package."""


class ParseError(RFClusterError):
    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class EmptyInput(RFClusterError):
    pass


class OracleScaleExceeded(RFClusterError):
    pass


class DimError(RFClusterError):
    pass


class Unsupported(RFClusterError):
    pass


class DegenerateCorrelation(RFClusterError):
    pass


class DomainError(RFClusterError):
    pass


class Infeasible(RFClusterError):
    """An optimisation problem has no feasible point."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class TransportError(RFClusterError):
    def __init__(self, message, node_id=None):
        super().__init__(message if node_id is None else f"node {node_id}: {message}")
        self.node_id = node_id
