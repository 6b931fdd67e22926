"""Exception hierarchy shared across the package."""


class CausalPredError(Exception):
    """Base class for all errors raised by this package."""


class DataError(CausalPredError):
    """Problems with dataset ingestion or shape."""


class DuplicateColumn(DataError):
    pass


class NonNumericCell(DataError):
    def __init__(self, row, col):
        super().__init__(f"non-numeric cell at row {row}, column {col}")
        self.row = row
        self.col = col


class MissingVariable(DataError):
    def __init__(self, variable):
        super().__init__(f"variable {variable} not present in dataset")
        self.variable = variable


class InvalidSize(CausalPredError):
    pass


class KTooLarge(CausalPredError):
    pass


class LengthMismatch(CausalPredError):
    pass


class TagMismatch(CausalPredError):
    pass


class InvalidDegree(CausalPredError):
    pass


class DegenerateInput(CausalPredError):
    """Constant column, singular matrix, or otherwise untestable input."""


class ZeroCorrelation(CausalPredError):
    pass


class UnknownNode(CausalPredError):
    def __init__(self, node):
        super().__init__(f"node {node} is not part of the graph")
        self.node = node


class GraphError(CausalPredError):
    pass


class MarginalMismatch(CausalPredError):
    pass


class NonPsdInput(CausalPredError):
    pass


class InvalidParams(CausalPredError):
    pass


class InvalidN(InvalidParams):
    pass


class NTooLarge(CausalPredError):
    pass


class UnsupportedClass(CausalPredError):
    pass


class UnsupportedQueryForModel(CausalPredError):
    pass


class ParseError(CausalPredError):
    pass
