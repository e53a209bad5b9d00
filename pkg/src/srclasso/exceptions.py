class SrcLassoError(Exception):
    pass


class ParseError(SrcLassoError, ValueError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class EmptyInputError(ParseError):
    pass


class DegenerateColumnError(SrcLassoError, ValueError):
    def __init__(self, index):
        super().__init__(f"column {index} is identically zero")
        self.index = index


class PreconditionError(SrcLassoError, ValueError):
    pass


class BudgetExceededError(SrcLassoError):
    def __init__(self, count, budget):
        super().__init__(f"enumeration needs {count} subsets, budget is {budget}")
        self.count = count
        self.budget = budget


class SingularityError(SrcLassoError, ValueError):
    pass


class NonConvergenceError(SrcLassoError):
    """Raised when the solver hits its sweep cap before the KKT check passes.

    ``solution`` carries the best iterate and its KKT report.
    """

    def __init__(self, message, solution=None, index=None):
        super().__init__(message)
        self.solution = solution
        self.index = index


class ConfigError(SrcLassoError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
