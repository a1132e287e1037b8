"""Exception hierarchy.

Every error carries a short ``code`` that the CLI prints on stderr.
"""


class NSSApproxError(Exception):
    code = "error"


class InvalidArgument(NSSApproxError, ValueError):
    code = "invalid-argument"


class InvalidSequence(NSSApproxError, ValueError):
    code = "invalid-sequence"


class OutOfRange(NSSApproxError, IndexError):
    code = "out-of-range"


class DivergentConstant(NSSApproxError, ArithmeticError):
    code = "divergent-constant"


class BudgetExceeded(NSSApproxError, RuntimeError):
    code = "budget-exceeded"

    def __init__(self, message, *, terms_so_far=0, deepest_level=0):
        super().__init__(message)
        self.terms_so_far = terms_so_far
        self.deepest_level = deepest_level


class TruncationUnsound(NSSApproxError, RuntimeError):
    code = "truncation-unsound"
