"""Exception types raised across the package.

Every error carries a stable ``code`` so the CLI can emit machine-readable
failures.
"""


class ObfIdentError(Exception):
    code = "error"


class DomainError(ObfIdentError, ValueError):
    code = "domain"


class ArityError(ObfIdentError, ValueError):
    code = "arity"


class UnsupportedRegion(ObfIdentError, ValueError):
    code = "unsupported_region"


class BranchError(ObfIdentError, ValueError):
    code = "branch"


class ConvergenceError(ObfIdentError, RuntimeError):
    code = "convergence"


class NumericalError(ObfIdentError, ArithmeticError):
    code = "numerical"


class SingularityError(NumericalError):
    code = "singular"


class DegenerateError(NumericalError):
    code = "degenerate"


class InstabilityError(ObfIdentError, ValueError):
    code = "unstable"


class StabilityError(InstabilityError):
    code = "stability"


class RankDeficientError(NumericalError):
    code = "rank_deficient"

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class RankError(NumericalError):
    code = "rank"


class SizeError(ObfIdentError, ValueError):
    code = "size"


class DimensionError(ObfIdentError, ValueError):
    code = "dimension"


class ResidueError(ObfIdentError, ValueError):
    code = "residue"
