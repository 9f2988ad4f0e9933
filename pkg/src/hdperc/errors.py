"""Exception hierarchy shared by every module."""


class HDPercError(Exception):
    pass


class InvalidInput(HDPercError, ValueError):
    pass


class BudgetExceeded(HDPercError):
    """A construction would exceed the configured vertex budget."""

    def __init__(self, budget, needed=None):
        self.budget = budget
        self.needed = needed
        msg = f"vertex budget of {budget} exceeded"
        if needed is not None:
            msg += f" (needs at least {needed})"
        super().__init__(msg)


class SolverError(HDPercError):
    """Raised when an iterative solve fails to converge; carries the report."""

    def __init__(self, report, msg="conjugate gradient did not converge"):
        self.report = report
        super().__init__(f"{msg}: residual {report.residual_norm:.3e} after {report.iterations} iterations")


class ConsistencyError(HDPercError):
    pass
