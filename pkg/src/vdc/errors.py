"""Error taxonomy and enumeration budgets.

Every refusal in this package is explicit: an operation that cannot satisfy
its preconditions raises :class:`PreconditionError`, and an operation whose
enumeration would exceed the configured budget raises :class:`BudgetExceeded`
*before* doing the work.  Both carry a machine-readable ``details`` dict so
the CLI can emit a structured diagnostic (exit code 2) instead of a stack
trace.
"""

from __future__ import annotations

DEFAULT_BUDGET = 2**28


class VdcError(Exception):
    """Base class for all anticipated failures.

    ``code`` is a short stable string ("precondition", "budget", "input"),
    ``details`` a JSON-friendly dict describing what was violated.
    """

    code = "internal"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


class InputError(VdcError):
    """Malformed user input (bad polynomial text, bad field literal, ...)."""

    code = "input"


class PreconditionError(VdcError):
    """A documented precondition of an operation does not hold."""

    code = "precondition"


class BudgetExceeded(VdcError):
    """The requested enumeration is larger than the configured budget."""

    code = "budget"


class Budget:
    """A mutable counter capping total enumeration size.

    Operations charge the number of points (or table cells) they are about
    to touch; the charge is refused up front when it would push the total
    past ``limit``.  One Budget instance is threaded through a whole CLI
    run, so nested calls share the cap.
    """

    def __init__(self, limit: int = DEFAULT_BUDGET):
        if limit <= 0:
            raise InputError("budget limit must be positive", limit=limit)
        self.limit = int(limit)
        self.used = 0

    def charge(self, amount: int, what: str = "points") -> None:
        amount = int(amount)
        if amount < 0:
            raise VdcError("negative budget charge", amount=amount)
        if self.used + amount > self.limit:
            raise BudgetExceeded(
                f"enumeration of {amount} {what} exceeds budget "
                f"({self.used} used of {self.limit})",
                requested=amount,
                used=self.used,
                limit=self.limit,
                what=what,
            )
        self.used += amount

    def would_exceed(self, amount: int) -> bool:
        """Check a charge without raising or consuming."""
        return self.used + int(amount) > self.limit


def ensure_budget(budget: Budget | None) -> Budget:
    return budget if budget is not None else Budget()
