"""Exception types shared across the package."""


class SubmaxError(Exception):
    """Base class for all package errors."""


class InstanceError(SubmaxError):
    """Malformed instance data: bad kind, bad lengths, bad values."""


class ConfigError(SubmaxError):
    """Rejected solver configuration (epsilon grid, caps, budgets)."""


class BudgetError(SubmaxError):
    """A fractional-support budget was exceeded; nothing was truncated."""

    def __init__(self, frac, cap, hint=""):
        self.frac = frac
        self.cap = cap
        msg = f"fractional support {frac} exceeds cap {cap}"
        if hint:
            msg += f"; {hint}"
        super().__init__(msg)


class ContractViolation(SubmaxError):
    """An internal guarantee failed; indicates a bug, never swallowed."""


class UndefinedDerivative(SubmaxError):
    """Derivative queried along a coordinate pinned at probability one."""
