"""Exception types shared across the package."""


class KpsimError(Exception):
    """Base class for all errors raised by kpsim."""


class DomainError(KpsimError, ValueError):
    """Invalid ids, malformed instances, or broken preconditions."""


class CostOverflowError(KpsimError, OverflowError):
    """A cost or potential accumulator exceeded the 128-bit limit."""


class UnsupportedConfigError(KpsimError, ValueError):
    """Operation requested for a machine model / policy it does not support."""


class BudgetError(KpsimError, ValueError):
    """An enumeration or weight-generation limit was exceeded."""
