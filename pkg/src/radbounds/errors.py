"""Exception taxonomy shared across the package.

Regime failures raised from bound evaluators are structured: they carry the
violated hypotheses by name and, for blow-up boundaries, the critical value,
so sweep tooling can record them instead of aborting.
"""

from __future__ import annotations


class RadBoundsError(Exception):
    """Base class for all package errors."""


class DomainError(RadBoundsError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(RadBoundsError, OverflowError):
    """Result not representable (overflow of a special function)."""


class ConfigurationError(RadBoundsError):
    """Invalid or incomplete problem description (missing override, bad key...)."""


class RegimeError(RadBoundsError):
    """A proposition's hypotheses do not hold for the given instance."""

    def __init__(self, violations, critical=None):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        self.critical = dict(critical or {})
        msg = "; ".join(self.violations)
        if self.critical:
            msg += " [critical: %s]" % ", ".join(
                "%s=%r" % kv for kv in sorted(self.critical.items())
            )
        super().__init__(msg)


class BlowUpError(RegimeError):
    """Evaluation at or beyond a blow-up boundary (q -> Q, chi -> 1, ...)."""


class SolverError(RadBoundsError):
    """Nonlinear solve failed; carries the residual history."""

    def __init__(self, message, residual_history=None):
        self.residual_history = list(residual_history or [])
        super().__init__(message)
