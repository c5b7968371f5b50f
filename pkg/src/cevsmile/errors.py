"""Exception types shared across the package."""


class CevError(Exception):
    """Base class for all package errors."""


class DomainError(CevError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ArbitrageError(CevError, ValueError):
    """A price violates the static no-arbitrage bounds."""


class ToleranceNotMet(CevError, ArithmeticError):
    """Adaptive quadrature exhausted its subdivision budget."""


class RegimeNotSupported(CevError, NotImplementedError):
    """The requested expansion is not available for this (p, boundary)."""


class DegenerateDenominator(CevError, ArithmeticError):
    """A ratio has a vanishing denominator."""
