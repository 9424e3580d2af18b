# errors.py - exception hierarchy shared by the numerical services and the CLI

from __future__ import annotations

from typing import Any, Dict, List, Optional


class SpectralError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SpectralError):
    """Invalid experiment configuration (unknown key, bad value, unreadable file)."""


class BudgetExhaustedError(SpectralError):
    """A truncation bound could not reach the requested tolerance within the resource cap."""

    def __init__(self, message: str, best_bound: float, depth: int):
        super().__init__(f"{message} (best bound {best_bound:.3e} at depth {depth})")
        self.best_bound = best_bound
        self.depth = depth


class IntegrabilityError(SpectralError):
    """Integrand or measure fails the integrability condition an operation needs."""


class DivergenceError(SpectralError):
    """A series or product requested outside its convergence range."""


class SpectralPairError(SpectralError):
    """Parseval deficit above threshold: (measure, spectrum) is not a usable spectral pair."""

    def __init__(self, message: str, deficits: Optional[List[float]] = None):
        super().__init__(message)
        self.deficits = list(deficits or [])


class MismatchedContextError(SpectralError):
    """Integrand and integrator were built on different measure/spectrum/grid contexts."""


class NonConvergenceError(SpectralError):
    """Mesh refinement stopped at its cap without meeting the Cauchy tolerance."""

    def __init__(self, message: str, trace: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.trace = list(trace or [])


class UnsupportedFunctionError(SpectralError):
    """Function outside the family an exact chaos representation exists for."""


class UnderResolvedGridError(SpectralError):
    """Time grid too coarse for the requested quadrature."""
