# models/measures.py - spectral measures, spectra and truncation budgets

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from errors import ConfigError, IntegrabilityError


class MeasureKind(Enum):
    """Tag of the spectral-measure union."""
    AIFS = "aifs"
    ATOMIC = "atomic"
    DENSITY = "density"


@dataclass(frozen=True)
class TruncationBudget:
    """Resource knobs shared by every truncated series, product and quadrature."""
    product_depth: int = 32        # starting K for the cosine product, raised on demand
    quadrature_level: int = 20     # cascade depth L (2**L leaves)
    abs_tol: float = 1e-12
    max_product_depth: int = 128

    def __post_init__(self):
        if self.product_depth < 1 or self.quadrature_level < 1:
            raise ConfigError("product_depth and quadrature_level must be >= 1")
        if not self.abs_tol > 0:
            raise ConfigError("abs_tol must be > 0")
        if self.max_product_depth < self.product_depth:
            raise ConfigError("max_product_depth must be >= product_depth")


@dataclass(frozen=True)
class AIFSMeasure:
    """
    Bernoulli convolution: the probability measure invariant under
    tau_+(x) = ratio*(x+1) and tau_-(x) = ratio*(x-1).
    """
    ratio: float
    label: str = ""

    kind = MeasureKind.AIFS
    even = True
    finite_mass = True

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise ConfigError(f"AIFS ratio must lie in (0, 1), got {self.ratio}")

    def tau(self, x, sign: int):
        """One of the two contractions; sign is +1 or -1."""
        return self.ratio * (np.asarray(x) + sign)

    @property
    def support_radius(self) -> float:
        return self.ratio / (1.0 - self.ratio)

    @property
    def compact(self) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite (or truncated) sum of point masses sum_k w_k delta(u - u_k)."""
    points: np.ndarray
    weights: np.ndarray
    tail_bound: float = 0.0        # bound on the omitted mass weighted by 1/(1+u^2)
    unbounded: bool = False        # true when the untruncated measure has infinitely many atoms
    label: str = ""

    kind = MeasureKind.ATOMIC
    finite_mass = True

    def __post_init__(self):
        points = np.atleast_1d(np.asarray(self.points, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if points.shape != weights.shape:
            raise ConfigError("atom points and weights must have the same length")
        if np.any(weights < 0):
            raise ConfigError("atom weights must be nonnegative")
        if not np.all(np.isfinite(points)):
            raise ConfigError("atom points must be finite")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def even(self) -> bool:
        # symmetric atoms with mirrored weights give a real transform
        order = np.argsort(self.points, kind="stable")
        pts, wts = self.points[order], self.weights[order]
        return bool(np.allclose(pts, -pts[::-1]) and np.allclose(wts, wts[::-1]))

    @property
    def compact(self) -> bool:
        return not self.unbounded

    @property
    def support_radius(self) -> float:
        if self.unbounded:
            return float("inf")
        return float(np.max(np.abs(self.points))) if self.points.size else 0.0


@dataclass(frozen=True, eq=False)
class DensityMeasure:
    """
    Absolutely continuous measure density(u) du.

    `cutoff` bounds the support to [-cutoff, cutoff] (None: whole line).
    `growth` is q with density ~ |u|**q at infinity (-inf for decaying or compact
    densities); it decides the integrability conditions without quadrature.
    `fourier` is the closed-form transform when the family has one.
    """
    density: Callable[[np.ndarray], np.ndarray]
    family: str
    params: Dict[str, float] = field(default_factory=dict)
    cutoff: Optional[float] = None
    growth: float = float("-inf")
    exponent: int = 1
    fourier: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    kind = MeasureKind.DENSITY
    even = True

    def __post_init__(self):
        if self.cutoff is not None and not self.cutoff > 0:
            raise ConfigError("density cutoff must be positive")
        if self.exponent < 1:
            raise ConfigError("integrability exponent p must be >= 1")
        if not self.integrable_against(2 * self.exponent):
            raise IntegrabilityError(
                f"density family '{self.family}' violates the admissibility condition "
                f"with exponent p={self.exponent}"
            )

    def integrable_against(self, power: float) -> bool:
        """Whether the integral of density(u)/(1+|u|**power) is finite."""
        if self.cutoff is not None:
            return True
        return self.growth - power < -1.0

    @property
    def finite_mass(self) -> bool:
        return self.integrable_against(0.0)

    @property
    def compact(self) -> bool:
        return self.cutoff is not None

    @property
    def support_radius(self) -> float:
        return float(self.cutoff) if self.cutoff is not None else float("inf")


SpectralMeasure = Union[AIFSMeasure, AtomicMeasure, DensityMeasure]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Ordered frequencies lambda_n. `multiples` keeps lambda_n / (2*pi) exactly
    when the spectrum was generated from digits (or given explicitly).
    """
    frequencies: np.ndarray
    m: Optional[int] = None
    multiples: Optional[Tuple[Fraction, ...]] = None
    tail_mass_bound: float = float("nan")
    label: str = ""

    def __post_init__(self):
        freqs = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        if freqs.size == 0:
            raise ConfigError("spectrum must contain at least one frequency")
        if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
            raise ConfigError("spectrum frequencies must be strictly increasing")
        if self.m is not None and freqs[0] != 0.0:
            raise ConfigError("a generated spectrum must start at lambda_0 = 0")
        freqs.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def count(self) -> int:
        return int(self.frequencies.size)

    def __len__(self) -> int:
        return self.count

    def truncate(self, N: int) -> "Spectrum":
        multiples = self.multiples[:N] if self.multiples is not None else None
        return replace(self, frequencies=self.frequencies[:N], multiples=multiples)
