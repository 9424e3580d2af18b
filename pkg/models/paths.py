# models/paths.py - coefficient paths, sampled ensembles, partitions, integrands

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np

from errors import ConfigError
from models.chaos import ChaosElement
from models.measures import SpectralMeasure, Spectrum, TruncationBudget


class PathKind(Enum):
    X = "X"   # the process itself
    W = "W"   # its derivative process


@dataclass(frozen=True, eq=False)
class CoefficientPath:
    """
    First-chaos coefficients c_n(t_i) of a process on a time grid.

    coeffs has shape (len(times), N). `coordinates[n]` is the white-noise
    coordinate j with Z_n = H_{e_j}; the generic construction uses j = n + 1.
    """
    times: np.ndarray
    coeffs: np.ndarray
    kind: PathKind
    measure: SpectralMeasure
    spectrum: Spectrum
    budget: TruncationBudget
    deficits: np.ndarray = field(default_factory=lambda: np.zeros(0))
    coordinates: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        coeffs = np.asarray(self.coeffs)
        if coeffs.ndim != 2 or coeffs.shape[0] != times.size:
            raise ConfigError("coeffs must have shape (len(times), N)")
        coords = self.coordinates
        coords = np.arange(1, coeffs.shape[1] + 1) if coords is None else np.asarray(coords, dtype=int)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "coordinates", coords)

    @property
    def N(self) -> int:
        return int(self.coeffs.shape[1])

    def index_of(self, t: float) -> int:
        hits = np.flatnonzero(np.isclose(self.times, t, rtol=0.0, atol=1e-12))
        if hits.size == 0:
            raise ConfigError(f"time {t} is not on the path grid")
        return int(hits[0])

    def at(self, t: float) -> np.ndarray:
        return self.coeffs[self.index_of(t)]

    def element(self, i: int) -> ChaosElement:
        """X(t_i) (or W(t_i)) as a first-chaos element."""
        return ChaosElement.first_chaos(np.real(self.coeffs[i]), self.coordinates)

    def variances(self) -> np.ndarray:
        return np.sum(np.abs(self.coeffs) ** 2, axis=1)


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """M realizations X^(m)(t_i) = sum_n c_n(t_i) Z_n^(m) from a seeded generator."""
    seed: int
    M: int
    times: np.ndarray
    values: np.ndarray    # (M, len(times))
    draws: np.ndarray     # (M, N)
    path: CoefficientPath

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    def var(self) -> np.ndarray:
        return self.values.var(axis=0, ddof=1) if self.M > 1 else np.zeros(self.times.size)

    def stderr(self) -> np.ndarray:
        return np.sqrt(self.var() / self.M)


@dataclass(frozen=True)
class Partition:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or not np.all(np.diff(nodes) > 0):
            raise ConfigError("partition nodes must be strictly increasing with at least two points")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, a: float, b: float, intervals: int) -> "Partition":
        if intervals < 1:
            raise ConfigError("a partition needs at least one interval")
        return cls(np.linspace(a, b, intervals + 1))

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.nodes)))

    def halve(self) -> "Partition":
        mids = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        merged = np.empty(self.nodes.size + mids.size)
        merged[0::2] = self.nodes
        merged[1::2] = mids
        return Partition(merged)


@dataclass(frozen=True, eq=False)
class IntegrandPath:
    """
    S_{-1}-valued integrand Y(t). `sample` maps an array of times to the
    list of chaos elements Y(t_i); it must be pure.
    """
    sample: Callable[[np.ndarray], List[ChaosElement]]
    level: int = 2
    label: str = ""
    measure: Optional[SpectralMeasure] = None
    spectrum: Optional[Spectrum] = None
    continuity_modulus: float = float("nan")

    def __call__(self, times: Sequence[float]) -> List[ChaosElement]:
        return self.sample(np.asarray(times, dtype=float))
