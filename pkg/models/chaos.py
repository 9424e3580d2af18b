# models/chaos.py - sparse Hermite-chaos elements of the white noise space

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import factorial, prod
from typing import Dict, Iterable, Iterator, Mapping, Tuple

from errors import ConfigError


class MultiIndex(tuple):
    """
    Finitely supported exponent map, stored canonically as sorted
    ((index, exponent), ...) pairs with 1-based indices and no zero exponents.
    """

    def __new__(cls, pairs: Iterable[Tuple[int, int]] = ()):
        acc: Dict[int, int] = {}
        for index, exponent in pairs:
            index, exponent = int(index), int(exponent)
            if index < 1 or exponent < 0:
                raise ConfigError(f"invalid multi-index entry ({index}, {exponent})")
            acc[index] = acc.get(index, 0) + exponent
        return super().__new__(cls, tuple(sorted((i, e) for i, e in acc.items() if e)))

    @classmethod
    def unit(cls, index: int, exponent: int = 1) -> "MultiIndex":
        return cls(((index, exponent),))

    @classmethod
    def from_dict(cls, exponents: Mapping[int, int]) -> "MultiIndex":
        return cls(exponents.items())

    @property
    def degree(self) -> int:
        return sum(e for _, e in self)

    @property
    def max_index(self) -> int:
        return self[-1][0] if self else 0

    def factorial(self) -> int:
        return prod(factorial(e) for _, e in self)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":  # type: ignore[override]
        return MultiIndex(tuple.__add__(self, other))

    def as_dict(self) -> Dict[int, int]:
        return dict(self)

    def __repr__(self) -> str:
        if not self:
            return "0"
        return "+".join(f"{e}e{i}" if e > 1 else f"e{i}" for i, e in self)


ZERO = MultiIndex()


class NormSign(Enum):
    TEST = "+"
    DISTRIBUTION = "-"


@dataclass(frozen=True)
class KondratievNorm:
    level: int
    sign: NormSign = NormSign.DISTRIBUTION

    def __post_init__(self):
        if self.level < 0:
            raise ConfigError("Kondratiev level must be >= 0")


class ChaosElement(Mapping):
    """
    Immutable sparse map MultiIndex -> real coefficient, F = sum f_alpha H_alpha.
    Zero coefficients are pruned on construction.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[MultiIndex, float] | Iterable[Tuple[MultiIndex, float]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: Dict[MultiIndex, float] = {}
        for alpha, coeff in items:
            alpha = alpha if isinstance(alpha, MultiIndex) else MultiIndex(alpha)
            acc[alpha] = acc.get(alpha, 0.0) + float(coeff)
        self._terms = {a: c for a, c in sorted(acc.items()) if c != 0.0}

    @classmethod
    def constant(cls, value: float) -> "ChaosElement":
        return cls({ZERO: value})

    @classmethod
    def first_chaos(cls, coeffs, coordinates=None) -> "ChaosElement":
        """sum_n c_n H_{e_{j_n}}; coordinates default to j_n = n + 1."""
        if coordinates is None:
            coordinates = range(1, len(coeffs) + 1)
        return cls((MultiIndex.unit(int(j)), float(c)) for j, c in zip(coordinates, coeffs))

    def __getitem__(self, alpha) -> float:
        if not isinstance(alpha, MultiIndex):
            alpha = MultiIndex(alpha)
        return self._terms.get(alpha, 0.0)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __add__(self, other: "ChaosElement") -> "ChaosElement":
        return ChaosElement(list(self._terms.items()) + list(other._terms.items()))

    def __sub__(self, other: "ChaosElement") -> "ChaosElement":
        return self + other.scale(-1.0)

    def __neg__(self) -> "ChaosElement":
        return self.scale(-1.0)

    def __mul__(self, scalar: float) -> "ChaosElement":
        return self.scale(scalar)

    __rmul__ = __mul__

    def scale(self, scalar: float) -> "ChaosElement":
        return ChaosElement({a: scalar * c for a, c in self._terms.items()})

    @property
    def max_degree(self) -> int:
        return max((a.degree for a in self._terms), default=0)

    @property
    def max_index(self) -> int:
        return max((a.max_index for a in self._terms), default=0)

    def dump(self) -> str:
        """Debug serialization, one `alpha=<pairs> coeff=<value>` line per term."""
        lines = []
        for alpha, coeff in self._terms.items():
            pairs = ",".join(f"{i}:{e}" for i, e in alpha)
            lines.append(f"alpha={pairs} coeff={coeff!r}")
        return "\n".join(lines)

    def __repr__(self) -> str:
        body = " + ".join(f"{c:.6g}*H[{a!r}]" for a, c in list(self._terms.items())[:6])
        more = " + ..." if len(self._terms) > 6 else ""
        return f"ChaosElement({body or '0'}{more})"
