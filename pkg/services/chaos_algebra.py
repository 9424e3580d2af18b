# services/chaos_algebra.py - Hermite chaos algebra: Wick product, Kondratiev norms, Vage constant

from __future__ import annotations

import logging
import math
from collections import defaultdict
from typing import Dict, Iterable, Optional

import numpy as np
from scipy.special import zeta

from errors import ConfigError, DivergenceError, UnsupportedFunctionError
from models.chaos import ZERO, ChaosElement, KondratievNorm, MultiIndex, NormSign

logger = logging.getLogger(__name__)


def hermite_poly(n: int, x):
    """Probabilists' Hermite polynomial: h_{k+1} = x h_k - k h_{k-1}, h_0 = 1, h_1 = x."""
    if n < 0:
        raise ConfigError("Hermite degree must be >= 0")
    x = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(x), x.copy()
    if n == 0:
        return prev if prev.ndim else float(prev)
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur if cur.ndim else float(cur)


# ---------------- Wick algebra ----------------

def wick_product(F: ChaosElement, G: ChaosElement) -> ChaosElement:
    """F <> G = sum_gamma (sum_{alpha+beta=gamma} f_alpha g_beta) H_gamma."""
    acc: Dict[MultiIndex, float] = defaultdict(float)
    for alpha, fa in F.items():
        for beta, gb in G.items():
            acc[alpha + beta] += fa * gb
    return ChaosElement(acc)


def wick_power(F: ChaosElement, k: int) -> ChaosElement:
    if k < 0:
        raise ConfigError("Wick power must be >= 0")
    out = ChaosElement.constant(1.0)
    for _ in range(k):
        out = wick_product(out, F)
    return out


def first_chaos(coeffs, coordinates: Optional[Iterable[int]] = None) -> ChaosElement:
    return ChaosElement.first_chaos(np.asarray(coeffs, dtype=float), coordinates)


def gaussian_polynomial(coeffs, X: ChaosElement, variance: float) -> ChaosElement:
    """
    p(X) for a first-chaos X with E[X^2] = variance and p of degree <= 3,
    via X^2 = X<>2 + r and X^3 = X<>3 + 3 r X.
    """
    coeffs = [float(c) for c in coeffs]
    if any(c != 0.0 for c in coeffs[4:]):
        raise UnsupportedFunctionError("product-to-Wick conversion is implemented up to degree 3")
    a0, a1, a2, a3 = (coeffs + [0.0] * 4)[:4]
    r = float(variance)
    out = ChaosElement.constant(a0 + a2 * r)
    out = out + X.scale(a1 + 3.0 * a3 * r)
    if a2:
        out = out + wick_power(X, 2).scale(a2)
    if a3:
        out = out + wick_power(X, 3).scale(a3)
    return out


# ---------------- Norms ----------------

def kondratiev_weight(alpha: MultiIndex, level: int, sign: NormSign = NormSign.DISTRIBUTION) -> float:
    """(2N)^{-k alpha} on the distribution side, (alpha!)^2 (2N)^{k alpha} on the test side."""
    log_w = sum(e * math.log(2 * j) for j, e in alpha) * level
    if sign is NormSign.DISTRIBUTION:
        return math.exp(-log_w)
    return math.exp(log_w) * float(alpha.factorial()) ** 2


def kondratiev_norm_squared(F: ChaosElement, norm: KondratievNorm) -> float:
    """Weighted l2 sum of f_alpha^2 (2N)^(-k alpha) (distribution sign); H_e1 at k = 2 gives 1/4."""
    return math.fsum(c * c * kondratiev_weight(a, norm.level, norm.sign) for a, c in F.items())


def kondratiev_norm(F: ChaosElement, norm: KondratievNorm) -> float:
    """sqrt of kondratiev_norm_squared; the Vage inequality and minus_norm are stated for this root."""
    return math.sqrt(kondratiev_norm_squared(F, norm))


def minus_norm(F: ChaosElement, level: int) -> float:
    return kondratiev_norm(F, KondratievNorm(level, NormSign.DISTRIBUTION))


def gaussian_norm(F: ChaosElement) -> float:
    """sqrt(sum alpha! f_alpha^2): the white-noise (L2 of the Gaussian measure) norm."""
    return math.sqrt(math.fsum(float(a.factorial()) * c * c for a, c in F.items()))


def inner_product(F: ChaosElement, G: ChaosElement) -> float:
    """Gaussian-space inner product E[F G] = sum alpha! f_alpha g_alpha."""
    return math.fsum(float(a.factorial()) * c * G[a] for a, c in F.items() if a in G)


def expectation(F: ChaosElement) -> float:
    return F[ZERO]


# ---------------- Vage constant ----------------

def vage_log_product(d: int, tol: float = 1e-17) -> tuple[float, float, int]:
    """
    log prod_{j>=1} 1/(1 - (2j)^-d) = sum_m zeta(d m) / (m 2^{d m}).
    Returns (value, tail bound, terms); tail after M terms <= zeta(d) 2^{-d(M+1)} / (1 - 2^{-d}).
    """
    total, m = 0.0, 0
    z = float(zeta(d))
    while True:
        m += 1
        total += float(zeta(d * m)) / (m * 2.0 ** (d * m))
        tail = z * 2.0 ** (-d * (m + 1)) / (1.0 - 2.0 ** (-d))
        if tail <= tol or m >= 400:
            return total, tail, m


def vage_constant(k: int, l: int) -> float:
    """A(k-l) = (sum_alpha (2N)^{(l-k) alpha})^{1/2} = (prod_j 1/(1-(2j)^{l-k}))^{1/2}."""
    d = int(k) - int(l)
    if d <= 1:
        raise DivergenceError(f"Vage constant needs k > l + 1, got k={k}, l={l}")
    log_p, tail, terms = vage_log_product(d)
    logger.debug("vage_constant(d=%d): %d zeta terms, tail %.2e", d, terms, tail)
    return math.exp(0.5 * log_p)


def vage_inequality(h: ChaosElement, u: ChaosElement, k: int, l: int) -> tuple[float, float]:
    """(||h <> u||_{-k}, A(k-l) ||h||_{-l} ||u||_{-k})."""
    lhs = minus_norm(wick_product(h, u), k)
    rhs = vage_constant(k, l) * minus_norm(h, l) * minus_norm(u, k)
    return lhs, rhs


def random_element(rng: np.random.Generator, terms: int = 6, max_index: int = 6,
                   max_degree: int = 3) -> ChaosElement:
    """Sparse element with standard normal coefficients on random multi-indices."""
    acc: Dict[MultiIndex, float] = defaultdict(float)
    for _ in range(terms):
        degree = int(rng.integers(0, max_degree + 1))
        idx = rng.integers(1, max_index + 1, size=degree)
        acc[MultiIndex((int(i), 1) for i in idx)] += float(rng.standard_normal())
    return ChaosElement(acc)
