# services/spectral_measures.py - Fourier transforms, integrals and spectra of spectral measures

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, Optional, Tuple

import numpy as np
from scipy import integrate as sp_integrate

from errors import BudgetExhaustedError, ConfigError, IntegrabilityError
from models.measures import (
    AIFSMeasure,
    AtomicMeasure,
    DensityMeasure,
    MeasureKind,
    SpectralMeasure,
    Spectrum,
    TruncationBudget,
)

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = TruncationBudget()
TWO_PI = 2.0 * math.pi
ATOM_CHUNK = 4096


@dataclass(frozen=True)
class SigmaHat:
    value: complex | float
    error_bound: float
    depth: int


@dataclass(frozen=True)
class IntegrationResult:
    value: complex | float
    error_estimate: float
    method: str


# ---------------- Fourier transform ----------------

def product_depth(ratio: float, t_abs: float, budget: TruncationBudget) -> Tuple[int, float]:
    """
    Smallest K >= budget.product_depth whose omitted-tail bound
    t^2 rho^(2(K+1)) / (2(1-rho^2)) is <= abs_tol. Raises when K would pass the cap.
    """
    if t_abs == 0.0:
        return budget.product_depth, 0.0
    c = t_abs * t_abs / (2.0 * (1.0 - ratio * ratio))

    def bound(k: int) -> float:
        return c * ratio ** (2 * (k + 1))

    K = budget.product_depth
    if bound(K) > budget.abs_tol:
        needed = math.ceil(math.log(budget.abs_tol / c) / (2.0 * math.log(ratio)) - 1.0)
        K = max(K, needed)
        while K <= budget.max_product_depth and bound(K) > budget.abs_tol:
            K += 1
        if K > budget.max_product_depth:
            best = bound(budget.max_product_depth)
            raise BudgetExhaustedError(
                f"cosine product tail cannot reach abs_tol={budget.abs_tol:g} at |t|={t_abs:g}",
                best_bound=best,
                depth=budget.max_product_depth,
            )
        logger.debug("product depth raised to %d for |t|=%g", K, t_abs)
    return K, bound(K)


def _cos_product(ratio: float, t: np.ndarray, K: int) -> np.ndarray:
    out = np.ones_like(t, dtype=float)
    for scale in ratio ** np.arange(1, K + 1):
        out *= np.cos(scale * t)
    return out


def _atomic_transform(measure: AtomicMeasure, t: np.ndarray) -> np.ndarray:
    out = np.zeros(t.shape, dtype=complex)
    flat = t.ravel()
    acc = np.zeros(flat.size, dtype=complex)
    for start in range(0, measure.points.size, ATOM_CHUNK):
        pts = measure.points[start:start + ATOM_CHUNK]
        wts = measure.weights[start:start + ATOM_CHUNK]
        acc += np.exp(1j * np.multiply.outer(flat, pts)) @ wts
    out[...] = acc.reshape(t.shape)
    return out.real if measure.even else out


def _density_transform(measure: DensityMeasure, t: np.ndarray, budget: TruncationBudget) -> Tuple[np.ndarray, float]:
    if not measure.finite_mass:
        raise IntegrabilityError(
            f"density '{measure.family}' has infinite mass; its Fourier transform is not a function"
        )
    flat = t.ravel()
    lo, hi = (-measure.cutoff, measure.cutoff) if measure.cutoff is not None else (-np.inf, np.inf)
    # even density: the transform is the cosine integral
    value, err = sp_integrate.quad_vec(
        lambda u: measure.density(np.asarray(u)) * np.cos(flat * u),
        lo, hi, epsabs=budget.abs_tol, epsrel=1e-12, limit=2000,
    )
    return np.asarray(value).reshape(t.shape), float(err)


def sigma_hat_values(measure: SpectralMeasure, t, budget: TruncationBudget = DEFAULT_BUDGET,
                     method: str = "auto") -> Tuple[np.ndarray, float, int]:
    """
    Vectorized sigma_hat: returns (values, error_bound, depth) for an array of t.
    The bound is uniform over the array; depth is the product depth used (AIFS only, else 0).
    """
    t = np.asarray(t, dtype=float)
    if measure.kind is MeasureKind.AIFS:
        t_max = float(np.max(np.abs(t))) if t.size else 0.0
        K, bound = product_depth(measure.ratio, t_max, budget)
        return _cos_product(measure.ratio, t, K), bound, K
    if measure.kind is MeasureKind.ATOMIC:
        bound = float("inf") if measure.unbounded else 0.0
        return _atomic_transform(measure, t), bound, 0
    if method == "auto" and measure.fourier is not None:
        return np.asarray(measure.fourier(t), dtype=float), 0.0, 0
    values, err = _density_transform(measure, t, budget)
    return values, err, 0


def sigma_hat(measure: SpectralMeasure, t: float, budget: TruncationBudget = DEFAULT_BUDGET,
              method: str = "auto") -> SigmaHat:
    """sigma_hat(t) = integral of exp(i t u) d sigma(u), with a certified bound on the truncation."""
    values, bound, depth = sigma_hat_values(measure, np.array([float(t)]), budget, method)
    value = values[0]
    return SigmaHat(value=complex(value) if np.iscomplexobj(values) else float(value),
                    error_bound=bound, depth=depth)


# ---------------- Integration ----------------

@lru_cache(maxsize=8)
def cascade_leaves(ratio: float, level: int) -> np.ndarray:
    """The 2**level points tau_w(0) = sum_j eps_j ratio**j, each of mass 2**-level."""
    pts = np.zeros(1)
    for j in range(1, level + 1):
        step = ratio ** j
        pts = np.concatenate([pts + step, pts - step])
    pts.setflags(write=False)
    logger.debug("cascade leaves built: ratio=%g level=%d", ratio, level)
    return pts


def _decays(f: Callable, measure: DensityMeasure) -> bool:
    probe = np.array([1e3, 1e4, 1e5])
    for sign in (1.0, -1.0):
        u = sign * probe
        g = np.abs(np.asarray(f(u)) * measure.density(u)) * probe
        if not np.all(np.isfinite(g)) or g[-1] > 1e-3 or g[-1] > g[0] + 1e-12:
            return False
    return True


def integrate(measure: SpectralMeasure, f: Callable[[np.ndarray], np.ndarray],
              budget: TruncationBudget = DEFAULT_BUDGET) -> IntegrationResult:
    """Integral of a vectorized f against the measure."""
    if measure.kind is MeasureKind.AIFS:
        leaves = cascade_leaves(measure.ratio, budget.quadrature_level)
        fx = np.asarray(f(leaves))
        value = fx.mean()
        # modulus of continuity of f over one cascade cell
        delta = measure.ratio ** budget.quadrature_level * measure.support_radius
        spread = np.maximum(np.abs(np.asarray(f(leaves + delta)) - fx),
                            np.abs(np.asarray(f(leaves - delta)) - fx))
        return IntegrationResult(value=value.item(), error_estimate=float(spread.mean()), method="cascade")

    if measure.kind is MeasureKind.ATOMIC:
        fx = np.asarray(f(measure.points))
        value = np.sum(fx * measure.weights)
        return IntegrationResult(value=value.item(), error_estimate=float(measure.tail_bound), method="atoms")

    if measure.cutoff is None and not _decays(f, measure):
        raise IntegrabilityError(
            f"integrand does not decay against the unbounded density '{measure.family}'"
        )
    lo, hi = (-measure.cutoff, measure.cutoff) if measure.cutoff is not None else (-np.inf, np.inf)

    def parts(u):
        y = np.asarray(f(np.asarray(u))) * measure.density(np.asarray(u))
        return np.array([np.real(y), np.imag(y)])

    (re, im), err = sp_integrate.quad_vec(parts, lo, hi, epsabs=budget.abs_tol, epsrel=1e-12, limit=2000)
    value = complex(re, im) if im != 0.0 else float(re)
    return IntegrationResult(value=value, error_estimate=float(err), method="quad_vec")


# ---------------- Spectra ----------------

def spectrum_multiples(m: int, N: int) -> Tuple[Fraction, ...]:
    """
    lambda_n / (2 pi) for n < N: the binary digits of n select the powers
    (2m)**j, each weighted by m/2. Binary order is ascending numeric order.
    """
    digit = Fraction(m, 2)
    base = 2 * m
    out = []
    for n in range(N):
        total, j, k = 0, 0, n
        while k:
            if k & 1:
                total += base ** j
            k >>= 1
            j += 1
        out.append(digit * total)
    return tuple(out)


def generate_spectrum(m: int, N: int, with_tail_bound: bool = True) -> Spectrum:
    """The N smallest elements of Lambda_m = 2 pi { sum b_j (2m)^j : b_j in {0, m/2} }."""
    if int(m) != m or m < 2:
        raise ConfigError(f"spectrum generator m must be an integer >= 2, got {m}")
    if int(N) != N or N < 1:
        raise ConfigError(f"spectrum size N must be a positive integer, got {N}")
    m, N = int(m), int(N)
    multiples = spectrum_multiples(m, N)
    freqs = np.array([TWO_PI * float(q) for q in multiples])
    spectrum = Spectrum(frequencies=freqs, m=m, multiples=multiples, label=f"Lambda_{m}")
    if with_tail_bound:
        probe = np.linspace(-math.pi, math.pi, 33)
        deficits = parseval_deficits(bernoulli_measure(m), spectrum, probe)
        spectrum = Spectrum(frequencies=freqs, m=m, multiples=multiples,
                            tail_mass_bound=float(np.max(deficits)), label=spectrum.label)
    return spectrum


def explicit_spectrum(multiples: Iterable, label: str = "explicit") -> Spectrum:
    """Spectrum 2 pi * multiples from user-given values (fractions or strings like '3/2')."""
    exact = tuple(Fraction(str(q)) for q in multiples)
    return Spectrum(frequencies=np.array([TWO_PI * float(q) for q in exact]), multiples=exact, label=label)


def atom_spectrum(measure: AtomicMeasure) -> Spectrum:
    """Frequencies of the atom basis of L2(sigma) for an atomic measure (one coordinate per atom)."""
    return Spectrum(frequencies=np.sort(measure.points), label=f"atoms:{measure.label or 'atomic'}")


def parseval_partial_sums(measure: SpectralMeasure, spectrum: Spectrum, t,
                          budget: TruncationBudget = DEFAULT_BUDGET) -> np.ndarray:
    """Running sums sum_{n<k} |sigma_hat(t - lambda_n)|^2, shape (len(t), N)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    shifted = t[:, None] - spectrum.frequencies[None, :]
    values, _, _ = sigma_hat_values(measure, shifted, budget)
    return np.cumsum(np.abs(values) ** 2, axis=1)


def parseval_deficits(measure: SpectralMeasure, spectrum: Spectrum, t,
                      budget: TruncationBudget = DEFAULT_BUDGET) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    shifted = t[:, None] - spectrum.frequencies[None, :]
    values, _, _ = sigma_hat_values(measure, shifted, budget)
    return 1.0 - np.sum(np.abs(values) ** 2, axis=1)


def parseval_deficit(measure: SpectralMeasure, spectrum: Spectrum, t: float,
                     budget: TruncationBudget = DEFAULT_BUDGET) -> float:
    """1 - sum_{n<N} |sigma_hat(t - lambda_n)|^2."""
    return float(parseval_deficits(measure, spectrum, [t], budget)[0])


# ---------------- Constants ----------------

def _density_moment(measure: DensityMeasure, g: Callable[[np.ndarray], np.ndarray]) -> float:
    lo, hi = (-measure.cutoff, measure.cutoff) if measure.cutoff is not None else (-np.inf, np.inf)
    value, _ = sp_integrate.quad(lambda u: float(measure.density(np.array(u)) * g(np.array(u))),
                                 lo, hi, epsabs=1e-13, epsrel=1e-12, limit=500)
    return float(value)


def weighted_admissibility_constant(measure: SpectralMeasure, p: int = 1,
                                    budget: TruncationBudget = DEFAULT_BUDGET) -> float:
    """K_p = integral of d sigma(u) / (1 + |u|^(2p)); p = 1 gives the admissibility constant K."""
    weight = lambda u: 1.0 / (1.0 + np.abs(u) ** (2 * p))
    if measure.kind is MeasureKind.DENSITY:
        if not measure.integrable_against(2 * p):
            return float("inf")
        return _density_moment(measure, weight)
    value = integrate(measure, weight, budget).value
    if measure.kind is MeasureKind.ATOMIC:
        value += measure.tail_bound
    return float(np.real(value))


def admissibility_constant(measure: SpectralMeasure, budget: TruncationBudget = DEFAULT_BUDGET) -> float:
    return weighted_admissibility_constant(measure, 1, budget)


def linear_integrability_constant(measure: SpectralMeasure,
                                  budget: TruncationBudget = DEFAULT_BUDGET) -> float:
    """integral of d sigma(u) / (1 + |u|); inf when it diverges."""
    weight = lambda u: 1.0 / (1.0 + np.abs(u))
    if measure.kind is MeasureKind.DENSITY:
        if not measure.integrable_against(1):
            return float("inf")
        return _density_moment(measure, weight)
    if measure.kind is MeasureKind.ATOMIC and measure.unbounded:
        # omitted atoms are only controlled against 1/(1+u^2)
        return float("inf")
    return float(np.real(integrate(measure, weight, budget).value))


def exponential_lipschitz_constant(measure: SpectralMeasure,
                                   budget: TruncationBudget = DEFAULT_BUDGET) -> float:
    """integral of u^2 d sigma(u): the constant in ||e_t - e_s|| <= K |t - s|."""
    if not measure.compact:
        raise IntegrabilityError(
            "exponential Lipschitz constant needs compact support; "
            "use weighted_admissibility_constant for unbounded measures"
        )
    if measure.kind is MeasureKind.DENSITY:
        return _density_moment(measure, lambda u: u * u)
    return float(np.real(integrate(measure, lambda u: u * u, budget).value))


# ---------------- Factories ----------------

def aifs_measure(ratio: float) -> AIFSMeasure:
    return AIFSMeasure(ratio=float(ratio), label=f"aifs({ratio:g})")


def bernoulli_measure(m: int) -> AIFSMeasure:
    """sigma_m: the Bernoulli convolution with ratio 1/(2m) paired with Lambda_m."""
    return AIFSMeasure(ratio=1.0 / (2 * int(m)), label=f"sigma_{m}")


def atomic_measure(points, weights, label: str = "atomic") -> AtomicMeasure:
    return AtomicMeasure(points=points, weights=weights, label=label)


def dirac_measure(at: float = 0.0) -> AtomicMeasure:
    return AtomicMeasure(points=[at], weights=[1.0], label=f"dirac({at:g})")


def bridge_measure(n_max: int = 10_000) -> AtomicMeasure:
    """Unit atoms at u = 2n, n = 1..n_max (the n = 0 atom is excluded)."""
    if n_max < 1:
        raise ConfigError("bridge n_max must be >= 1")
    n = np.arange(1, n_max + 1, dtype=float)
    # sum_{n > n_max} 1 / (1 + 4 n^2) <= 1 / (4 n_max)
    return AtomicMeasure(points=2.0 * n, weights=np.ones_like(n), tail_bound=1.0 / (4.0 * n_max),
                         unbounded=True, label="bridge")


def uniform_density(half_width: float = 0.5) -> DensityMeasure:
    h = float(half_width)
    return DensityMeasure(
        density=lambda u: np.where(np.abs(u) <= h, 1.0, 0.0),
        family="uniform", params={"half_width": h}, cutoff=h,
        fourier=lambda t: 2.0 * h * np.sinc(h * np.asarray(t) / math.pi),
        label=f"uniform({h:g})",
    )


def gaussian_density(scale: float = 1.0) -> DensityMeasure:
    s = float(scale)
    return DensityMeasure(
        density=lambda u: np.exp(-0.5 * (np.asarray(u) / s) ** 2) / (s * math.sqrt(TWO_PI)),
        family="gaussian", params={"scale": s},
        fourier=lambda t: np.exp(-0.5 * (s * np.asarray(t)) ** 2),
        label=f"gaussian({s:g})",
    )


def ou_density(theta: float, alpha: float) -> DensityMeasure:
    """(alpha^2 / 2 pi theta) * theta u^2 / (theta^2 + u^2): admissible, infinite mass."""
    if theta == 0:
        raise ConfigError("OU theta must be nonzero")
    if not alpha > 0:
        raise ConfigError("OU alpha must be positive")
    th, al = float(theta), float(alpha)
    return DensityMeasure(
        density=lambda u: (al * al / TWO_PI) * np.asarray(u) ** 2 / (th * th + np.asarray(u) ** 2),
        family="ou", params={"theta": th, "alpha": al}, growth=0.0,
        label=f"ou(theta={th:g}, alpha={al:g})",
    )


def power_density(exponent: float = 2.0, scale: float = 1.0) -> DensityMeasure:
    """scale * |u|^exponent; admissible only against 1/(1+|u|^(2p)) with p > (exponent+1)/2."""
    q, c = float(exponent), float(scale)
    p = int(math.floor((q + 1.0) / 2.0)) + 1
    return DensityMeasure(
        density=lambda u: c * np.abs(np.asarray(u)) ** q,
        family="power", params={"exponent": q, "scale": c}, growth=q, exponent=p,
        label=f"power({q:g})",
    )


_DENSITY_FAMILIES: Dict[str, Callable[..., DensityMeasure]] = {
    "uniform": uniform_density,
    "gaussian": gaussian_density,
    "ou": ou_density,
    "power": power_density,
}


def measure_to_dict(measure: SpectralMeasure) -> Dict[str, Any]:
    if measure.kind is MeasureKind.AIFS:
        return {"kind": "aifs", "ratio": measure.ratio}
    if measure.kind is MeasureKind.ATOMIC:
        if measure.label == "bridge":
            return {"kind": "bridge", "n_max": int(measure.points.size)}
        return {"kind": "atomic", "points": measure.points.tolist(), "weights": measure.weights.tolist()}
    return {"kind": "density", "family": measure.family, "params": dict(measure.params)}


def measure_from_dict(spec: Dict[str, Any]) -> SpectralMeasure:
    """Inverse of measure_to_dict; also accepts kind 'bridge' and 'ou' shorthands."""
    kind = str(spec.get("kind", "")).lower()
    try:
        if kind == "aifs":
            if spec.get("m") is not None and spec.get("ratio") is None:
                return bernoulli_measure(int(spec["m"]))
            return aifs_measure(float(spec["ratio"]))
        if kind == "atomic":
            return atomic_measure(spec["points"], spec["weights"])
        if kind == "bridge":
            return bridge_measure(int(spec.get("n_max", 10_000)))
        if kind == "ou":
            return ou_density(float(spec["theta"]), float(spec["alpha"]))
        if kind == "density":
            family = str(spec["family"])
            if family not in _DENSITY_FAMILIES:
                raise ConfigError(f"unknown density family '{family}'")
            return _DENSITY_FAMILIES[family](**dict(spec.get("params") or {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid measure spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown measure kind '{kind}'")


def spectrum_to_dict(spectrum: Spectrum) -> Dict[str, Any]:
    if spectrum.m is not None:
        return {"m": spectrum.m, "N": spectrum.count}
    if spectrum.multiples is not None:
        return {"explicit": [str(q) for q in spectrum.multiples]}
    return {"frequencies": spectrum.frequencies.tolist()}


def spectrum_from_dict(spec: Dict[str, Any]) -> Spectrum:
    if spec.get("explicit"):
        return explicit_spectrum(spec["explicit"])
    if spec.get("frequencies"):
        return Spectrum(frequencies=np.asarray(spec["frequencies"], dtype=float), label="frequencies")
    return generate_spectrum(int(spec.get("m", 2)), int(spec.get("N", 128)))
