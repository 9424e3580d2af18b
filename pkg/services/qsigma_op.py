# services/qsigma_op.py - the operator Q_sigma on test functions and its adjoint kernel

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import integrate as sp_integrate
from scipy.special import erf

from errors import ConfigError, UnsupportedFunctionError
from models.measures import MeasureKind, SpectralMeasure, Spectrum, TruncationBudget
from services.covariance import chi
from services.processes import FREQUENCY_CHUNK, build_X, path_generator
from services.quadrature import refine_edges, segment_rule
from services.spectral_measures import (
    DEFAULT_BUDGET,
    admissibility_constant,
    cascade_leaves,
    integrate,
    sigma_hat_values,
    weighted_admissibility_constant,
)

logger = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)
LEAF_BLOCK = 1 << 22   # leaves x frequencies evaluated per chunk
TAIL = 1e-13


# ---------------- test functions ----------------

class TestFunction(ABC):
    """A rapidly decaying psi with closed-form transform psi_hat(u) = integral psi(x) exp(iux) dx."""

    __test__ = False
    name = "psi"

    @abstractmethod
    def value(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def fourier(self, u: np.ndarray) -> np.ndarray: ...

    def derivative(self, x: np.ndarray, order: int = 1) -> np.ndarray:
        raise UnsupportedFunctionError(f"{self.name} has no derivative of order {order}")

    @abstractmethod
    def window(self) -> Tuple[float, float]:
        """Interval outside which |psi| is below TAIL relative to its peak."""

    @property
    def extent(self) -> float:
        lo, hi = self.window()
        return max(abs(lo), abs(hi))

    @property
    def panel_width(self) -> float:
        return 0.25

    def l1_norm(self, order: int = 0) -> float:
        """||psi^(order)||_1 by adaptive quadrature over the window."""
        f = self.value if order == 0 else (lambda x: self.derivative(x, order))
        lo, hi = self.window()
        edges, _ = refine_edges(np.array([lo, hi]), self.panel_width)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = sp_integrate.quad(lambda x: float(np.abs(f(np.array([x]))[0])), a, b, limit=200)
            total += val
        return total

    def scaled(self, factor: float) -> "ScaledFunction":
        return ScaledFunction(self, factor)

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, repr=False)
class GaussianBump(TestFunction):
    """psi(x) = A exp(-a (x - b)^2); psi_hat(u) = A sqrt(pi/a) exp(iub) exp(-u^2 / 4a)."""
    a: float = 1.0
    b: float = 0.0
    A: float = 1.0

    def __post_init__(self):
        if self.a <= 0:
            raise ConfigError("Gaussian width parameter a must be positive")

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"gauss(a={self.a:g},b={self.b:g})"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.A * np.exp(-self.a * (x - self.b) ** 2)

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        return self.A * math.sqrt(math.pi / self.a) * np.exp(1j * u * self.b - u * u / (4.0 * self.a))

    def derivative(self, x, order: int = 1):
        x = np.asarray(x, dtype=float)
        z = x - self.b
        g = self.value(x)
        if order == 1:
            return -2.0 * self.a * z * g
        if order == 2:
            return (4.0 * self.a ** 2 * z * z - 2.0 * self.a) * g
        return super().derivative(x, order)

    def window(self):
        half = math.sqrt(-math.log(TAIL) / self.a)
        return self.b - half, self.b + half


@dataclass(frozen=True, repr=False)
class WindowedSinusoid(TestFunction):
    """psi(x) = exp(-a (x - b)^2) cos(omega x)."""
    a: float = 1.0
    b: float = 0.0
    omega: float = 1.0

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"wsin(a={self.a:g},b={self.b:g},w={self.omega:g})"

    def _bump(self) -> GaussianBump:
        return GaussianBump(self.a, self.b)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self._bump().value(x) * np.cos(self.omega * x)

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        g = self._bump().fourier
        return 0.5 * (g(u + self.omega) + g(u - self.omega))

    def derivative(self, x, order: int = 1):
        x = np.asarray(x, dtype=float)
        g = self._bump()
        w = self.omega
        c, s = np.cos(w * x), np.sin(w * x)
        if order == 1:
            return g.derivative(x, 1) * c - w * g.value(x) * s
        if order == 2:
            return g.derivative(x, 2) * c - 2.0 * w * g.derivative(x, 1) * s - w * w * g.value(x) * c
        return super().derivative(x, order)

    def window(self):
        return self._bump().window()

    @property
    def panel_width(self) -> float:
        return min(0.25, 1.0 / max(self.omega, 1.0))


class HermiteFunctionBasis:
    """L2-orthonormal Hermite functions h_n(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) exp(-x^2/2)."""

    def __init__(self, max_index: int):
        if max_index < 0:
            raise ConfigError("max_index must be >= 0")
        self.max_index = int(max_index)

    def evaluate(self, x) -> np.ndarray:
        """Rows h_0(x), ..., h_max(x), by the stable three-term recurrence."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((self.max_index + 1, x.size))
        out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
        if self.max_index >= 1:
            out[1] = math.sqrt(2.0) * x * out[0]
        for n in range(1, self.max_index):
            out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
        return out

    def __call__(self, n: int, x) -> np.ndarray:
        if not 0 <= n <= self.max_index:
            raise ConfigError(f"Hermite index {n} outside 0..{self.max_index}")
        return self.evaluate(x)[n]

    def gram_matrix(self, nodes: int = 80) -> np.ndarray:
        """integral h_n h_m dx by Gauss-Hermite quadrature (weight exp(-x^2) divided out)."""
        x, w = hermgauss(nodes)
        H = self.evaluate(x) * np.exp(0.5 * x * x)
        return (H * w) @ H.T

    def orthonormality_error(self, nodes: int = 80) -> float:
        G = self.gram_matrix(nodes)
        return float(np.max(np.abs(G - np.eye(G.shape[0]))))


@dataclass(frozen=True, repr=False)
class HermiteFunction(TestFunction):
    """h_n, with h_n_hat(u) = sqrt(2 pi) i^n h_n(u)."""
    n: int = 0

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"hermite({self.n})"

    def _rows(self, x, extra: int = 0) -> np.ndarray:
        return HermiteFunctionBasis(self.n + extra).evaluate(x)

    def value(self, x):
        return self._rows(x)[self.n]

    def fourier(self, u):
        return SQRT_2PI * (1j ** self.n) * self._rows(u)[self.n]

    def derivative(self, x, order: int = 1):
        # h_n' = sqrt(n/2) h_{n-1} - sqrt((n+1)/2) h_{n+1}
        coeffs: Dict[int, float] = {self.n: 1.0}
        for _ in range(order):
            nxt: Dict[int, float] = {}
            for k, c in coeffs.items():
                if k > 0:
                    nxt[k - 1] = nxt.get(k - 1, 0.0) + c * math.sqrt(k / 2.0)
                nxt[k + 1] = nxt.get(k + 1, 0.0) - c * math.sqrt((k + 1) / 2.0)
            coeffs = nxt
        rows = self._rows(x, order)
        return sum(c * rows[k] for k, c in coeffs.items())

    def window(self):
        half = math.sqrt(2 * self.n + 1) + math.sqrt(-2.0 * math.log(TAIL))
        return -half, half


@dataclass(frozen=True, repr=False)
class Indicator(TestFunction):
    """1_[0,t] (negated on [t,0] for t < 0), so psi_hat = chi_t. No derivative bounds."""
    t: float = 1.0

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"indicator({self.t:g})"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.window()
        return math.copysign(1.0, self.t) * ((x >= lo) & (x <= hi)).astype(float)

    def fourier(self, u):
        return chi(self.t, u)

    def window(self):
        return (min(0.0, self.t), max(0.0, self.t))


@dataclass(frozen=True, repr=False)
class MollifiedIndicator(TestFunction):
    """
    s_n = 1_[0,t] * k_eps with eps = sqrt(2)/n, so s_n_hat(u) = chi_t(u) exp(-u^2/n^2).
    """
    t: float = 1.0
    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("mollifier index n must be >= 1")

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"mollified({self.t:g},n={self.n})"

    @property
    def eps(self) -> float:
        return math.sqrt(2.0) / self.n

    def value(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = min(0.0, self.t), max(0.0, self.t)
        s = self.eps * math.sqrt(2.0)
        return math.copysign(0.5, self.t) * (erf((x - lo) / s) - erf((x - hi) / s))

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        return chi(self.t, u) * np.exp(-(u / self.n) ** 2)

    def derivative(self, x, order: int = 1):
        if order != 1:
            return super().derivative(x, order)
        x = np.asarray(x, dtype=float)
        lo, hi = min(0.0, self.t), max(0.0, self.t)
        k = lambda z: np.exp(-0.5 * (z / self.eps) ** 2) / (SQRT_2PI * self.eps)
        return math.copysign(1.0, self.t) * (k(x - lo) - k(x - hi))

    def window(self):
        pad = self.eps * math.sqrt(-2.0 * math.log(TAIL))
        return min(0.0, self.t) - pad, max(0.0, self.t) + pad

    @property
    def panel_width(self) -> float:
        return min(0.25, self.eps)


@dataclass(frozen=True, repr=False)
class ExponentialProbe(TestFunction):
    """psi_hat(u) = exp(i lambda u); only meaningful on the frequency side."""
    frequency: float = 0.0

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"probe({self.frequency:g})"

    def value(self, x):
        raise UnsupportedFunctionError("an exponential probe has no pointwise values")

    def fourier(self, u):
        return np.exp(1j * self.frequency * np.asarray(u, dtype=float))

    def window(self):
        return (self.frequency, self.frequency)


@dataclass(frozen=True, repr=False)
class ScaledFunction(TestFunction):
    base: TestFunction = field(default_factory=GaussianBump)
    factor: float = 1.0

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"{self.factor:g}*{self.base.name}"

    def value(self, x):
        return self.factor * self.base.value(x)

    def fourier(self, u):
        return self.factor * self.base.fourier(u)

    def derivative(self, x, order: int = 1):
        return self.factor * self.base.derivative(x, order)

    def window(self):
        return self.base.window()

    @property
    def panel_width(self) -> float:
        return self.base.panel_width


def gaussian_battery(count: int = 10, seed: int = 0) -> List[GaussianBump]:
    """Gaussians exp(-a (x - b)^2) with a in [1, 4] and |b| <= 1.5, reproducible from the seed."""
    rng = path_generator(seed, 0)
    a = rng.uniform(1.0, 4.0, size=count)
    b = rng.uniform(-1.5, 1.5, size=count)
    return [GaussianBump(float(ai), float(bi)) for ai, bi in zip(a, b)]


# ---------------- coefficients ----------------

def cascade_level(measure: SpectralMeasure, frequency_scale: float, budget: TruncationBudget) -> int:
    """Smallest cascade depth resolving oscillations at frequency_scale to ~sqrt(abs_tol)."""
    target = math.sqrt(budget.abs_tol)
    r = measure.ratio
    level = 8
    while level < budget.quadrature_level and (frequency_scale + 1.0) * measure.support_radius * r ** level > target:
        level += 1
    return level


def _cascade_coefficients(psi: TestFunction, lam: np.ndarray, measure: SpectralMeasure,
                          budget: TruncationBudget) -> np.ndarray:
    if measure.kind is not MeasureKind.AIFS:
        integrand = lambda lam_n: integrate(measure, lambda u: psi.fourier(u) * np.exp(-1j * lam_n * u), budget).value
        return np.array([complex(integrand(l)) for l in lam])
    scale = (float(np.max(np.abs(lam))) if lam.size else 0.0) + psi.extent
    leaves = cascade_leaves(measure.ratio, cascade_level(measure, scale, budget))
    base = psi.fourier(leaves)
    step = max(1, LEAF_BLOCK // leaves.size)
    out = np.empty(lam.size, dtype=complex)
    for start in range(0, lam.size, step):
        chunk = lam[start:start + step]
        out[start:start + step] = np.exp(-1j * np.multiply.outer(chunk, leaves)) @ base / leaves.size
    return out


def _time_nodes(psi: TestFunction) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = psi.window()
    if hi <= lo:
        raise UnsupportedFunctionError(f"{psi.name} has no spatial window; use the cascade route")
    edges, _ = refine_edges(np.array([lo, hi]), psi.panel_width)
    nodes, weights = segment_rule(edges, 20)
    return nodes.ravel(), weights.ravel()


def _time_coefficients(psi: TestFunction, lam: np.ndarray, measure: SpectralMeasure,
                       budget: TruncationBudget) -> np.ndarray:
    y, w = _time_nodes(psi)
    wpsi = w * psi.value(y)
    out = np.empty(lam.size, dtype=complex)
    for start in range(0, lam.size, FREQUENCY_CHUNK):
        chunk = lam[start:start + FREQUENCY_CHUNK]
        values, _, _ = sigma_hat_values(measure, y[:, None] - chunk[None, :], budget)
        out[start:start + FREQUENCY_CHUNK] = wpsi @ values
    return out


def q_sigma_coefficients(psi: TestFunction, spectrum: Spectrum, measure: SpectralMeasure,
                         N: Optional[int] = None, budget: TruncationBudget = DEFAULT_BUDGET,
                         method: str = "auto") -> np.ndarray:
    """
    Hermite-function coordinates of Q_sigma psi: <psi_hat, e_lambda_n>_{L2(sigma)},
    i.e. integral psi_hat(u) exp(-i lambda_n u) d sigma = integral psi(y) sigma_hat(y - lambda_n) dy.
    method: "cascade" (frequency side), "time" (y-quadrature) or "auto".
    """
    lam = spectrum.truncate(N).frequencies if N is not None else spectrum.frequencies
    if method == "auto":
        method = "cascade" if isinstance(psi, ExponentialProbe) or measure.kind is MeasureKind.ATOMIC else "time"
    if method == "cascade":
        coeffs = _cascade_coefficients(psi, lam, measure, budget)
    elif method == "time":
        coeffs = _time_coefficients(psi, lam, measure, budget)
    else:
        raise ConfigError(f"unknown coefficient method '{method}'")
    # an even measure has a real transform, and every pointwise psi here is real
    return coeffs.real if measure.even else coeffs


# ---------------- norm identity and bounds ----------------

@dataclass(frozen=True)
class NormIdentityReport:
    function: str
    coefficient_norm2: float      # sum |q_n|^2
    spectral_norm2: float         # integral |psi_hat|^2 d sigma
    relative_error: float
    bound: float                  # sqrt(K_p) (||psi||_1^2 + ||psi^(p)||_1^2)^(1/2)
    bound_holds: bool
    order: int
    N: int
    method: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def spectral_norm2(psi: TestFunction, measure: SpectralMeasure, budget: TruncationBudget = DEFAULT_BUDGET) -> float:
    return float(np.real(integrate(measure, lambda u: np.abs(psi.fourier(u)) ** 2, budget).value))


def a_priori_bound(psi: TestFunction, measure: SpectralMeasure, p: int = 1,
                   budget: TruncationBudget = DEFAULT_BUDGET) -> float:
    """sqrt(K_p) (||psi||_1^2 + ||psi^(p)||_1^2)^(1/2) with K_p = integral d sigma / (1 + |u|^{2p})."""
    K = admissibility_constant(measure, budget) if p == 1 else weighted_admissibility_constant(measure, p, budget)
    return math.sqrt(K) * math.hypot(psi.l1_norm(0), psi.l1_norm(p))


def norm_identity_check(psi: TestFunction, spectrum: Spectrum, measure: SpectralMeasure,
                        N: Optional[int] = None, budget: TruncationBudget = DEFAULT_BUDGET,
                        method: str = "auto") -> NormIdentityReport:
    """sum_n |q_n|^2 against integral |psi_hat|^2 d sigma, plus the a-priori bound."""
    q = q_sigma_coefficients(psi, spectrum, measure, N, budget, method)
    lhs = float(np.sum(np.abs(q) ** 2))
    rhs = spectral_norm2(psi, measure, budget)
    rel = abs(lhs - rhs) / rhs if rhs > 0 else abs(lhs)
    bound = a_priori_bound(psi, measure, 1, budget)
    logger.debug("norm identity %s: lhs=%.12g rhs=%.12g rel=%.2e", psi.name, lhs, rhs, rel)
    return NormIdentityReport(
        function=psi.name, coefficient_norm2=lhs, spectral_norm2=rhs, relative_error=rel,
        bound=bound, bound_holds=bool(math.sqrt(rhs) <= bound), order=1, N=int(q.size),
        method=method,
    )


def weighted_bound_check(psi: TestFunction, measure: SpectralMeasure, p: int = 2,
                         budget: TruncationBudget = DEFAULT_BUDGET) -> NormIdentityReport:
    """
    ||Q_sigma psi|| <= sqrt(K_p) (||psi||_1^2 + ||psi^(p)||_1^2)^(1/2), for measures
    only integrable against (1 + |u|^{2p})^{-1}. No spectrum is needed: the left side is
    integral |psi_hat|^2 d sigma.
    """
    rhs = spectral_norm2(psi, measure, budget)
    bound = a_priori_bound(psi, measure, p, budget)
    return NormIdentityReport(
        function=psi.name, coefficient_norm2=float("nan"), spectral_norm2=rhs, relative_error=float("nan"),
        bound=bound, bound_holds=bool(math.sqrt(rhs) <= bound), order=p, N=0, method="spectral",
    )


# ---------------- adjoint ----------------

def adjoint_kernel(phi: Sequence[float], y, spectrum: Spectrum, measure: SpectralMeasure,
                   budget: TruncationBudget = DEFAULT_BUDGET) -> np.ndarray:
    """X(phi)(y) = sum_n <h_n, phi> sigma_hat(y - lambda_n) for Hermite coefficients phi."""
    phi = np.asarray(phi)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if phi.size == 0:
        return np.zeros(y.shape)
    lam = spectrum.truncate(phi.size).frequencies
    out = np.zeros(y.shape, dtype=complex)
    for start in range(0, lam.size, FREQUENCY_CHUNK):
        chunk = lam[start:start + FREQUENCY_CHUNK]
        values, _, _ = sigma_hat_values(measure, y[:, None] - chunk[None, :], budget)
        out += values @ phi[start:start + FREQUENCY_CHUNK]
    return out.real if not np.any(out.imag) else out


@dataclass(frozen=True)
class BilinearReport:
    coefficient_form: complex     # sum q_n(psi) phi_n
    time_form: complex            # integral psi(y) X(phi)(y) dy
    spectral_form: complex        # integral psi_hat(u) conj(T phi)(u) d sigma
    max_deviation: float

    def to_dict(self) -> dict:
        return {k: (abs(v) if isinstance(v, complex) else v) for k, v in self.__dict__.items()}


def bilinear_form_check(psi: TestFunction, phi: Sequence[float], spectrum: Spectrum, measure: SpectralMeasure,
                        budget: TruncationBudget = DEFAULT_BUDGET) -> BilinearReport:
    """The three forms of <Q_sigma psi, phi> for real Hermite coefficients phi."""
    phi = np.asarray(phi, dtype=float)
    N = phi.size
    lam = spectrum.truncate(N).frequencies
    q = q_sigma_coefficients(psi, spectrum, measure, N, budget, method="time")
    coefficient = complex(np.dot(q, phi))

    y, w = _time_nodes(psi)
    time = complex(np.dot(w * psi.value(y), adjoint_kernel(phi, y, spectrum, measure, budget)))

    T_conj = lambda u: np.exp(-1j * np.multiply.outer(np.asarray(u), lam)) @ phi
    if measure.kind is MeasureKind.AIFS:
        spectral = complex(np.dot(_cascade_coefficients(psi, lam, measure, budget), phi))
    else:
        spectral = complex(integrate(measure, lambda u: psi.fourier(u) * T_conj(u), budget).value)

    forms = (coefficient, time, spectral)
    deviation = max(abs(a - b) for i, a in enumerate(forms) for b in forms[i + 1:])
    return BilinearReport(coefficient, time, spectral, float(deviation))


@dataclass(frozen=True)
class InnerProductReport:
    coefficient_form: complex
    spectral_form: complex
    deviation: float


def inner_product_check(phi: TestFunction, psi: TestFunction, spectrum: Spectrum, measure: SpectralMeasure,
                        N: Optional[int] = None, budget: TruncationBudget = DEFAULT_BUDGET) -> InnerProductReport:
    """<Q phi, Q psi> = sum q_n(phi) conj(q_n(psi)) against integral phi_hat conj(psi_hat) d sigma."""
    qa = q_sigma_coefficients(phi, spectrum, measure, N, budget, method="time")
    qb = q_sigma_coefficients(psi, spectrum, measure, N, budget, method="time")
    coeff = complex(np.sum(qa * np.conj(qb)))
    spectral = complex(integrate(measure, lambda u: phi.fourier(u) * np.conj(psi.fourier(u)), budget).value)
    return InnerProductReport(coeff, spectral, float(abs(coeff - spectral)))


def kernel_nontriviality(phis: Sequence[Sequence[float]], spectrum: Spectrum, measure: SpectralMeasure,
                         y_grid=None, budget: TruncationBudget = DEFAULT_BUDGET,
                         threshold: float = 1e-8) -> List[Tuple[float, float, bool]]:
    """For each nonzero phi, (max |X(phi)(y)|, argmax y, witness found) on the y-grid."""
    y = np.linspace(-10.0, 10.0, 2001) if y_grid is None else np.asarray(y_grid, dtype=float)
    out = []
    for phi in phis:
        vals = np.abs(adjoint_kernel(phi, y, spectrum, measure, budget))
        k = int(np.argmax(vals))
        out.append((float(vals[k]), float(y[k]), bool(vals[k] > threshold)))
    return out


# ---------------- mollified indicators ----------------

@dataclass
class MollifierReport:
    t: float
    levels: List[int]
    increments: List[float]            # ||Q s_n - Q s_2n|| in coefficients
    limit_deviation: float             # max |Q s_n_last - build_X coefficients|
    coefficients: np.ndarray = field(repr=False)

    def monotone_from(self, start: int = 1) -> bool:
        inc = self.increments[start:]
        return all(b <= a for a, b in zip(inc[:-1], inc[1:]))

    def to_dict(self) -> dict:
        return {"t": self.t, "levels": self.levels, "increments": self.increments,
                "limit_deviation": self.limit_deviation}


def mollified_indicator(t: float, n: int, measure: SpectralMeasure, spectrum: Spectrum, N: int = 64,
                        budget: TruncationBudget = DEFAULT_BUDGET, doublings: int = 8,
                        method: str = "auto") -> MollifierReport:
    """Q_sigma s_n for n, 2n, 4n, ..., Cauchy increments and distance to the chi_t coefficients."""
    if n < 1:
        raise ConfigError("mollifier index n must be >= 1")
    if measure.kind is MeasureKind.ATOMIC:
        raise ConfigError("mollified indicators are compared against the continuous-measure construction")
    if method == "auto":
        method = "cascade" if measure.kind is MeasureKind.AIFS else "time"
    levels = [n * 2 ** k for k in range(doublings + 1)]
    coeffs = [q_sigma_coefficients(MollifiedIndicator(t, m), spectrum, measure, N, budget, method) for m in levels]
    increments = [float(np.linalg.norm(b - a)) for a, b in zip(coeffs[:-1], coeffs[1:])]
    if t == 0.0:
        limit = np.zeros(len(coeffs[-1]))
    else:
        limit = build_X(measure, spectrum.truncate(N), [t], budget, deficit_threshold=None).coeffs[0]
    # build_X carries integral_0^t sigma_hat(y - lambda) dy = integral chi_t exp(-i lambda u) d sigma
    deviation = float(np.max(np.abs(coeffs[-1] - limit))) if limit.size else 0.0
    return MollifierReport(t=float(t), levels=levels, increments=increments,
                           limit_deviation=deviation, coefficients=coeffs[-1])
