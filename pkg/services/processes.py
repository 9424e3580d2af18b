# services/processes.py - chaos-expansion construction and sampling of X_sigma and W_sigma

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from numpy.random import Generator, Philox, SeedSequence
from scipy.optimize import curve_fit

from errors import ConfigError, SpectralPairError
from models.measures import AtomicMeasure, MeasureKind, SpectralMeasure, Spectrum, TruncationBudget
from models.paths import CoefficientPath, PathEnsemble, PathKind
from services.covariance import CovarianceKernel, chi
from services.quadrature import cumulative_from_zero
from services.spectral_measures import (
    DEFAULT_BUDGET,
    atom_spectrum,
    bridge_measure,
    cascade_leaves,
    ou_density,
    parseval_deficits,
    sigma_hat_values,
)

logger = logging.getLogger(__name__)

DEFAULT_DEFICIT_THRESHOLD = 1e-2
FREQUENCY_CHUNK = 256
PATH_CHUNK = 512


# ---------------- construction ----------------

def _check_pair(measure: SpectralMeasure, spectrum: Spectrum, times: np.ndarray,
                budget: TruncationBudget, threshold: Optional[float]) -> np.ndarray:
    deficits = parseval_deficits(measure, spectrum, times, budget)
    if threshold is not None and np.max(deficits) > threshold:
        raise SpectralPairError(
            f"Parseval deficit {np.max(deficits):.3e} exceeds threshold {threshold:g} "
            f"for {measure.label or measure.kind.value} with {spectrum.label or 'spectrum'} (N={spectrum.count})",
            deficits=deficits.tolist(),
        )
    return deficits


def _atom_pairs(values_a: np.ndarray, values_b: np.ndarray) -> np.ndarray:
    """Interleave two (T, atoms) blocks into (T, 2*atoms) coordinate columns."""
    out = np.empty((values_a.shape[0], 2 * values_a.shape[1]))
    out[:, 0::2] = values_a
    out[:, 1::2] = values_b
    return out


def atom_coefficients(measure: AtomicMeasure, times) -> np.ndarray:
    """Complex coordinates sqrt(w_k) chi_t(u_k) of chi_t in the atom basis of L2(sigma)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    root = np.sqrt(measure.weights)
    return np.array([root * chi(t, measure.points) for t in times])


def build_X(measure: SpectralMeasure, spectrum: Optional[Spectrum], times,
            budget: TruncationBudget = DEFAULT_BUDGET,
            deficit_threshold: Optional[float] = DEFAULT_DEFICIT_THRESHOLD) -> CoefficientPath:
    """
    c_n(t) = integral_0^t sigma_hat(y - lambda_n) dy.

    Atomic measures use the real two-coordinate basis per atom,
    sqrt(w) sin(ut)/u and sqrt(w) (1 - cos ut)/u, which reproduces Re K exactly.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if measure.kind is MeasureKind.ATOMIC:
        c = atom_coefficients(measure, times)
        coeffs = _atom_pairs(np.real(c), np.imag(c))
        # (Re, Im) of chi_t(u) is (sin ut / u, (1 - cos ut) / u)
        deficits = np.full(times.size, 4.0 * measure.tail_bound)
        return CoefficientPath(times=times, coeffs=coeffs, kind=PathKind.X, measure=measure,
                               spectrum=atom_spectrum(measure), budget=budget, deficits=deficits,
                               label=f"X[{measure.label}]")
    if spectrum is None:
        raise ConfigError("a spectrum is required for non-atomic measures")
    deficits = _check_pair(measure, spectrum, times, budget, deficit_threshold)
    lam = spectrum.frequencies
    blocks = []
    for start in range(0, lam.size, FREQUENCY_CHUNK):
        chunk = lam[start:start + FREQUENCY_CHUNK]

        def integrand(y, chunk=chunk):
            values, _, _ = sigma_hat_values(measure, y[:, None] - chunk[None, :], budget)
            return np.real(values)

        blocks.append(cumulative_from_zero(integrand, times))
    coeffs = np.hstack(blocks)
    return CoefficientPath(times=times, coeffs=coeffs, kind=PathKind.X, measure=measure,
                           spectrum=spectrum, budget=budget, deficits=deficits,
                           label=f"X[{measure.label}]")


def build_W(measure: SpectralMeasure, spectrum: Optional[Spectrum], times,
            budget: TruncationBudget = DEFAULT_BUDGET,
            deficit_threshold: Optional[float] = DEFAULT_DEFICIT_THRESHOLD) -> CoefficientPath:
    """c_n(t) = sigma_hat(t - lambda_n): the derivative process."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if measure.kind is MeasureKind.ATOMIC:
        u, root = measure.points, np.sqrt(measure.weights)
        phase = np.multiply.outer(times, u)
        coeffs = _atom_pairs(root * np.cos(phase), root * np.sin(phase))
        return CoefficientPath(times=times, coeffs=coeffs, kind=PathKind.W, measure=measure,
                               spectrum=atom_spectrum(measure), budget=budget,
                               deficits=np.full(times.size, float(measure.tail_bound)),
                               label=f"W[{measure.label}]")
    if spectrum is None:
        raise ConfigError("a spectrum is required for non-atomic measures")
    deficits = _check_pair(measure, spectrum, times, budget, deficit_threshold)
    values, _, _ = sigma_hat_values(measure, times[:, None] - spectrum.frequencies[None, :], budget)
    return CoefficientPath(times=times, coeffs=np.real(values), kind=PathKind.W, measure=measure,
                           spectrum=spectrum, budget=budget, deficits=deficits,
                           label=f"W[{measure.label}]")


# ---------------- sampling ----------------

def path_generator(seed: int, path: int) -> Generator:
    """Counter-based stream for one path: Z_n^(m) depends only on (seed, m, n)."""
    return Generator(Philox(SeedSequence(int(seed), spawn_key=(int(path),))))


def standard_draws(seed: int, start: int, stop: int, N: int) -> np.ndarray:
    return np.vstack([path_generator(seed, m).standard_normal(N) for m in range(start, stop)])


def sample_paths(path: CoefficientPath, M: int, seed: int, threads: int = 1) -> PathEnsemble:
    """X^(m)(t_i) = sum_n c_n(t_i) Z_n^(m); identical output for any thread count."""
    if M < 1:
        raise ConfigError("number of paths M must be >= 1")
    coeffs = np.real_if_close(path.coeffs)
    chunks = [(a, min(a + PATH_CHUNK, M)) for a in range(0, M, PATH_CHUNK)]

    def run(a: int, b: int) -> Tuple[np.ndarray, np.ndarray]:
        z = standard_draws(seed, a, b, path.N)
        return z, z @ coeffs.T

    parts = Parallel(n_jobs=max(1, int(threads)), prefer="threads")(delayed(run)(a, b) for a, b in chunks)
    draws = np.vstack([p[0] for p in parts])
    values = np.vstack([p[1] for p in parts])
    logger.debug("sampled %d paths on %d times with N=%d", M, path.times.size, path.N)
    return PathEnsemble(seed=int(seed), M=int(M), times=path.times, values=values, draws=draws, path=path)


def ensemble_summary(ensemble: PathEnsemble) -> Dict[str, np.ndarray]:
    return {
        "t": ensemble.times,
        "mean": ensemble.mean(),
        "var": ensemble.var(),
        "stderr": ensemble.stderr(),
    }


def sample_covariance(ensemble: PathEnsemble, i: int, j: int) -> Tuple[float, float]:
    """Mean-zero sample covariance of X(t_i), X(t_j) and its standard error."""
    prod = np.real(ensemble.values[:, i] * np.conj(ensemble.values[:, j]))
    se = float(prod.std(ddof=1) / math.sqrt(ensemble.M)) if ensemble.M > 1 else float("inf")
    return float(prod.mean()), se


# ---------------- diagnostics ----------------

def first_chaos_norm(coeffs: np.ndarray, coordinates: np.ndarray, level: Optional[int] = None) -> float:
    """Gaussian norm of sum c_n H_{e_j(n)} (level=None) or its ||.||_{-level} norm."""
    sq = np.abs(coeffs) ** 2
    if level is not None:
        sq = sq * (2.0 * coordinates) ** (-float(level))
    return float(math.sqrt(math.fsum(sq)))


def derivative_check(Xpath: CoefficientPath, Wpath: CoefficientPath, t: float, s: float,
                     level: Optional[int] = None) -> float:
    """|| (X(t) - X(s)) / (t - s) - W(t) || in the Gaussian norm, or in ||.||_{-level}."""
    if t == s:
        raise ConfigError("derivative_check needs t != s")
    if Xpath.N != Wpath.N or not np.array_equal(Xpath.coordinates, Wpath.coordinates):
        raise ConfigError("X and W paths must share their coordinates")
    diff = (Xpath.at(t) - Xpath.at(s)) / (t - s) - Wpath.at(t)
    return first_chaos_norm(diff, Xpath.coordinates, level)


def derivative_bound(t: float, s: float) -> float:
    """|t - s| / sqrt(3): square root of the (t - s)^2 / 3 bound."""
    return abs(t - s) / math.sqrt(3.0)


def h_representation(measure: SpectralMeasure, spectrum: Spectrum, t: float,
                     budget: TruncationBudget = DEFAULT_BUDGET) -> np.ndarray:
    """
    integral exp(i lambda_n u) (exp(-iut) - 1) / u d sigma(u) for each n by cascade quadrature.
    Equals -i times the conjugate of build_X's c_n(t).
    """
    if measure.kind is not MeasureKind.AIFS:
        raise ConfigError("h_representation uses the cascade rule and needs an AIFS measure")
    leaves = cascade_leaves(measure.ratio, budget.quadrature_level)
    base = 1j * chi(-t, leaves)
    return np.array([np.mean(np.exp(1j * lam * leaves) * base) for lam in spectrum.frequencies])


# ---------------- closed-form examples ----------------

@dataclass(frozen=True, eq=False)
class BridgeProcess:
    """Periodic Brownian bridge: unit atoms at 2n, X(t) = sqrt(pi/2) sum sin(nt)/n Z_n."""
    measure: AtomicMeasure
    spectrum: Spectrum
    X: CoefficientPath
    W: CoefficientPath


def bridge_x_coefficients(times, n_max: int) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n = np.arange(1, n_max + 1, dtype=float)
    return math.sqrt(math.pi / 2.0) * np.sin(np.multiply.outer(times, n)) / n


def bridge_w_coefficients(times, n_max: int) -> np.ndarray:
    """sqrt(pi/2) cos(nt): finite only in Kondratiev norms, where ||Z_n||_{-2}^2 = (2n)^-2."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n = np.arange(1, n_max + 1, dtype=float)
    return math.sqrt(math.pi / 2.0) * np.cos(np.multiply.outer(times, n))


def brownian_bridge_process(n_max: int, times) -> BridgeProcess:
    if n_max < 1:
        raise ConfigError("bridge n_max must be >= 1")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    measure = bridge_measure(n_max)
    spectrum = Spectrum(frequencies=measure.points, label="bridge")
    common = dict(measure=measure, spectrum=spectrum, budget=DEFAULT_BUDGET,
                  coordinates=np.arange(1, n_max + 1))
    X = CoefficientPath(times=times, coeffs=bridge_x_coefficients(times, n_max), kind=PathKind.X,
                        deficits=np.full(times.size, 4.0 * measure.tail_bound), label="X[bridge]", **common)
    W = CoefficientPath(times=times, coeffs=bridge_w_coefficients(times, n_max), kind=PathKind.W,
                        label="W[bridge]", **common)
    return BridgeProcess(measure=measure, spectrum=spectrum, X=X, W=W)


def bridge_shape_report(n_max: int, times) -> Dict[str, float]:
    """Fit r(t) = c t (pi - t) from the atom series and compare with the candidate constants."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    kernel = CovarianceKernel(bridge_measure(n_max))
    r = np.atleast_1d(kernel.variance(times))
    shape = times * (math.pi - times)
    c = float(np.dot(r, shape) / np.dot(shape, shape))
    return {
        "c_fit": c,
        "max_rel_shape_error": float(np.max(np.abs(r / (c * shape) - 1.0))),
        "c_series": 0.5,                        # 2 sum (1 - cos 2nt)/(2n)^2 = t(pi - t)/2
        "c_displayed": 2.0 / math.pi,           # from t(pi - t) = pi sum (1 - cos 2nt)/(2n)^2
        "c_oracle_path": math.pi / 4.0,         # variance of sqrt(pi/2) sum sin(nt)/n Z_n
        "truncation_bound": 4.0 * kernel.measure.tail_bound,
    }


@dataclass(frozen=True, eq=False)
class OUProcess:
    """Ornstein-Uhlenbeck dX = theta (mu - X) dt + alpha dB and its spectral density."""
    theta: float
    mu: float
    alpha: float
    kernel: CovarianceKernel

    @property
    def measure(self):
        return self.kernel.measure

    @property
    def stationary_variance(self) -> float:
        return self.alpha ** 2 / (2.0 * abs(self.theta))

    def stated_variance(self, t):
        """alpha^2/(2 theta) (1 - exp(-2 theta t))."""
        t = np.asarray(t, dtype=float)
        return self.stationary_variance * (1.0 - np.exp(-2.0 * abs(self.theta) * t))

    def closed_form_variance(self, t):
        """integral (1 - cos tu)/u^2 d sigma = alpha^2/(2 theta) (1 - exp(-theta t))."""
        t = np.abs(np.asarray(t, dtype=float))
        return self.stationary_variance * (1.0 - np.exp(-abs(self.theta) * t))

    def quadrature_variance(self, t):
        """integral (1 - cos tu)/u^2 d sigma by quadrature: half of r(t)."""
        return 0.5 * np.asarray(self.kernel.variance(t))


def ou_process(theta: float, mu: float, alpha: float, budget: TruncationBudget = DEFAULT_BUDGET) -> OUProcess:
    if theta == 0:
        raise ConfigError("OU theta must be nonzero")
    measure = ou_density(theta, alpha)
    return OUProcess(theta=float(theta), mu=float(mu), alpha=float(alpha),
                     kernel=CovarianceKernel(measure, budget))


def ou_decay_report(process: OUProcess, times) -> Dict[str, float]:
    """Fit q(t) = A (1 - exp(-kappa t)) to the quadrature and compare both candidate laws."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    q = np.atleast_1d(process.quadrature_variance(times))
    law = lambda t, A, kappa: A * (1.0 - np.exp(-kappa * t))
    (A, kappa), _ = curve_fit(law, times, q, p0=(process.stationary_variance, abs(process.theta)))
    stated = np.atleast_1d(process.stated_variance(times))
    closed = np.atleast_1d(process.closed_form_variance(times))
    return {
        "fitted_amplitude": float(A),
        "fitted_rate": float(kappa),
        "stated_rate": 2.0 * abs(process.theta),
        "closed_form_rate": abs(process.theta),
        "max_dev_stated": float(np.max(np.abs(q - stated))),
        "max_dev_closed_form": float(np.max(np.abs(q - closed))),
        "max_dev_fitted": float(np.max(np.abs(q - law(times, A, kappa)))),
    }
