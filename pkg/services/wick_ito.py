# services/wick_ito.py - Riemann-sum Wick-Ito integral and Ito-formula checks

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.integrate import simpson

from errors import (
    MismatchedContextError,
    NonConvergenceError,
    UnderResolvedGridError,
    UnsupportedFunctionError,
)
from models.chaos import ChaosElement, MultiIndex
from models.paths import CoefficientPath, IntegrandPath, Partition
from services.chaos_algebra import gaussian_polynomial, minus_norm
from services.covariance import CovarianceKernel
from services.processes import build_W, build_X
from services.quadrature import gauss_legendre

logger = logging.getLogger(__name__)

MIN_MC_GRID = 9


# ---------------- Riemann sums ----------------

def _same_context(Y: IntegrandPath, X: CoefficientPath) -> None:
    if Y.measure is not None and Y.measure is not X.measure:
        raise MismatchedContextError(f"integrand built on {Y.measure.label!r}, integrator on {X.measure.label!r}")
    if Y.spectrum is not None and not (
        Y.spectrum is X.spectrum or np.array_equal(Y.spectrum.frequencies, X.spectrum.frequencies)
    ):
        raise MismatchedContextError("integrand and integrator use different spectra")


def x_at(X: CoefficientPath, nodes: np.ndarray) -> np.ndarray:
    """X coefficients at the nodes, reusing the path grid when it already holds them."""
    idx = np.searchsorted(X.times, nodes)
    idx = np.clip(idx, 0, X.times.size - 1)
    if np.allclose(X.times[idx], nodes, rtol=0.0, atol=1e-13):
        return np.real(X.coeffs[idx])
    return np.real(build_X(X.measure, X.spectrum, nodes, X.budget, deficit_threshold=None).coeffs)


def riemann_sum_from_increments(Ys: Sequence[ChaosElement], dX: np.ndarray,
                                coordinates: np.ndarray) -> ChaosElement:
    """
    sum_k Y_k <> dX_k for first-chaos increments dX (K x J), as one matrix product
    M = Yc^T dX over the union of multi-indices; the reduction order is fixed.
    """
    alphas = sorted({alpha for Y in Ys for alpha in Y})
    if not alphas:
        return ChaosElement()
    col = {alpha: i for i, alpha in enumerate(alphas)}
    Yc = np.zeros((len(Ys), len(alphas)))
    for k, Y in enumerate(Ys):
        for alpha, c in Y.items():
            Yc[k, col[alpha]] = c
    M = Yc.T @ dX
    units = [MultiIndex.unit(int(j)) for j in coordinates]
    acc: Dict[MultiIndex, float] = defaultdict(float)
    for a, alpha in enumerate(alphas):
        row = M[a]
        for j in np.flatnonzero(row):
            acc[alpha + units[j]] += row[j]
    return ChaosElement(acc)


def wick_riemann_sum(Y: IntegrandPath, X: CoefficientPath, partition: Partition) -> ChaosElement:
    """sum_k Y(t_k) <> (X(t_{k+1}) - X(t_k)) with left-endpoint evaluation."""
    _same_context(Y, X)
    nodes = partition.nodes
    dX = np.diff(x_at(X, nodes), axis=0)
    return riemann_sum_from_increments(Y(nodes[:-1]), dX, X.coordinates)


# ---------------- mesh refinement ----------------

@dataclass
class WickItoResult:
    value: ChaosElement            # last raw Riemann sum
    extrapolated: ChaosElement     # Romberg diagonal at the last refinement
    table: List[Dict[str, float]]
    fitted_order: float
    level: int
    observed_level: Optional[int]
    refinements: int

    def to_dict(self) -> dict:
        return {
            "fitted_order": self.fitted_order,
            "level": self.level,
            "observed_level": self.observed_level,
            "refinements": self.refinements,
            "terms": len(self.extrapolated),
            "table": self.table,
        }


def _romberg_row(prev_row: List[ChaosElement], raw: ChaosElement) -> List[ChaosElement]:
    """R[i][j] = (2^j R[i][j-1] - R[i-1][j-1]) / (2^j - 1); raw sums err in integer powers of the mesh."""
    row = [raw]
    for j in range(1, len(prev_row) + 1):
        f = 2.0 ** j
        row.append(row[j - 1].scale(f / (f - 1.0)) - prev_row[j - 1].scale(1.0 / (f - 1.0)))
    return row


def _fitted_order(table: List[Dict[str, float]]) -> float:
    rows = [r for r in table if r["norm_diff"] > 0 and math.isfinite(r["norm_diff"])]
    if len(rows) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log([r["mesh"] for r in rows]), np.log([r["norm_diff"] for r in rows]), 1)
    return float(slope)


def _observed_level(raws: List[ChaosElement], levels=(2, 3, 4)) -> Optional[int]:
    """Smallest p whose successive differences shrink (ratio <= 0.75) over the last refinements."""
    if len(raws) < 3:
        return None
    for p in levels:
        diffs = [minus_norm(b - a, p) for a, b in zip(raws[:-1], raws[1:])]
        tail = diffs[-3:] if len(diffs) >= 3 else diffs
        if all(d < 1e-14 for d in tail):
            return p
        if all(b <= 0.75 * a for a, b in zip(tail[:-1], tail[1:])):
            return p
    return None


def wick_ito_integral(Y: IntegrandPath, W: CoefficientPath, a: float = 0.0, b: float = 1.0,
                      tol: float = 1e-3, level: int = 2, initial_intervals: int = 4,
                      min_refinements: int = 3, max_refinements: int = 10,
                      extrapolate: bool = True) -> WickItoResult:
    """
    integral_a^b Y(t) <> W(t) dt as the limit of Riemann sums against X increments,
    halving the mesh until successive (extrapolated) sums differ by < tol in ||.||_{-level}.
    W supplies the measure/spectrum context; X is rebuilt at the partition nodes.
    """
    _same_context(Y, W)
    partition = Partition.uniform(a, b, initial_intervals)
    raws: List[ChaosElement] = []
    row: List[ChaosElement] = []
    table: List[Dict[str, float]] = []
    for i in range(max_refinements + 1):
        nodes = partition.nodes
        X_nodes = np.real(build_X(W.measure, W.spectrum, nodes, W.budget, deficit_threshold=None).coeffs)
        S = riemann_sum_from_increments(Y(nodes[:-1]), np.diff(X_nodes, axis=0), W.coordinates)
        prev_diag = row[-1] if row else None
        row = _romberg_row(row, S)
        entry = {"mesh": partition.mesh, "norm_diff": float("nan"), "order": float("nan"),
                 "extrapolated_diff": float("nan")}
        if raws:
            diff = minus_norm(S - raws[-1], level)
            entry["norm_diff"] = diff
            prev = table[-1]["norm_diff"]
            if diff > 0 and prev > 0 and math.isfinite(prev):
                entry["order"] = math.log2(prev / diff)
            entry["extrapolated_diff"] = minus_norm(row[-1] - prev_diag, level)
        raws.append(S)
        table.append(entry)
        logger.debug("wick-ito refinement %d: mesh=%g diff=%g", i, entry["mesh"], entry["norm_diff"])
        gate = entry["extrapolated_diff"] if extrapolate else entry["norm_diff"]
        if i >= min_refinements and gate < tol:
            return WickItoResult(value=S, extrapolated=row[-1] if extrapolate else S, table=table[1:],
                                 fitted_order=_fitted_order(table[1:]), level=level,
                                 observed_level=_observed_level(raws), refinements=i)
        partition = partition.halve()
    raise NonConvergenceError(
        f"Wick-Ito sums did not reach tol={tol:g} in ||.||_-{level} after {max_refinements} halvings",
        trace=table[1:],
    )


# ---------------- integrands ----------------

def process_integrand(X: CoefficientPath, derivative_coeffs: Sequence[float], label: str = "") -> IntegrandPath:
    """Y(t) = p(X(t)) for a polynomial p of degree <= 3, expanded exactly in Wick powers."""
    coords = X.coordinates

    def sample(times: np.ndarray) -> List[ChaosElement]:
        c = x_at(X, times)
        r = np.sum(c * c, axis=1)
        return [gaussian_polynomial(derivative_coeffs, ChaosElement.first_chaos(ci, coords), ri)
                for ci, ri in zip(c, r)]

    return IntegrandPath(sample=sample, label=label or "p(X)", measure=X.measure, spectrum=X.spectrum)


def identity_integrand(X: CoefficientPath) -> IntegrandPath:
    return process_integrand(X, [0.0, 1.0], label="X")


def deterministic_integrand(g: Callable[[np.ndarray], np.ndarray], label: str = "g") -> IntegrandPath:
    return IntegrandPath(sample=lambda times: [ChaosElement.constant(v) for v in np.asarray(g(times), dtype=float)],
                         label=label)


# ---------------- Ito formula ----------------

@dataclass(frozen=True)
class ItoFunction:
    name: str
    f: Callable[[np.ndarray], np.ndarray]
    f2: Callable[[np.ndarray], np.ndarray]
    polynomial: Optional[Tuple[float, ...]] = None


def ito_function(name: str, alpha: float = 1.0) -> ItoFunction:
    if name == "cos":
        return ItoFunction("cos", lambda x: np.cos(alpha * x), lambda x: -alpha ** 2 * np.cos(alpha * x))
    if name == "sin":
        return ItoFunction("sin", lambda x: np.sin(alpha * x), lambda x: -alpha ** 2 * np.sin(alpha * x))
    if name == "x2":
        return ItoFunction("x2", lambda x: x * x, lambda x: 2.0 * np.ones_like(x), (0.0, 0.0, 1.0))
    if name == "x3":
        return ItoFunction("x3", lambda x: x ** 3, lambda x: 6.0 * x, (0.0, 0.0, 0.0, 1.0))
    if name == "linear":
        return ItoFunction("linear", lambda x: alpha * x, lambda x: np.zeros_like(x), (0.0, alpha))
    raise UnsupportedFunctionError(f"unknown Ito test function '{name}'")


def _polynomial_coeffs(f: Union[str, Sequence[float]]) -> Tuple[float, ...]:
    if isinstance(f, str):
        poly = ito_function(f).polynomial
        if poly is None:
            raise UnsupportedFunctionError(f"'{f}' has no exact chaos representation; use the Monte Carlo check")
        return poly
    coeffs = tuple(float(c) for c in f)
    if any(c != 0.0 for c in coeffs[4:]):
        raise UnsupportedFunctionError("polynomial Ito check supports degree <= 3")
    return coeffs[:4]


def truncated_rate(X: CoefficientPath, times) -> np.ndarray:
    """r_N'(s) = 2 sum_n c_n(s) sigma_hat(s - lambda_n) for the truncated expansion."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    c = x_at(X, times)
    w = np.real(build_W(X.measure, X.spectrum, times, X.budget, deficit_threshold=None).coeffs)
    return 2.0 * np.sum(c * w, axis=1)


def _rate(X: CoefficientPath, times: np.ndarray, source: str,
          kernel: Optional[CovarianceKernel]) -> np.ndarray:
    if source == "truncated":
        return truncated_rate(X, times)
    if source == "kernel":
        kernel = kernel or CovarianceKernel(X.measure, X.budget)
        return np.atleast_1d(kernel.variance_rate(times))
    raise UnsupportedFunctionError(f"unknown rate source '{source}'")


@dataclass
class ItoPolynomialReport:
    residual: float
    lhs: ChaosElement
    rhs: ChaosElement
    integral: Optional[WickItoResult]
    rate_source: str

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "rate_source": self.rate_source,
            "lhs_terms": len(self.lhs),
            "rhs_terms": len(self.rhs),
            **({"integral": self.integral.to_dict()} if self.integral else {}),
        }


def ito_formula_check_polynomial(f: Union[str, Sequence[float]], t0: float, t: float, X: CoefficientPath,
                                 tol: float = 1e-9, level: int = 2, rate_source: str = "truncated",
                                 kernel: Optional[CovarianceKernel] = None, quad_order: int = 40,
                                 max_refinements: int = 10) -> ItoPolynomialReport:
    """
    ||f(X(t)) - f(X(t0)) - integral f'(X) <> W ds - 1/2 integral f''(X) r' ds||_{-level}
    with both sides expanded exactly in chaos coefficients.
    """
    a = _polynomial_coeffs(f)
    a = tuple(a) + (0.0,) * (4 - len(a))
    coords = X.coordinates
    ends = np.array([t0, t], dtype=float)
    c_ends = x_at(X, ends)
    r_ends = np.sum(c_ends * c_ends, axis=1)
    fX = [gaussian_polynomial(a, ChaosElement.first_chaos(c, coords), r) for c, r in zip(c_ends, r_ends)]
    lhs = fX[1] - fX[0]
    if t == t0:
        return ItoPolynomialReport(residual=minus_norm(lhs, level), lhs=lhs, rhs=ChaosElement(),
                                   integral=None, rate_source=rate_source)

    derivative = (a[1], 2.0 * a[2], 3.0 * a[3])
    Y = process_integrand(X, derivative, label="f'(X)")
    W = build_W(X.measure, X.spectrum, ends, X.budget, deficit_threshold=None)
    integral = wick_ito_integral(Y, W, t0, t, tol=tol, level=level, max_refinements=max_refinements)

    # 1/2 integral f''(X(s)) r'(s) ds with f''(x) = 2 a2 + 6 a3 x
    gx, gw = gauss_legendre(quad_order)
    nodes = 0.5 * (t - t0) * (gx + 1.0) + t0
    weights = 0.5 * (t - t0) * gw
    rate = _rate(X, nodes, rate_source, kernel)
    c_nodes = x_at(X, nodes)
    scalar = a[2] * float(np.dot(weights, rate))
    first = 3.0 * a[3] * (weights * rate) @ c_nodes
    correction = ChaosElement.constant(scalar) + ChaosElement.first_chaos(first, coords)

    rhs = integral.extrapolated + correction
    residual = minus_norm(lhs - rhs, level)
    logger.info("Ito polynomial check %s on [%g, %g]: residual %.3e", f, t0, t, residual)
    return ItoPolynomialReport(residual=residual, lhs=lhs, rhs=rhs, integral=integral, rate_source=rate_source)


def gaussian_expectation(g: Callable[[np.ndarray], np.ndarray], variance, order: int = 48) -> np.ndarray:
    """E[g(X)] for X ~ N(0, variance) by Gauss-Hermite (probabilists') quadrature."""
    x, w = hermegauss(order)
    w = w / math.sqrt(2.0 * math.pi)
    std = np.sqrt(np.atleast_1d(np.asarray(variance, dtype=float)))
    return np.array([np.dot(w, g(s * x)) for s in std])


@dataclass
class ItoMonteCarloReport:
    function: str
    z_mc: float
    z_analytic: float
    lhs_mean: float
    correction_mean: float
    analytic_correction: float
    stderr: float
    M: int
    grid_points: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def ito_formula_check_mc(f: Union[str, ItoFunction], t0: float, t: float, ensemble,
                         rate_source: str = "truncated", kernel: Optional[CovarianceKernel] = None,
                         alpha: float = 1.0) -> ItoMonteCarloReport:
    """
    Paired estimator d = f(X(t)) - f(X(t0)) - 1/2 integral f''(X) r' ds has mean zero;
    also compares E[f(X(t)) - f(X(t0))] with the Gauss-Hermite heat-flow value.
    """
    fn = ito_function(f, alpha) if isinstance(f, str) else f
    times = ensemble.times
    sel = np.flatnonzero((times >= t0 - 1e-13) & (times <= t + 1e-13))
    if sel.size < MIN_MC_GRID:
        raise UnderResolvedGridError(f"only {sel.size} grid points in [{t0}, {t}]; need >= {MIN_MC_GRID}")
    s = times[sel]
    if not (math.isclose(s[0], t0, abs_tol=1e-12) and math.isclose(s[-1], t, abs_tol=1e-12)):
        raise UnderResolvedGridError("ensemble grid must contain both end points")
    X = np.real(ensemble.values[:, sel])
    path = ensemble.path
    rate = _rate(path, s, rate_source, kernel)
    variance = np.sum(np.abs(np.asarray(path.coeffs)[sel]) ** 2, axis=1)

    lhs = fn.f(X[:, -1]) - fn.f(X[:, 0])
    correction = 0.5 * simpson(fn.f2(X) * rate[None, :], x=s, axis=1)
    d = lhs - correction
    M = ensemble.M
    se_d = float(d.std(ddof=1) / math.sqrt(M))
    se_lhs = float(lhs.std(ddof=1) / math.sqrt(M))
    analytic = 0.5 * float(simpson(gaussian_expectation(fn.f2, variance) * rate, x=s))
    z_mc = float(d.mean() / se_d) if se_d > 0 else 0.0
    z_an = float((lhs.mean() - analytic) / se_lhs) if se_lhs > 0 else 0.0
    return ItoMonteCarloReport(
        function=fn.name, z_mc=z_mc, z_analytic=z_an, lhs_mean=float(lhs.mean()),
        correction_mean=float(correction.mean()), analytic_correction=analytic,
        stderr=se_lhs, M=M, grid_points=int(sel.size),
    )
