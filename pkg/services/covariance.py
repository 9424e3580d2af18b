# services/covariance.py - covariance kernel K(t,s), variance r(t) and its rate r'(t)

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import integrate as sp_integrate

from errors import IntegrabilityError
from models.measures import MeasureKind, SpectralMeasure, TruncationBudget
from services.quadrature import gauss_legendre, segment_rule
from services.spectral_measures import (
    DEFAULT_BUDGET,
    admissibility_constant,
    linear_integrability_constant,
    sigma_hat_values,
)

logger = logging.getLogger(__name__)

TAYLOR_CUTOFF = 1e-4


# ---------------- kernels with removable singularities ----------------

def chi(t: float, u) -> np.ndarray:
    """chi_t(u) = integral_0^t exp(iuv) dv = (exp(iut) - 1) / (iu)."""
    u = np.asarray(u, dtype=float)
    shape, u = u.shape, u.ravel()
    out = np.empty(u.shape, dtype=complex)
    small = np.abs(u) < TAYLOR_CUTOFF
    ub = u[~small]
    out[~small] = 2.0 * np.sin(0.5 * ub * t) * np.exp(0.5j * ub * t) / ub
    zt = 1j * u[small] * t
    out[small] = t * (1 + zt / 2 + zt ** 2 / 6 + zt ** 3 / 24 + zt ** 4 / 120)
    return out.reshape(shape)


def one_minus_cos_over_u2(t: float, u) -> np.ndarray:
    """(1 - cos tu) / u^2, written as 2 sin^2(tu/2) / u^2 away from u = 0."""
    u = np.asarray(u, dtype=float)
    shape, u = u.shape, u.ravel()
    out = np.empty(u.shape, dtype=float)
    small = np.abs(u) < TAYLOR_CUTOFF
    ub = u[~small]
    out[~small] = 2.0 * np.sin(0.5 * t * ub) ** 2 / ub ** 2
    us = u[small]
    out[small] = t * t / 2 - t ** 4 * us ** 2 / 24 + t ** 6 * us ** 4 / 720
    return out.reshape(shape)


def sin_over_u(t: float, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    shape, u = u.shape, u.ravel()
    out = np.empty(u.shape, dtype=float)
    small = np.abs(u) < TAYLOR_CUTOFF
    ub = u[~small]
    out[~small] = np.sin(t * ub) / ub
    us = u[small]
    out[small] = t - t ** 3 * us ** 2 / 6 + t ** 5 * us ** 4 / 120
    return out.reshape(shape)


# ---------------- Kernel context ----------------

class CovarianceKernel:
    """
    K(t,s) = integral chi_t chi_s^* d sigma, r(t) = K(t,t) = 2 integral (1 - cos tu)/u^2 d sigma.

    Routes:
      time       finite measures with a real transform: cached panel moments of sigma_hat,
                 G(x) = integral_0^x (x - y) sigma_hat(y) dy, r = 2G, r' = 2 integral_0^t sigma_hat
      atoms      atomic measures: closed-form sums over the atoms
      frequency  infinite-mass densities: direct quadrature in u
    """

    def __init__(self, measure: SpectralMeasure, budget: TruncationBudget = DEFAULT_BUDGET,
                 horizon: float = 8.0, panel_width: float = 0.25, order: int = 20):
        self.measure = measure
        self.budget = budget
        self.horizon = float(horizon)
        self.panel_width = float(panel_width)
        self.order = int(order)
        if measure.kind is MeasureKind.ATOMIC:
            self.route = "atoms"
        elif measure.kind is MeasureKind.DENSITY and not measure.finite_mass:
            self.route = "frequency"
        else:
            self.route = "time"
        self._lock = threading.Lock()
        self._grid: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None

    # -------- time route cache --------
    def _sigma_hat_real(self, y: np.ndarray) -> np.ndarray:
        values, _, _ = sigma_hat_values(self.measure, y, self.budget)
        return np.real(values)

    def _build(self, horizon: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        panels = max(1, int(math.ceil(horizon / self.panel_width)))
        edges = np.linspace(0.0, panels * self.panel_width, panels + 1)
        nodes, weights = segment_rule(edges, self.order)
        s = self._sigma_hat_real(nodes.ravel()).reshape(nodes.shape)
        F_seg = np.sum(weights * s, axis=1)
        M_seg = np.sum(weights * nodes * s, axis=1)
        F_cum = np.concatenate([[0.0], np.cumsum(F_seg)])
        M_cum = np.concatenate([[0.0], np.cumsum(M_seg)])
        logger.debug("sigma_hat panel cache built on [0, %g] with %d panels", edges[-1], panels)
        return edges, F_cum, M_cum

    def _ensure(self, x_max: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        grid = self._grid
        if grid is None or grid[0][-1] < x_max:
            with self._lock:
                grid = self._grid
                if grid is None or grid[0][-1] < x_max:
                    grid = self._build(max(self.horizon, 2.0 * x_max))
                    self._grid = grid
        return grid

    def _moments(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """F(x) = integral_0^x sigma_hat and M(x) = integral_0^x y sigma_hat(y) dy for x >= 0."""
        edges, F_cum, M_cum = self._ensure(float(np.max(x)) if x.size else 0.0)
        i = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, edges.size - 2)
        a = edges[i]
        gx, gw = gauss_legendre(self.order)
        half = 0.5 * (x - a)
        nodes = a[:, None] + half[:, None] * (gx + 1.0)
        weights = half[:, None] * gw
        s = self._sigma_hat_real(nodes.ravel()).reshape(nodes.shape)
        F = F_cum[i] + np.sum(weights * s, axis=1)
        M = M_cum[i] + np.sum(weights * nodes * s, axis=1)
        return F, M

    # -------- frequency route --------
    def _density_quad(self, func, lo, hi, **kw) -> float:
        value, _ = sp_integrate.quad(func, lo, hi, limit=500, epsabs=1e-13, epsrel=1e-11, **kw)
        return float(value)

    def _frequency_variance(self, t: float) -> float:
        if t == 0.0:
            return 0.0
        d = self.measure.density
        near = self._density_quad(lambda u: float(one_minus_cos_over_u2(t, np.array(u)) * d(np.array(u))), 0.0, 1.0)
        g = lambda u: float(d(np.array(u))) / (u * u)
        far = self._density_quad(g, 1.0, np.inf) - self._density_quad(g, 1.0, np.inf, weight="cos", wvar=abs(t))
        return 4.0 * (near + far)

    def _frequency_rate(self, t: float) -> float:
        if t == 0.0:
            return 0.0
        d = self.measure.density
        a = abs(t)
        near = self._density_quad(lambda u: float(sin_over_u(a, np.array(u)) * d(np.array(u))), 0.0, 1.0)
        far = self._density_quad(lambda u: float(d(np.array(u))) / u, 1.0, np.inf, weight="sin", wvar=a)
        return math.copysign(4.0 * (near + far), t)

    # -------- public surface --------
    def variance(self, t):
        """r(t) = 2 integral (1 - cos tu) / u^2 d sigma(u); accepts scalars or arrays."""
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        if self.route == "time":
            x = np.abs(arr)
            F, M = self._moments(x)
            out = 2.0 * (x * F - M)
        elif self.route == "atoms":
            m = self.measure
            out = np.array([2.0 * np.dot(one_minus_cos_over_u2(ti, m.points), m.weights) for ti in arr])
        else:
            out = np.array([self._frequency_variance(float(ti)) for ti in arr])
        return float(out[0]) if np.ndim(t) == 0 else out

    def variance_rate(self, t):
        """r'(t) = 2 integral sin(tu)/u d sigma(u) (= 2 integral_0^t sigma_hat for even sigma)."""
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        if self.route == "time":
            F, _ = self._moments(np.abs(arr))
            out = 2.0 * np.sign(arr) * F
        elif self.route == "atoms":
            m = self.measure
            out = np.array([2.0 * np.dot(sin_over_u(ti, m.points), m.weights) for ti in arr])
        else:
            out = np.array([self._frequency_rate(float(ti)) for ti in arr])
        return float(out[0]) if np.ndim(t) == 0 else out

    def kernel(self, t, s):
        """K(t,s) = (r(t) + r(s) - r(t - s)) / 2; the real part for one-sided atomic measures."""
        t_arr, s_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        flat_t, flat_s = t_arr.ravel(), s_arr.ravel()
        r = self.variance
        out = 0.5 * (np.atleast_1d(r(flat_t)) + np.atleast_1d(r(flat_s)) - np.atleast_1d(r(flat_t - flat_s)))
        out = out.reshape(t_arr.shape)
        return float(out) if out.ndim == 0 else out

    def kernel_complex(self, t: float, s: float) -> complex:
        """integral chi_t chi_s^* d sigma without dropping the imaginary part."""
        if self.route == "atoms":
            m = self.measure
            return complex(np.sum(m.weights * chi(t, m.points) * np.conj(chi(s, m.points))))
        return complex(self.kernel(t, s))

    def gram_matrix(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        tt, ss = np.meshgrid(times, times, indexing="ij")
        return np.asarray(self.kernel(tt, ss))


# ---------------- Kolmogorov continuity bound ----------------

@dataclass(frozen=True)
class KolmogorovReport:
    empirical_C: float
    supplied_C: float
    passes: bool
    weakly_integrable: bool      # integral of d sigma / (1 + |u|) is finite
    linear_constant: float
    grid_step: float

    def to_dict(self) -> dict:
        return {
            "empirical_C": self.empirical_C,
            "supplied_C": self.supplied_C,
            "passes": self.passes,
            "weakly_integrable": self.weakly_integrable,
            "linear_constant": self.linear_constant,
            "grid_step": self.grid_step,
        }


def kolmogorov_bound_check(measure: SpectralMeasure, C: float, budget: TruncationBudget = DEFAULT_BUDGET,
                           step: float = 1e-3, kernel: Optional[CovarianceKernel] = None) -> KolmogorovReport:
    """Smallest C with r(t) <= C t on a t-grid of [0, 1] and whether the supplied C dominates it."""
    if not math.isfinite(admissibility_constant(measure, budget)):
        raise IntegrabilityError("measure is not admissible: integral d sigma/(1+u^2) diverges")
    linear = linear_integrability_constant(measure, budget)
    if not math.isfinite(linear):
        logger.info("integral d sigma/(1+|u|) diverges for %s; checking the bound anyway", measure.label)
    kernel = kernel or CovarianceKernel(measure, budget)
    t = np.arange(1, int(round(1.0 / step)) + 1) * step
    ratios = np.atleast_1d(kernel.variance(t)) / t
    empirical = float(np.max(ratios))
    return KolmogorovReport(
        empirical_C=empirical,
        supplied_C=float(C),
        passes=bool(empirical <= C),
        weakly_integrable=math.isfinite(linear),
        linear_constant=linear,
        grid_step=step,
    )
