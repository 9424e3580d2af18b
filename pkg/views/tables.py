# views/tables.py - pandas tables written by the CLI commands

from __future__ import annotations

from typing import Optional

import numpy as np
import pandas as pd

from models.measures import SpectralMeasure, Spectrum, TruncationBudget
from models.paths import PathEnsemble
from models.report import VerificationReport
from services.covariance import CovarianceKernel
from services.spectral_measures import DEFAULT_BUDGET, sigma_hat


def spectrum_table(spectrum: Spectrum) -> pd.DataFrame:
    return pd.DataFrame({"n": np.arange(spectrum.count), "lambda": spectrum.frequencies})


def charfun_table(measure: SpectralMeasure, times, budget: TruncationBudget = DEFAULT_BUDGET) -> pd.DataFrame:
    """t, sigma_hat, err per grid point; an imaginary column only for non-even measures."""
    rows = [sigma_hat(measure, float(t), budget) for t in np.asarray(times, dtype=float)]
    values = np.array([r.value for r in rows])
    frame = pd.DataFrame({"t": np.asarray(times, dtype=float), "sigma_hat": np.real(values)})
    if np.iscomplexobj(values):
        frame["sigma_hat_im"] = np.imag(values)
    frame["err"] = [r.error_bound for r in rows]
    return frame


def variance_table(kernel: CovarianceKernel, times) -> pd.DataFrame:
    times = np.asarray(times, dtype=float)
    return pd.DataFrame({
        "t": times,
        "r": np.atleast_1d(kernel.variance(times)),
        "r_prime": np.atleast_1d(kernel.variance_rate(times)),
    })


def kernel_table(kernel: CovarianceKernel, times) -> pd.DataFrame:
    times = np.asarray(times, dtype=float)
    tt, ss = np.meshgrid(times, times, indexing="ij")
    K = kernel.gram_matrix(times)
    return pd.DataFrame({"t": tt.ravel(), "s": ss.ravel(), "K": K.ravel()})


def paths_table(ensemble: PathEnsemble, max_paths: int = 8) -> pd.DataFrame:
    frame = pd.DataFrame({"t": ensemble.times})
    for m in range(min(max_paths, ensemble.M)):
        frame[f"path_{m}"] = np.real(ensemble.values[m])
    return frame


def ensemble_table(ensemble: PathEnsemble, r: Optional[np.ndarray] = None) -> pd.DataFrame:
    frame = pd.DataFrame({
        "t": ensemble.times,
        "mean": np.real(ensemble.mean()),
        "var": ensemble.var(),
        "stderr": ensemble.stderr(),
    })
    if r is not None:
        frame["r"] = r
    deficits = ensemble.path.deficits
    if deficits.size == ensemble.times.size:
        frame["deficit"] = deficits
    return frame


def convergence_table(table) -> pd.DataFrame:
    return pd.DataFrame(table, columns=["mesh", "norm_diff", "order"])


def report_table(report: VerificationReport) -> pd.DataFrame:
    return pd.DataFrame(
        [(r.name, r.status.value, r.measured, r.bound, r.detail) for r in report.get_all()],
        columns=["name", "status", "measured", "bound", "detail"],
    )
