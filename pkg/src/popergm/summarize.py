"""Posterior trace summaries: moments, quantiles, ESS, autocorrelation."""

from __future__ import annotations

import math

import numpy as np

from .errors import DataError

__all__ = ["autocorrelation", "effective_sample_size", "summarize_trace"]


def _autocovariance(x: np.ndarray) -> np.ndarray:
    n = len(x)
    xc = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n].real
    return acov / n


def autocorrelation(x: np.ndarray, lag: int) -> float:
    """Sample autocorrelation at one lag; nan for constant series."""
    x = np.asarray(x, dtype=np.float64)
    if lag >= len(x):
        return math.nan
    acov = _autocovariance(x)
    if acov[0] <= 0.0:
        return math.nan
    return float(acov[lag] / acov[0])


def effective_sample_size(x: np.ndarray) -> float:
    """ESS via Geyer's initial positive sequence estimator.

    Returns nan for constant (degenerate) series.
    """
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < 4:
        return float(n)
    acov = _autocovariance(x)
    if acov[0] <= 0.0:
        return math.nan
    rho = acov / acov[0]
    tau = -1.0
    m = 0
    while 2 * m + 1 < n:
        gamma = rho[2 * m] + rho[2 * m + 1]
        if gamma < 0.0:
            break
        tau += 2.0 * gamma
        m += 1
    tau = max(tau, 1.0)
    return float(n / tau)


def summarize_trace(
    names: list[str],
    matrix: np.ndarray,
    acf_lags: tuple[int, ...] = (1, 5, 10),
) -> tuple[list[str], list[list]]:
    """Per-column posterior summary rows for a trace matrix.

    Returns header and rows: parameter, mean, sd, 2.5/50/97.5 percent
    quantiles, ESS estimate, and autocorrelations at ``acf_lags``.
    """
    if matrix.ndim != 2 or matrix.shape[1] != len(names):
        raise DataError("trace matrix and column names do not align")
    if matrix.shape[0] == 0:
        raise DataError("empty trace")
    header = ["parameter", "mean", "sd", "q2.5", "q50", "q97.5", "ess"] + [
        f"acf{lag}" for lag in acf_lags
    ]
    rows = []
    for k, name in enumerate(names):
        col = matrix[:, k]
        q = np.quantile(col, [0.025, 0.5, 0.975])
        row = [
            name,
            float(col.mean()),
            float(col.std(ddof=1)) if len(col) > 1 else 0.0,
            float(q[0]), float(q[1]), float(q[2]),
            effective_sample_size(col),
        ]
        row.extend(autocorrelation(col, lag) for lag in acf_lags)
        rows.append(row)
    return header, rows
