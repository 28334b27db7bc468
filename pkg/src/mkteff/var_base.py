"""Constant-coefficient VAR estimation and its diagnostic battery.

Equation-by-equation OLS (identical regressors make it the efficient system
estimator), BIC order selection on a common sample, Bartlett-kernel HAC
standard errors, a joint predictive-causality F test, and a cumulative-score
parameter-constancy test against random-walk drift.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DataError, NumericalError
from .market_data import AlignedPanel

__all__ = [
    "VarEstimate",
    "GrangerResult",
    "HansenLcResult",
    "HANSEN_LC_CRITICAL",
    "fit_var_ols",
    "select_lag_bic",
    "newey_west_cov",
    "granger_causality",
    "granger_causality_pairwise",
    "hansen_lc",
]

# Cumulative-score constancy test: asymptotic critical values indexed by the
# number of jointly tested parameters (coefficients plus variances), at the
# 10/5/1 percent levels. Hansen (1992), parameter counts 1..20.
HANSEN_LC_CRITICAL: dict[int, tuple[float, float, float]] = {
    1: (0.353, 0.470, 0.748),
    2: (0.610, 0.749, 1.07),
    3: (0.846, 1.01, 1.35),
    4: (1.07, 1.24, 1.60),
    5: (1.28, 1.47, 1.88),
    6: (1.49, 1.68, 2.12),
    7: (1.69, 1.90, 2.35),
    8: (1.89, 2.11, 2.59),
    9: (2.10, 2.32, 2.82),
    10: (2.29, 2.54, 3.05),
    11: (2.49, 2.75, 3.27),
    12: (2.69, 2.96, 3.51),
    13: (2.89, 3.15, 3.69),
    14: (3.08, 3.34, 3.90),
    15: (3.26, 3.54, 4.07),
    16: (3.46, 3.75, 4.30),
    17: (3.64, 3.95, 4.51),
    18: (3.83, 4.14, 4.73),
    19: (4.03, 4.33, 4.92),
    20: (4.22, 4.52, 5.13),
}


@dataclass(frozen=True, eq=False)
class VarEstimate:
    """Fitted VAR(p): intercepts, lag matrices, residuals, and diagnostics.

    ``coefficients`` stacks the per-equation parameter vectors as columns with
    row 0 the intercept and row 1 + (l-1)*n + j the lag-l weight on asset j.
    ``sigma`` uses the maximum-likelihood 1/T_eff scaling (what BIC needs);
    ``robust_se`` holds HAC standard errors in the same layout as
    ``coefficients``, transposed to one row per equation.
    """

    p: int
    asset_ids: tuple[str, ...]
    nu: np.ndarray  # (n,)
    A: np.ndarray  # (p, n, n); A[l-1][i, j] multiplies asset j at lag l in equation i
    coefficients: np.ndarray  # (k, n), k = 1 + n*p
    residuals: np.ndarray  # (T_eff, n)
    regressors: np.ndarray  # (T_eff, k)
    sigma: np.ndarray  # (n, n)
    robust_se: np.ndarray  # (n, k)
    bic: float
    adj_r2: np.ndarray  # (n,)
    nobs: int

    @property
    def n_assets(self) -> int:
        return len(self.asset_ids)


@dataclass(frozen=True)
class GrangerResult:
    """Joint F test that one asset's lags predict the other equations."""

    source_asset: str
    f_statistic: float
    df_num: int
    df_den: int
    p_value: float

    def to_dict(self) -> dict:
        return {
            "source": self.source_asset,
            "f": self.f_statistic,
            "df": [self.df_num, self.df_den],
            "p_value": self.p_value,
        }


@dataclass(frozen=True)
class HansenLcResult:
    """Joint parameter-constancy statistic over coefficients and variances."""

    lc_statistic: float
    n_params: int
    thresholds: dict  # level -> critical value

    def rejects_at(self, level: float = 0.05) -> bool:
        return self.lc_statistic > self.thresholds[level]

    def to_dict(self) -> dict:
        return {
            "lc": self.lc_statistic,
            "n_params": self.n_params,
            "thresholds": {str(k): v for k, v in self.thresholds.items()},
        }


def _design(values: np.ndarray, p: int, sample_start: int) -> tuple[np.ndarray, np.ndarray]:
    """Targets and [1, lags...] regressors with targets starting at row sample_start."""
    T = values.shape[0]
    Y = values[sample_start:]
    cols = [np.ones(T - sample_start)]
    for l in range(1, p + 1):
        cols.append(values[sample_start - l : T - l])
    return Y, np.column_stack(cols)


def _hac_cov(X: np.ndarray, resid: np.ndarray, bandwidth: int) -> np.ndarray:
    """Bartlett-kernel sandwich covariance per equation; bandwidth 0 is White."""
    T, k = X.shape
    n = resid.shape[1]
    xtx_inv = np.linalg.inv(X.T @ X)
    covs = np.empty((n, k, k))
    for i in range(n):
        u = X * resid[:, i : i + 1]  # (T, k) score rows
        meat = u.T @ u
        for j in range(1, bandwidth + 1):
            w = 1.0 - j / (bandwidth + 1.0)
            gamma = u[j:].T @ u[:-j]
            meat += w * (gamma + gamma.T)
        covs[i] = xtx_inv @ meat @ xtx_inv
    return covs


def _auto_bandwidth(T: int) -> int:
    return int(math.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def fit_var_ols(panel: AlignedPanel, p: int, sample_start: int | None = None) -> VarEstimate:
    """Fit a VAR(p) with intercepts by per-equation OLS.

    Parameters
    ----------
    panel : AlignedPanel
        Returns panel, T x n.
    p : int
        Lag order, at least 1.
    sample_start : int, optional
        First target row. Defaults to ``p``; order selection passes the common
        ``p_max`` so candidate fits share a sample.

    Returns
    -------
    VarEstimate
        With residuals, ML residual covariance, BIC, adjusted R-squared, and
        HAC standard errors at the automatic bandwidth.
    """
    if p < 1:
        raise DataError("lag order must be at least 1")
    values = panel.values
    T, n = values.shape
    start = p if sample_start is None else sample_start
    if start < p:
        raise DataError("sample_start cannot be smaller than p")
    k = 1 + n * p
    if T - start <= k:
        raise DataError(f"too few rows: need more than {k + start}, got {T}")
    Y, X = _design(values, p, start)
    beta, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    if rank < k:
        raise NumericalError("rank-deficient regressor matrix")
    resid = Y - X @ beta
    teff = Y.shape[0]
    sigma = resid.T @ resid / teff
    sign, logdet = np.linalg.slogdet(sigma)
    bic = (logdet if sign > 0 else -np.inf) + (n * k) * math.log(teff) / teff
    tss = ((Y - Y.mean(axis=0)) ** 2).sum(axis=0)
    rss = (resid**2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        adj_r2 = 1.0 - (rss / max(teff - k, 1)) / (tss / (teff - 1))
    covs = _hac_cov(X, resid, _auto_bandwidth(teff))
    robust_se = np.sqrt(np.maximum(np.diagonal(covs, axis1=1, axis2=2), 0.0))
    A = np.stack([beta[1 + l * n : 1 + (l + 1) * n].T for l in range(p)])
    return VarEstimate(
        p=p,
        asset_ids=panel.asset_ids,
        nu=beta[0].copy(),
        A=A,
        coefficients=beta,
        residuals=resid,
        regressors=X,
        sigma=sigma,
        robust_se=robust_se,
        bic=float(bic),
        adj_r2=np.asarray(adj_r2, dtype=float),
        nobs=teff,
    )


def select_lag_bic(panel: AlignedPanel, p_max: int) -> int:
    """Smallest-BIC lag order over 1..p_max, all fit on the rows after p_max."""
    if p_max < 1:
        raise DataError("p_max must be at least 1")
    best_p, best_bic = 1, np.inf
    for p in range(1, p_max + 1):
        est = fit_var_ols(panel, p, sample_start=p_max)
        if est.bic < best_bic:
            best_p, best_bic = p, est.bic
    return best_p


def newey_west_cov(estimate: VarEstimate, bandwidth: int | str = "auto") -> np.ndarray:
    """HAC coefficient covariance per equation, shape (n, k, k).

    Bartlett weights 1 - j/(L+1); ``bandwidth="auto"`` uses
    floor(4 * (T/100)^(2/9)). No small-sample degrees-of-freedom correction.
    """
    if bandwidth == "auto":
        bandwidth = _auto_bandwidth(estimate.nobs)
    if not isinstance(bandwidth, (int, np.integer)) or bandwidth < 0:
        raise DataError("bandwidth must be a non-negative integer or 'auto'")
    return _hac_cov(estimate.regressors, estimate.residuals, int(bandwidth))


def _source_index(panel: AlignedPanel, source) -> int:
    if isinstance(source, str):
        return panel.asset_ids.index(source)
    return int(source)


def _stacked_rss(Y: np.ndarray, X: np.ndarray, drop_cols: dict[int, list[int]]) -> float:
    """Total RSS over equations, dropping the given columns per equation."""
    total = 0.0
    for i in range(Y.shape[1]):
        drop = drop_cols.get(i, [])
        keep = [c for c in range(X.shape[1]) if c not in drop]
        Xi = X[:, keep]
        beta, _, rank, _ = np.linalg.lstsq(Xi, Y[:, i], rcond=None)
        if rank < len(keep):
            raise NumericalError("singular restricted system")
        r = Y[:, i] - Xi @ beta
        total += float(r @ r)
    return total


def granger_causality(
    panel: AlignedPanel,
    p: int,
    source,
    method: str = "rss",
    estimate: VarEstimate | None = None,
) -> GrangerResult:
    """Test whether the source asset's lags predict all other equations jointly.

    The unrestricted model stacks the n OLS equations into one block-diagonal
    system; the restriction zeroes the source's lag coefficients in every other
    equation (p*(n-1) restrictions). ``method="rss"`` computes the classical
    F from restricted/unrestricted residual sums; ``method="wald"`` computes
    the algebraically identical restriction-matrix form, kept as a cross-check.
    """
    est = estimate if estimate is not None else fit_var_ols(panel, p)
    n = est.n_assets
    k = est.coefficients.shape[0]
    src = _source_index(panel, source)
    src_cols = [1 + l * n + src for l in range(p)]
    others = [i for i in range(n) if i != src]
    r = p * (n - 1)
    teff = est.nobs
    df_den = n * teff - n * k
    Y = est.regressors @ est.coefficients + est.residuals
    X = est.regressors
    rss_u = float((est.residuals**2).sum())
    if method == "rss":
        rss_r = _stacked_rss(Y, X, {i: src_cols for i in others})
        f_stat = ((rss_r - rss_u) / r) / (rss_u / df_den)
    elif method == "wald":
        s2 = rss_u / df_den
        xtx_inv = np.linalg.inv(X.T @ X)
        sub = xtx_inv[np.ix_(src_cols, src_cols)]
        wald = 0.0
        for i in others:
            b = est.coefficients[src_cols, i]
            wald += float(b @ np.linalg.solve(sub, b)) / s2
        f_stat = wald / r
    else:
        raise DataError(f"unknown method {method!r}")
    return GrangerResult(
        source_asset=panel.asset_ids[src],
        f_statistic=float(f_stat),
        df_num=r,
        df_den=df_den,
        p_value=float(stats.f.sf(f_stat, r, df_den)),
    )


def granger_causality_pairwise(
    panel: AlignedPanel,
    p: int,
    source,
    target,
    estimate: VarEstimate | None = None,
) -> GrangerResult:
    """Single-equation variant: source lags tested in one target equation only."""
    est = estimate if estimate is not None else fit_var_ols(panel, p)
    n = est.n_assets
    src = _source_index(panel, source)
    tgt = _source_index(panel, target)
    if src == tgt:
        raise DataError("source and target must differ")
    src_cols = [1 + l * n + src for l in range(p)]
    Y = est.regressors @ est.coefficients + est.residuals
    X = est.regressors
    k = X.shape[1]
    rss_u = float((est.residuals[:, tgt] ** 2).sum())
    rss_r = _stacked_rss(Y[:, [tgt]], X, {0: src_cols})
    df_den = est.nobs - k
    f_stat = ((rss_r - rss_u) / p) / (rss_u / df_den)
    return GrangerResult(
        source_asset=panel.asset_ids[src],
        f_statistic=float(f_stat),
        df_num=p,
        df_den=df_den,
        p_value=float(stats.f.sf(f_stat, p, df_den)),
    )


def hansen_lc(panel: AlignedPanel, p: int, estimate: VarEstimate | None = None) -> HansenLcResult:
    """Cumulative-score constancy statistic over all coefficients and variances.

    Per equation the score rows are the regressor-weighted residuals plus the
    centered squared residual; stacking across equations gives f_t, and the
    statistic is (1/T) * sum_t S_t' V^{-1} S_t with S_t the running score sum
    and V the outer-product sum. Large values indicate parameters drifting
    like a random walk.
    """
    est = estimate if estimate is not None else fit_var_ols(panel, p)
    X = est.regressors
    resid = est.residuals
    teff, k = X.shape
    n = resid.shape[1]
    sig2 = (resid**2).mean(axis=0)
    blocks = []
    for i in range(n):
        blocks.append(np.column_stack([X * resid[:, i : i + 1], resid[:, i] ** 2 - sig2[i]]))
    F = np.concatenate(blocks, axis=1)  # (T_eff, m)
    m = F.shape[1]
    S = F.cumsum(axis=0)
    V = F.T @ F
    try:
        VinvS = np.linalg.solve(V, S.T)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("score covariance singular: collinear scores") from exc
    lc = float(np.einsum("tm,mt->", S, VinvS) / teff)
    if m in HANSEN_LC_CRITICAL:
        row = HANSEN_LC_CRITICAL[m]
    else:
        warnings.warn(
            f"{m} parameters exceeds the tabulated range; using the 20-parameter thresholds",
            stacklevel=2,
        )
        row = HANSEN_LC_CRITICAL[20]
    return HansenLcResult(
        lc_statistic=lc,
        n_params=m,
        thresholds={0.10: row[0], 0.05: row[1], 0.01: row[2]},
    )
