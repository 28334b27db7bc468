"""Residual bootstrap of the efficiency degree under the no-predictability null.

Null samples are built as x*_t = nu_hat + e*_t, with e*_t whole rows drawn
with replacement from the centered fitted residuals (rows are drawn jointly so
contemporaneous cross-asset correlation survives; the lag coefficients are
zeroed, the intercept is kept). Each replication refits the time-varying model
with the same configuration and records its degree path; the bands are
pointwise empirical quantiles across replications.

Every replication b derives its generator from
``numpy.random.SeedSequence(master_seed, spawn_key=(b,))`` , a fixed, documented
splittable-counter hash that is stable across platforms, so results are
identical for any worker count or execution order.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .errors import ConfigError, NumericalError
from .market_data import AlignedPanel
from .efficiency import efficiency_path
from .tv_var import TvVarConfig, TvVarEstimate, fit_tv_var

__all__ = [
    "BootstrapConfig",
    "BandPath",
    "resample_null_panel",
    "replication_seed",
    "bootstrap_bands",
]


@dataclass(frozen=True)
class BootstrapConfig:
    """Replication count, band coverage, and the master seed."""

    replications: int = 10_000
    coverage: float = 0.95
    master_seed: int = 0
    resample_mode: str = "iid-rows"

    def __post_init__(self):
        if not 0.0 < self.coverage < 1.0:
            raise ConfigError("coverage must be strictly between 0 and 1")
        if self.resample_mode != "iid-rows":
            raise ConfigError(f"unknown resample_mode {self.resample_mode!r}")
        if self.replications < 0:
            raise ConfigError("replications must be non-negative")


@dataclass(frozen=True, eq=False)
class BandPath:
    """Pointwise null-distribution quantiles of the degree, per date."""

    dates: tuple[date, ...]
    lower: np.ndarray
    upper: np.ndarray
    coverage: float
    replications: int
    flagged_counts: np.ndarray  # singular/failed replications excluded per date

    def __post_init__(self):
        both = np.isfinite(self.lower) & np.isfinite(self.upper)
        if np.any(self.lower[both] > self.upper[both]):
            raise ValueError("lower band exceeds upper band")


def replication_seed(master_seed: int, b: int) -> np.random.SeedSequence:
    """Derived seed for replication b; independent of execution order."""
    return np.random.SeedSequence(master_seed, spawn_key=(b,))


def resample_null_panel(
    residual_source: np.ndarray,
    nu: np.ndarray,
    seed,
    n_rows: int | None = None,
    dates: tuple[date, ...] | None = None,
    asset_ids: tuple[str, ...] | None = None,
) -> AlignedPanel:
    """Null returns panel: intercept plus rows resampled from centered residuals.

    ``seed`` may be an integer or a ``SeedSequence``. ``n_rows`` defaults to the
    residual row count; pass the original panel length to give a refit the same
    number of fitted periods.
    """
    resid = np.asarray(residual_source, dtype=float)
    if resid.ndim != 2 or resid.shape[0] < 10:
        raise ConfigError("residual source must be a matrix with at least 10 rows")
    nu = np.asarray(nu, dtype=float)
    centered = resid - resid.mean(axis=0)
    T = resid.shape[0] if n_rows is None else int(n_rows)
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, centered.shape[0], size=T)
    values = nu[None, :] + centered[draws]
    if dates is None:
        dates = tuple(date(2000, 1, 1) + timedelta(days=t) for t in range(T))
    if asset_ids is None:
        asset_ids = tuple(f"asset{i}" for i in range(resid.shape[1]))
    return AlignedPanel(dates=dates, values=values, asset_ids=asset_ids, kind="returns")


# Worker-side state for process pools, set once per worker by the initializer.
_WORK: dict = {}


def _init_worker(payload: dict) -> None:
    _WORK.update(payload)


def _run_replication(b: int, work: dict | None = None) -> tuple[int, np.ndarray, np.ndarray]:
    w = _WORK if work is None else work
    panel = resample_null_panel(
        w["residuals"],
        w["nu"],
        replication_seed(w["master_seed"], b),
        n_rows=w["n_rows"],
        dates=w["dates"],
        asset_ids=w["asset_ids"],
    )
    try:
        fit = fit_tv_var(panel, w["tv_config"])
        path = efficiency_path(fit)
        return b, path.zeta, path.singular
    except NumericalError:
        S = w["n_rows"] - w["tv_config"].q
        return b, np.full(S, np.nan), np.ones(S, dtype=bool)


def _dump_chunks(dump_dir: str, dates, zstar: np.ndarray, chunk_size: int) -> None:
    os.makedirs(dump_dir, exist_ok=True)
    B = zstar.shape[0]
    for start in range(0, B, chunk_size):
        stop = min(start + chunk_size, B)
        name = os.path.join(dump_dir, f"replications_{start + 1:06d}_{stop:06d}.csv")
        with open(name, "w", encoding="utf-8") as fh:
            fh.write("replication,date,zeta\n")
            for b in range(start, stop):
                for s, d in enumerate(dates):
                    z = zstar[b, s]
                    cell = repr(float(z)) if np.isfinite(z) else ""
                    fh.write(f"{b + 1},{d.isoformat()},{cell}\n")


def bootstrap_bands(
    panel: AlignedPanel,
    tv_config: TvVarConfig,
    boot_config: BootstrapConfig,
    estimate: TvVarEstimate | None = None,
    n_jobs: int = 1,
    dump_dir: str | None = None,
    chunk_size: int = 1000,
) -> BandPath:
    """Pointwise confidence bands for the degree under the null.

    Parameters
    ----------
    panel : AlignedPanel
        The observed returns panel; its fit supplies the intercept and the
        residual pool (pass ``estimate`` to reuse an existing fit).
    tv_config : TvVarConfig
        Refit configuration, applied identically to every replication.
    boot_config : BootstrapConfig
        Replication count (at least 100), coverage, master seed.
    n_jobs : int
        Worker processes. Output is identical for any value.
    dump_dir : str, optional
        If set, replication-level degree paths are written there in chunks of
        ``chunk_size`` replications for audit.

    Returns
    -------
    BandPath
        Per-date lower/upper quantiles at (1 +/- coverage)/2, with the count of
        excluded (singular or failed) replications per date.
    """
    B = boot_config.replications
    if B < 100:
        raise ConfigError("band estimation needs at least 100 replications")
    fit = estimate if estimate is not None else fit_tv_var(panel, tv_config)
    S = fit.effective_obs
    payload = {
        "residuals": fit.residuals,
        "nu": fit.nu,
        "master_seed": boot_config.master_seed,
        "n_rows": panel.n_periods,
        "dates": panel.dates,
        "asset_ids": panel.asset_ids,
        "tv_config": tv_config,
    }
    zstar = np.empty((B, S))
    flags = np.empty((B, S), dtype=bool)
    if n_jobs > 1:
        with ProcessPoolExecutor(
            max_workers=n_jobs, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            for b, z, f in pool.map(_run_replication, range(1, B + 1), chunksize=64):
                zstar[b - 1] = z
                flags[b - 1] = f
    else:
        for b in range(1, B + 1):
            _, z, f = _run_replication(b, payload)
            zstar[b - 1] = z
            flags[b - 1] = f

    zmasked = np.where(flags | ~np.isfinite(zstar), np.nan, zstar)
    lo_q = (1.0 - boot_config.coverage) / 2.0
    hi_q = 1.0 - lo_q
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN dates stay NaN
        lower = np.nanquantile(zmasked, lo_q, axis=0)
        upper = np.nanquantile(zmasked, hi_q, axis=0)
    if dump_dir is not None:
        _dump_chunks(dump_dir, fit.dates, zmasked, chunk_size)
    return BandPath(
        dates=fit.dates,
        lower=lower,
        upper=upper,
        coverage=boot_config.coverage,
        replications=B,
        flagged_counts=(~np.isfinite(zmasked)).sum(axis=0),
    )
