"""Per-period VAR coefficients as one penalized least-squares problem.

The model lets every lag matrix drift from period to period while the
intercept stays fixed. Estimation minimizes

    sum_t ||x_t - nu - sum_l A_{l,t} x_{t-l}||^2
        + lam * sum_t ||vec(A_{.,t}) - vec(A_{.,t-1})||^2

over (nu, {A_{l,t}}), where lam is the ratio of the observation noise variance
to the coefficient-increment variance. There is no penalty row ahead of the
first period (diffuse start), so the earliest coefficients are tied down only
by data and the forward smoothness rows.

With a scalar observation covariance the problem separates by equation: each
equation shares the same banded normal-equation matrix (block tridiagonal in
time, bandwidth n*q) plus a one-column border for its intercept. The banded
solver factors that matrix once with a banded Cholesky and eliminates the
border by a Schur complement, giving O(T) solve time. A dense solver that
materializes the full stacked design and calls lstsq is kept as a reference
oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import IO, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import ConfigError, DataError, NumericalError
from .market_data import AlignedPanel

__all__ = [
    "TvVarConfig",
    "TvVarEstimate",
    "StackedSystem",
    "SmoothingPoint",
    "build_stacked_system",
    "fit_tv_var",
    "fit_smooth_coefficients",
    "smoothing_profile",
    "penalized_objective",
    "export_coefficient_paths",
]

_RIDGE_JITTER = 1e-10
_LAMBDA_FLOOR, _LAMBDA_CAP = 1e-8, 1e12

SOLVER_BANDED = "banded-cholesky"
SOLVER_DENSE = "dense-reference"


@dataclass(frozen=True)
class TvVarConfig:
    """Estimation settings.

    ``lam`` is the smoothing ratio (observation variance over coefficient
    increment variance); larger values give smoother paths, and the limit
    reproduces the constant-coefficient OLS fit. ``lambda_mode="two-pass"``
    re-estimates the ratio from first-pass residuals and increments. The
    intercept is always held fixed over time.
    """

    q: int = 1
    lam: float = 1.0
    lambda_mode: str = "fixed"  # "fixed" or "two-pass"
    intercept_mode: str = "fixed"
    solver: str = SOLVER_BANDED

    def __post_init__(self):
        if self.q < 1:
            raise ConfigError("q must be at least 1")
        if not self.lam > 0:
            raise ConfigError("lam must be positive")
        if self.lambda_mode not in ("fixed", "two-pass"):
            raise ConfigError(f"unknown lambda_mode {self.lambda_mode!r}")
        if self.intercept_mode != "fixed":
            raise ConfigError("only the fixed-over-time intercept is supported")
        if self.solver not in (SOLVER_BANDED, SOLVER_DENSE):
            raise ConfigError(f"unknown solver {self.solver!r}")


@dataclass(frozen=True, eq=False)
class TvVarEstimate:
    """Fitted per-period coefficients.

    ``A_path[s, l-1]`` is the lag-l matrix for the (q+1+s)-th panel row, whose
    date is ``dates[s]``. ``metadata`` records the solver, the effective
    smoothing ratio actually used, and any ridge jitter applied to a
    degenerate system.
    """

    dates: tuple[date, ...]
    asset_ids: tuple[str, ...]
    nu: np.ndarray  # (n,)
    A_path: np.ndarray  # (S, q, n, n)
    residuals: np.ndarray  # (S, n)
    config: TvVarConfig
    effective_obs: int
    lambda_effective: float
    metadata: dict

    @property
    def n_assets(self) -> int:
        return len(self.asset_ids)


@dataclass(frozen=True, eq=False)
class StackedSystem:
    """Sparse design of the stacked observation-plus-smoothness regression.

    Column layout: the n intercepts first, then per period s, per equation i,
    the n*q lag coefficients (lag-major, then source asset). Observation rows
    come first (period-major, equation-minor), then the scaled smoothness rows.
    """

    design: sp.csr_matrix
    rhs: np.ndarray
    n_obs_rows: int
    n_smooth_rows: int
    n_unknowns: int
    n_intercepts: int
    lam: float
    n: int
    q: int
    periods: int


@dataclass(frozen=True)
class SmoothingPoint:
    """Fit diagnostics for one smoothing value."""

    lam: float
    rss: float
    roughness: float
    edof: float


def _lagged_design(values: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Targets (S, n) and shared lag regressors (S, n*q) for rows q..T-1."""
    T = values.shape[0]
    Y = values[q:]
    Z = np.concatenate([values[q - l : T - l] for l in range(1, q + 1)], axis=1)
    return Y, Z


def _assemble_banded(Z: np.ndarray, lam: float, jitter: float) -> np.ndarray:
    """Upper-form banded normal equations for one equation's coefficient path."""
    S, m = Z.shape
    N = S * m
    G = Z[:, :, None] * Z[:, None, :]  # per-period outer products (S, m, m)
    ab = np.zeros((m + 1, N))
    pen = np.full(S, 2.0 * lam)
    pen[0] -= lam
    pen[-1] -= lam
    ab[m] = (G[:, np.arange(m), np.arange(m)] + pen[:, None] + jitter).ravel()
    for d in range(1, m):
        block = np.zeros((S, m))
        block[:, d:] = np.diagonal(G, offset=d, axis1=1, axis2=2)
        ab[m - d] = block.ravel()
    if N > m:
        ab[0, m:] = -lam  # coupling between consecutive periods, same coefficient
    return ab


def _factor_banded(ab: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    """Banded Cholesky with a one-shot ridge fallback for degenerate data."""
    try:
        return cholesky_banded(ab, lower=False), 0.0
    except np.linalg.LinAlgError:
        pass
    bumped = ab.copy()
    bumped[-1] += _RIDGE_JITTER
    try:
        return cholesky_banded(bumped, lower=False), _RIDGE_JITTER
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "normal equations numerically singular "
            f"(smallest diagonal {ab[-1].min():.3e}); try a larger lam than {lam:g}"
        ) from exc


def _solve_equations(Y: np.ndarray, Z: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Solve all equations against one shared factorization.

    Returns (nu (n,), paths (S, n, m), jitter_used). The intercept border is
    eliminated by a Schur complement: with D the banded coefficient block,
    b the border column and c its diagonal, solving D [u V] = [b R] gives
    nu_i = (sum_t y_ti - b'V_i) / (c - b'u) and the path V_i - nu_i * u.
    """
    S, n = Y.shape
    m = Z.shape[1]
    ab = _assemble_banded(Z, lam, 0.0)
    cb, jitter = _factor_banded(ab, lam)
    N = S * m
    B = np.empty((N, n + 1))
    border = Z.ravel()
    B[:, 0] = border
    B[:, 1:] = (Z[:, :, None] * Y[:, None, :]).reshape(N, n)
    sol = cho_solve_banded((cb, False), B)
    u = sol[:, 0]
    schur = S - border @ u
    # the intercept is unidentified when every period can absorb it into its
    # own coefficients (happens once per-period unknowns reach the period count)
    if not schur > 1e-10 * S:
        raise NumericalError(
            f"intercept pivot {schur:.3e} is numerically singular; try a larger lam"
        )
    nu = np.empty(n)
    paths = np.empty((S, n, m))
    for i in range(n):
        v = sol[:, 1 + i]
        nu[i] = (Y[:, i].sum() - border @ v) / schur
        paths[:, i, :] = (v - nu[i] * u).reshape(S, m)
    return nu, paths, jitter


def fit_smooth_coefficients(
    y: np.ndarray, Z: np.ndarray, lam: float, intercept: bool = True
) -> tuple[float, np.ndarray]:
    """Penalized coefficient path for a single equation.

    Minimizes sum_s (y_s - c - Z[s] @ a_s)^2 + lam * sum_s ||a_s - a_{s-1}||^2
    and returns (c, a) with a of shape (S, m). With ``intercept=False`` the
    constant c is fixed at zero. The observation sequence is the unit of time:
    reversing (y, Z) jointly yields the reversed path.
    """
    y = np.asarray(y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if not lam > 0:
        raise ConfigError("lam must be positive")
    if intercept:
        nu, paths, _ = _solve_equations(y[:, None], Z, lam)
        return float(nu[0]), paths[:, 0, :]
    S, m = Z.shape
    ab = _assemble_banded(Z, lam, 0.0)
    cb, _ = _factor_banded(ab, lam)
    r = (Z * y[:, None]).ravel()
    a = cho_solve_banded((cb, False), r)
    return 0.0, a.reshape(S, m)


def build_stacked_system(panel: AlignedPanel, config: TvVarConfig) -> StackedSystem:
    """Materialize the full sparse design: observation rows plus sqrt(lam)-scaled
    smoothness rows, over the intercepts and every per-period coefficient."""
    _check_panel(panel, config.q)
    values = panel.values
    T, n = values.shape
    q = config.q
    Y, Z = _lagged_design(values, q)
    S = Y.shape[0]
    m = n * q
    n_obs = S * n
    n_smooth = m * n * (S - 1)
    ncols = n + S * n * m
    sq = math.sqrt(config.lam)

    # observation rows: row (s, i) has 1 in the intercept column i and Z[s]
    # in that equation's coefficient block
    obs_rows = np.arange(n_obs)
    s_idx = obs_rows // n
    i_idx = obs_rows % n
    icols = i_idx
    base = n + s_idx * n * m + i_idx * m
    ccols = base[:, None] + np.arange(m)[None, :]
    rows = np.concatenate([obs_rows, np.repeat(obs_rows, m)])
    cols = np.concatenate([icols, ccols.ravel()])
    vals = np.concatenate([np.ones(n_obs), Z[s_idx].ravel()])

    # smoothness rows: +sqrt(lam) on period s, -sqrt(lam) on period s-1
    if S > 1:
        k = n * m
        sm_rows = n_obs + np.arange(n_smooth)
        s_sm = np.repeat(np.arange(1, S), k)
        k_sm = np.tile(np.arange(k), S - 1)
        cur = n + s_sm * k + k_sm
        prev = cur - k
        rows = np.concatenate([rows, sm_rows, sm_rows])
        cols = np.concatenate([cols, cur, prev])
        vals = np.concatenate([vals, np.full(n_smooth, sq), np.full(n_smooth, -sq)])

    design = sp.csr_matrix((vals, (rows, cols)), shape=(n_obs + n_smooth, ncols))
    rhs = np.concatenate([Y.ravel(), np.zeros(n_smooth)])
    return StackedSystem(
        design=design,
        rhs=rhs,
        n_obs_rows=n_obs,
        n_smooth_rows=n_smooth,
        n_unknowns=ncols,
        n_intercepts=n,
        lam=config.lam,
        n=n,
        q=q,
        periods=S,
    )


def _check_panel(panel: AlignedPanel, q: int) -> None:
    if panel.kind != "returns":
        raise DataError("time-varying fit expects a returns panel")
    if panel.n_periods - q < 3:
        raise DataError(f"need at least q + 3 = {q + 3} rows, got {panel.n_periods}")


def _solve_dense(panel: AlignedPanel, config: TvVarConfig, lam: float) -> tuple[np.ndarray, np.ndarray]:
    cfg = TvVarConfig(
        q=config.q, lam=lam, lambda_mode="fixed",
        intercept_mode=config.intercept_mode, solver=config.solver,
    )
    system = build_stacked_system(panel, cfg)
    cells = system.design.shape[0] * system.design.shape[1]
    if cells > 50_000_000:  # the reference solver materializes the full design
        raise ConfigError(
            "dense-reference solver is an oracle for small instances; "
            "use banded-cholesky at this size"
        )
    sol, _, _, _ = np.linalg.lstsq(system.design.toarray(), system.rhs, rcond=None)
    n, q, S = system.n, system.q, system.periods
    nu = sol[: n]
    paths = sol[n:].reshape(S, n, n * q)
    return nu, paths


def _paths_to_A(paths: np.ndarray, n: int, q: int) -> np.ndarray:
    """(S, n, n*q) equation-major coefficients to (S, q, n, n) lag matrices."""
    S = paths.shape[0]
    return paths.reshape(S, n, q, n).transpose(0, 2, 1, 3).copy()


def _A_to_paths(A_path: np.ndarray) -> np.ndarray:
    S, q, n, _ = A_path.shape
    return A_path.transpose(0, 2, 1, 3).reshape(S, n, q * n)


def fit_tv_var(panel: AlignedPanel, config: TvVarConfig | None = None) -> TvVarEstimate:
    """Estimate the per-period coefficient paths.

    Parameters
    ----------
    panel : AlignedPanel
        Returns panel with at least q + 3 rows.
    config : TvVarConfig
        Lag order, smoothing ratio, solver choice.

    Returns
    -------
    TvVarEstimate
        Paths for the T - q fitted periods, the fixed intercept, and residuals
        that reproduce x_t - nu - sum_l A_{l,t} x_{t-l} exactly.
    """
    config = config or TvVarConfig()
    _check_panel(panel, config.q)
    values = panel.values
    n = values.shape[1]
    q = config.q
    Y, Z = _lagged_design(values, q)

    def solve(lam: float) -> tuple[np.ndarray, np.ndarray, float]:
        if config.solver == SOLVER_BANDED:
            return _solve_equations(Y, Z, lam)
        nu, paths = _solve_dense(panel, config, lam)
        return nu, paths, 0.0

    lam_eff = config.lam
    nu, paths, jitter = solve(lam_eff)
    if config.lambda_mode == "two-pass":
        resid = Y - nu[None, :] - np.einsum("sic,sc->si", paths, Z)
        sigma_e2 = float((resid**2).mean())
        increments = np.diff(paths, axis=0)
        sigma_v2 = float((increments**2).mean()) if increments.size else 0.0
        if sigma_v2 > 0 and sigma_e2 > 0:
            lam_eff = min(max(sigma_e2 / sigma_v2, _LAMBDA_FLOOR), _LAMBDA_CAP)
        else:
            lam_eff = _LAMBDA_CAP
        nu, paths, jitter = solve(lam_eff)

    resid = Y - nu[None, :] - np.einsum("sic,sc->si", paths, Z)
    return TvVarEstimate(
        dates=panel.dates[q:],
        asset_ids=panel.asset_ids,
        nu=nu,
        A_path=_paths_to_A(paths, n, q),
        residuals=resid,
        config=config,
        effective_obs=Y.shape[0],
        lambda_effective=lam_eff,
        metadata={
            "solver": config.solver,
            "lambda_mode": config.lambda_mode,
            "lambda_effective": lam_eff,
            "ridge_jitter": jitter,
        },
    )


def penalized_objective(
    panel: AlignedPanel, q: int, lam: float, nu: np.ndarray, A_path: np.ndarray
) -> float:
    """Value of the fit-plus-smoothness objective at the given parameters."""
    Y, Z = _lagged_design(panel.values, q)
    paths = _A_to_paths(np.asarray(A_path, dtype=float))
    resid = Y - np.asarray(nu, dtype=float)[None, :] - np.einsum("sic,sc->si", paths, Z)
    rough = float((np.diff(paths, axis=0) ** 2).sum())
    return float((resid**2).sum()) + lam * rough


def _effective_dof(Z: np.ndarray, lam: float, chunk: int = 256) -> float:
    """Trace of the hat matrix for one equation (shared across equations)."""
    S, m = Z.shape
    N = S * m
    ab = _assemble_banded(Z, lam, 0.0)
    cb, _ = _factor_banded(ab, lam)
    border = Z.ravel()
    u = cho_solve_banded((cb, False), border)
    schur = S - border @ u
    total = 0.0
    for start in range(0, S, chunk):
        idx = np.arange(start, min(start + chunk, S))
        B = np.zeros((N, len(idx)))
        for j, s in enumerate(idx):
            B[s * m : (s + 1) * m, j] = Z[s]
        K = cho_solve_banded((cb, False), B)
        bk = border @ K
        mu = (1.0 - bk) / schur
        for j, s in enumerate(idx):
            blk = slice(s * m, (s + 1) * m)
            total += float(Z[s] @ (K[blk, j] - mu[j] * u[blk])) + mu[j]
    return total


def smoothing_profile(
    panel: AlignedPanel, config: TvVarConfig, lambda_grid: Sequence[float]
) -> list[SmoothingPoint]:
    """Residual sum, path roughness, and effective degrees of freedom per lam."""
    grid = [float(l) for l in lambda_grid]
    if not grid:
        raise ConfigError("lambda grid must be nonempty")
    if any(not l > 0 for l in grid):
        raise ConfigError("lambda grid values must be positive")
    _check_panel(panel, config.q)
    Y, Z = _lagged_design(panel.values, config.q)
    n = Y.shape[1]
    points = []
    for lam in grid:
        nu, paths, _ = _solve_equations(Y, Z, lam)
        resid = Y - nu[None, :] - np.einsum("sic,sc->si", paths, Z)
        rough = float((np.diff(paths, axis=0) ** 2).sum())
        points.append(
            SmoothingPoint(
                lam=lam,
                rss=float((resid**2).sum()),
                roughness=rough,
                edof=n * _effective_dof(Z, lam),
            )
        )
    return points


def export_coefficient_paths(estimate: TvVarEstimate, dest) -> None:
    """Write the path in long form: date, lag, row, col, value."""
    own = not hasattr(dest, "write")
    fh: IO[str] = open(dest, "w", encoding="utf-8") if own else dest
    try:
        fh.write("date,lag,row,col,value\n")
        S, q, n, _ = estimate.A_path.shape
        for s in range(S):
            d = estimate.dates[s].isoformat()
            for l in range(q):
                for i in range(n):
                    for j in range(n):
                        fh.write(f"{d},{l + 1},{i},{j},{float(estimate.A_path[s, l, i, j])!r}\n")
    finally:
        if own:
            fh.close()
