"""Long-run response multiplier and the joint efficiency degree.

The multiplier (I - A_1 - ... - A_q)^{-1} equals the identity exactly when all
lag matrices vanish, i.e. when returns are unpredictable. The degree is the
spectral norm of its deviation from the identity: zero in the efficient
market, growing as predictability accumulates, and undefined where the lag
sum approaches a unit root (flagged, not dropped).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date
from typing import IO, Sequence

import numpy as np

from .errors import NumericalError
from .tv_var import TvVarEstimate

__all__ = [
    "CONDITION_LIMIT",
    "EfficiencyPath",
    "cumulative_multiplier",
    "joint_degree",
    "efficiency_path",
]

CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class EfficiencyPath:
    """Per-date degree with optional band values; NaN marks flagged dates."""

    dates: tuple[date, ...]
    zeta: np.ndarray
    singular: np.ndarray  # bool per date
    band_low: np.ndarray | None = None
    band_high: np.ndarray | None = None

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=float)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "singular", np.asarray(self.singular, dtype=bool))
        if len(self.dates) != zeta.shape[0] or zeta.shape[0] != self.singular.shape[0]:
            raise ValueError("dates, zeta, and singular flags must align")
        good = ~self.singular
        if np.any(zeta[good] < 0):
            raise ValueError("degree must be non-negative where defined")
        if self.band_low is not None and self.band_high is not None:
            both = np.isfinite(self.band_low) & np.isfinite(self.band_high)
            if np.any(self.band_low[both] > self.band_high[both]):
                raise ValueError("band_low must not exceed band_high")

    def with_bands(self, band_low: np.ndarray, band_high: np.ndarray) -> "EfficiencyPath":
        return replace(
            self,
            band_low=np.asarray(band_low, dtype=float),
            band_high=np.asarray(band_high, dtype=float),
        )

    def write_csv(self, dest) -> None:
        """Columns: date, zeta, band_low, band_high, singular (0/1); blanks for NaN."""
        own = not hasattr(dest, "write")
        fh: IO[str] = open(dest, "w", encoding="utf-8") if own else dest

        def cell(x) -> str:
            return "" if x is None or not np.isfinite(x) else repr(float(x))

        try:
            fh.write("date,zeta,band_low,band_high,singular\n")
            for i, d in enumerate(self.dates):
                lo = self.band_low[i] if self.band_low is not None else None
                hi = self.band_high[i] if self.band_high is not None else None
                fh.write(
                    f"{d.isoformat()},{cell(self.zeta[i])},{cell(lo)},{cell(hi)},"
                    f"{int(self.singular[i])}\n"
                )
        finally:
            if own:
                fh.close()


def cumulative_multiplier(A: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Invert I minus the summed lag matrices; refuse near-singular systems."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 2:
        A = A[None]
    n = A.shape[-1]
    M = np.eye(n) - A.sum(axis=0)
    if np.linalg.cond(M) > CONDITION_LIMIT:
        raise NumericalError("lag sum too close to a unit root; multiplier undefined")
    return np.linalg.inv(M)


def joint_degree(phi1: np.ndarray, mode: str = "spectral") -> float:
    """Deviation of the multiplier from identity.

    ``"spectral"`` (default) is the largest singular value of phi1 - I, the
    square root of the top eigenvalue of (phi1 - I)'(phi1 - I). The
    ``"elementwise"`` alternative takes the largest entry of that product
    instead; it is kept only for sensitivity analysis.
    """
    phi1 = np.asarray(phi1, dtype=float)
    dev = phi1 - np.eye(phi1.shape[0])
    if mode == "spectral":
        return float(np.linalg.svd(dev, compute_uv=False)[0])
    if mode == "elementwise":
        return float(np.sqrt(np.max(dev.T @ dev)))
    raise ValueError(f"unknown mode {mode!r}")


def efficiency_path(
    estimate: TvVarEstimate,
    mode: str = "spectral",
    condition_limit: float = CONDITION_LIMIT,
) -> EfficiencyPath:
    """Per-date degree along a fitted coefficient path.

    Dates where the lag sum is within ``condition_limit`` of singular are
    flagged and carry NaN instead of a clipped value.
    """
    A_sum = estimate.A_path.sum(axis=1)  # (S, n, n)
    S, n, _ = A_sum.shape
    M = np.eye(n)[None, :, :] - A_sum
    conds = np.linalg.cond(M)
    singular = ~(conds <= condition_limit)  # catches inf/nan too
    zeta = np.full(S, np.nan)
    good = ~singular
    if np.any(good):
        phi = np.linalg.inv(M[good])
        dev = phi - np.eye(n)[None, :, :]
        if mode == "spectral":
            zeta[good] = np.linalg.svd(dev, compute_uv=False)[:, 0]
        elif mode == "elementwise":
            prod = np.einsum("sji,sjk->sik", dev, dev)
            zeta[good] = np.sqrt(prod.reshape(prod.shape[0], -1).max(axis=1))
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return EfficiencyPath(dates=estimate.dates, zeta=zeta, singular=singular)
