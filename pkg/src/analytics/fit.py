"""Characteristic depth of an exponential success decay.

The success rate is modelled as `P(L) = exp(-L / L0)`, so `ln P` is a line
through the origin. A first least-squares fit gives residuals, whose inverse
squares weight the second fit.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .bins import BinSeries

log = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-6


class InsufficientData(ValueError):
    pass


class NonDecaying(ValueError):
    pass


@dataclass(frozen=True)
class FitResult:
    l0_ols: float
    l0_wls: float
    slope_ols: float
    slope: float
    r_squared: float
    bins_used: int
    bins_dropped_zero: int
    intercept: float | None = None

    def summary(self) -> str:
        lines = [
            f"L0 (WLS): {self.l0_wls:.4f}",
            f"L0 (OLS): {self.l0_ols:.4f}",
            f"slope: {self.slope:.6g}",
            f"R^2: {self.r_squared:.4f}",
            f"bins used: {self.bins_used}",
            f"bins dropped (zero success): {self.bins_dropped_zero}",
        ]
        if self.intercept is not None:
            lines.append(f"intercept: {self.intercept:.6g}")
        return "\n".join(lines)


def _least_squares(
    x: np.ndarray, y: np.ndarray, weights: np.ndarray, intercept: bool
) -> tuple[float, float]:
    """Weighted fit of `y = slope * x (+ b)`, returns `(slope, b)`."""
    if not intercept:
        slope = np.sum(weights * x * y) / np.sum(weights * x * x)
        return float(slope), 0.0

    design = np.stack([x, np.ones_like(x)], axis=1)
    root = np.sqrt(weights)
    (slope, b), *_ = np.linalg.lstsq(design * root[:, None], y * root, rcond=None)
    return float(slope), float(b)


def fit_l0(bins: list[BinSeries], intercept: bool = False) -> FitResult:
    """Fit the decay on the pooled success rates of the bins.

    The mean depth of each bin is used as its abscissa.
    """
    return fit_decay([b.mean_key for b in bins], [b.p for b in bins], intercept)


def fit_decay(
    depths: list[float], rates: list[float], intercept: bool = False
) -> FitResult:
    """Fit the decay on the points with a nonzero success rate.

    ---
    Args:
        depths: Depth of every point.
        rates: Success rate of every point.
        intercept: Also fit an intercept, for diagnostics.

    ---
    Returns:
        Both fits, the second being weighted by the inverse squared
        residuals of the first.

    ---
    Raises:
        InsufficientData: Less than two bins have a nonzero success rate.
        NonDecaying: A fitted slope is not negative.
    """
    usable = [(depth, rate) for depth, rate in zip(depths, rates) if rate > 0]
    dropped = len(rates) - len(usable)
    if len(usable) < 2:
        raise InsufficientData(
            f"{len(usable)} bin(s) with a nonzero success rate, need 2"
        )

    x = np.array([depth for depth, _ in usable], dtype=np.float64)
    y = np.log([rate for _, rate in usable])

    slope_ols, b_ols = _least_squares(x, y, np.ones_like(x), intercept)
    residuals = y - (slope_ols * x + b_ols)
    weights = 1 / np.maximum(residuals**2, RESIDUAL_FLOOR**2)
    slope_wls, b_wls = _least_squares(x, y, weights, intercept)

    for name, slope in [("OLS", slope_ols), ("WLS", slope_wls)]:
        if not slope < 0:
            raise NonDecaying(f"{name} slope is {slope:.6g}, success does not decay")

    predicted = slope_wls * x + b_wls
    total = np.sum((y - y.mean()) ** 2)
    unexplained = np.sum((y - predicted) ** 2)
    if total > 0:
        r_squared = float(np.clip(1 - unexplained / total, 0, 1))
    else:
        r_squared = 1.0 if unexplained == 0 else 0.0

    if dropped:
        log.info(f"Dropped {dropped} bin(s) without any success")

    return FitResult(
        l0_ols=-1 / slope_ols,
        l0_wls=-1 / slope_wls,
        slope_ols=slope_ols,
        slope=slope_wls,
        r_squared=r_squared,
        bins_used=len(usable),
        bins_dropped_zero=dropped,
        intercept=b_wls if intercept else None,
    )
