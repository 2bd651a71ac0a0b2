from pathlib import Path

import matplotlib

matplotlib.use("svg")

import matplotlib.pyplot as plt
import numpy as np

from .analytics import BinSeries, FitResult

# Fixed ids in the SVG, so that the same report always gives the same file.
matplotlib.rcParams["svg.hashsalt"] = "rewind-maze"


def draw_success_decay(
    bins: list[BinSeries],
    fit: FitResult | None,
    path: Path,
    title: str = "Success rate by logical depth",
):
    """Plot the success rate against the depth, linear on top and log-y below.

    ---
    Args:
        bins: The aggregated bins.
        fit: The fitted decay, drawn over the points. Skipped if None.
        path: Where to save the SVG.
        title: Title of the figure.
    """
    depths = np.array([b.mean_key for b in bins])
    rates = np.array([b.p for b in bins])

    figure, (linear_ax, log_ax) = plt.subplots(2, 1, figsize=(6, 7), sharex=True)
    figure.suptitle(title)

    for ax in (linear_ax, log_ax):
        ax.plot(depths, rates, "o", markersize=4, label="Pass@1")
        if fit is not None and len(depths) > 0:
            grid = np.linspace(0, depths.max(), 200)
            ax.plot(
                grid,
                np.exp(grid * fit.slope + (fit.intercept or 0.0)),
                "-",
                label=f"exp(-L / {fit.l0_wls:.1f})",
            )
        ax.grid(alpha=0.3)
        ax.set_ylabel("success rate")

    positive = rates[rates > 0]
    log_ax.set_yscale("log")
    if len(positive) > 0:
        log_ax.set_ylim(bottom=positive.min() / 2, top=1.5)
    log_ax.set_xlabel("logical depth L")
    linear_ax.set_ylim(-0.02, 1.02)
    linear_ax.legend()

    figure.tight_layout()
    figure.savefig(path, format="svg", metadata={"Date": None})
    plt.close(figure)
