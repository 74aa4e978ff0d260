"""Static PNG figures for run reports and analysis commands.

Figures are drawn on the Agg canvas without pyplot's global state, with a
fixed style and no timestamp metadata, so identical inputs give identical
files.
"""

import math
from contextlib import contextmanager

import matplotlib
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
import numpy as np

COLUMN_WIDTH_PT = 510.0
INCHES_PER_PT = 1.0 / 72.27
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DPI = 120

STYLE = {
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
    "svg.hashsalt": "gasforecast",
    "path.simplify": False,
}


def figsize(scale=1.0, ratio=GOLDEN):
    w = COLUMN_WIDTH_PT * INCHES_PER_PT * scale
    return (w, w * ratio)


@contextmanager
def style():
    with matplotlib.rc_context(STYLE):
        yield


def new_figure(nrows=1, ncols=1, scale=1.0, ratio=GOLDEN, **kw):
    fig = Figure(figsize=figsize(scale, ratio), dpi=DPI)
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, ncols, squeeze=False, **kw)
    return fig, axes


def save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=DPI, metadata={"Software": None})
    return path


def forecast_vs_actual(times, actual, predicted, lookaheads, path, step_minutes=5.0, title=""):
    """One panel per selected lookahead: predicted against realized target."""
    with style():
        fig, axes = new_figure(len(lookaheads), 1, ratio=0.35 * len(lookaheads), sharex=True)
        for ax, h in zip(axes[:, 0], lookaheads):
            ax.plot(times[:, h - 1], actual[:, h - 1], color="0.3", label="actual")
            ax.plot(times[:, h - 1], predicted[:, h - 1], color="C3", label="forecast")
            ax.set_ylabel("gwei")
            ax.set_title(f"{title} lookahead {h * step_minutes:g} min".strip())
        axes[0, 0].legend(loc="upper right")
        axes[-1, 0].set_xlabel("target time [s]")
        return save(fig, path)


def metrics_by_lookahead(report, path):
    """R^2 and RMSE against lookahead length in minutes."""
    minutes = np.arange(1, report.horizon + 1) * report.step_minutes
    r2 = [np.nan if r.r2 is None else r.r2 for r in report.per_lookahead]
    rmse = [r.rmse for r in report.per_lookahead]
    with style():
        fig, axes = new_figure(1, 2, ratio=0.4)
        axes[0, 0].plot(minutes, r2, "o-", color="C0")
        axes[0, 0].set_ylabel("R^2")
        axes[0, 1].plot(minutes, rmse, "o-", color="C1")
        axes[0, 1].set_ylabel("RMSE [gwei]")
        for ax in axes[0]:
            ax.set_xlabel("lookahead [min]")
        return save(fig, path)


def loss_curves(reports, path):
    with style():
        fig, axes = new_figure(ratio=0.5)
        ax = axes[0, 0]
        for k, rep in enumerate(reports):
            epochs = np.arange(1, len(rep.val_loss) + 1)
            ax.plot(epochs, rep.train_loss, color=f"C{k % 10}", ls="--", lw=0.8)
            ax.plot(epochs, rep.val_loss, color=f"C{k % 10}", label=f"model {k}")
            ax.plot(rep.best_epoch + 1, rep.val_loss[rep.best_epoch], "o", color=f"C{k % 10}", ms=3)
        ax.set_xlabel("epoch")
        ax.set_ylabel("MSE (normalized)")
        if len(reports) <= 10:
            ax.legend(ncol=2)
        return save(fig, path)


def coherence_map(cmap, path, names=("x", "y"), arrows=24):
    """Coherence over time and period with phase arrows and the cone of influence."""
    with style():
        fig, axes = new_figure(ratio=0.55)
        ax = axes[0, 0]
        mesh = ax.pcolormesh(cmap.times, cmap.scales, cmap.coherence.T, vmin=0, vmax=1,
                             cmap="jet", shading="auto")
        fig.colorbar(mesh, ax=ax, label="R^2")
        ax.fill_between(cmap.times, cmap.coi, cmap.scales[-1], color="white", alpha=0.5, lw=0)
        ti = np.linspace(0, len(cmap.times) - 1, arrows).astype(int)
        si = np.linspace(0, len(cmap.scales) - 1, max(2, arrows // 3)).astype(int)
        T, S = np.meshgrid(ti, si, indexing="ij")
        ph = cmap.phase[T, S]
        ax.quiver(cmap.times[T], cmap.scales[S], np.cos(ph), np.sin(ph), pivot="mid",
                  scale=40, width=0.002)
        ax.set_yscale("log", base=2)
        ax.set_ylim(cmap.scales[0], cmap.scales[-1])
        ax.set_xlabel("time")
        ax.set_ylabel("scale")
        ax.set_title(f"{names[0]} vs {names[1]}")
        return save(fig, path)


def denoise_comparison(raw, denoised, path, title=""):
    with style():
        fig, axes = new_figure(ratio=0.45)
        ax = axes[0, 0]
        ax.plot(raw, color="0.6", lw=0.6, label="raw")
        ax.plot(denoised, color="C3", label="denoised")
        ax.set_title(title)
        ax.legend()
        return save(fig, path)


def matrix_profile(series, profile, path):
    """Series on top, profile below, with motif and discord marked."""
    with style():
        fig, axes = new_figure(2, 1, ratio=0.7, sharex=True)
        axes[0, 0].plot(series, color="0.3", lw=0.6)
        axes[1, 0].plot(profile.values, color="C0", lw=0.8)
        for pos, colour in ((profile.motif(), "C2"), (profile.discord(), "C3")):
            axes[0, 0].axvspan(pos, pos + profile.window, color=colour, alpha=0.3)
            axes[1, 0].axvline(pos, color=colour, ls="--")
        axes[1, 0].set_ylabel("distance")
        axes[1, 0].set_xlabel("index")
        return save(fig, path)
