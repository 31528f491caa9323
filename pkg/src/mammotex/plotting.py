"""Bar charts of regression values and epoch counts per descriptor group."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .descriptors import GROUPS  # noqa: E402

ARCH_COLORS = {"MLP-1": "#4c72b0", "MLP-2": "#dd8452"}
# keep PNG bytes stable across runs
_PNG_METADATA = {"Software": None}


def _grouped_values(report, attr):
    out = {}
    for arch in ARCH_COLORS:
        vals = []
        for g in GROUPS:
            o = report.result(g.id, arch).outcome
            vals.append(np.nan if o is None else float(getattr(o, attr)))
        out[arch] = np.array(vals)
    return out


def _bars(ax, values, ylabel):
    x = np.arange(1, len(GROUPS) + 1)
    width = 0.38
    for k, (arch, vals) in enumerate(values.items()):
        ax.bar(x + (k - 0.5) * width, vals, width, label=arch, color=ARCH_COLORS[arch])
    ax.set_xticks(x)
    ax.set_xlabel("texture descriptor group")
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)


def plot_regression(report, path):
    fig, ax = plt.subplots(figsize=(7, 3.6))
    values = _grouped_values(report, "regression_train")
    _bars(ax, values, "regression value R (train)")
    ax.axhline(1.0 - report.r_tolerance, color="0.3", lw=0.8, ls="--")
    low = np.nanmin(np.concatenate(list(values.values())), initial=0.0)
    ax.set_ylim(min(0.0, low) if np.isfinite(low) else 0.0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def plot_epochs(report, path):
    fig, ax = plt.subplots(figsize=(7, 3.6))
    _bars(ax, _grouped_values(report, "epochs_used"), "epochs")
    ax.axhline(report.epoch_cap, color="0.3", lw=0.8, ls="--")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def render_report_figures(report, out_dir):
    """Write ``regression.png`` and ``epochs.png`` into ``out_dir``; returns their paths."""
    out = Path(out_dir)
    paths = [out / "regression.png", out / "epochs.png"]
    plot_regression(report, paths[0])
    plot_epochs(report, paths[1])
    return paths
