"""Static curve figures for sweep results."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

XLABELS = {
    "validate-2q": "state index",
    "curve-iso3": r"$p$",
    "xx-temp": r"$T$",
    "xx-field": r"$B$",
    "additivity": "pair index",
}

STYLES = ["-", "--", ":", "-."]


def _xlabel(command: str) -> str:
    if command.startswith("table-iso"):
        return r"$p$"
    if command.startswith("table-4q"):
        return r"$t$"
    return XLABELS.get(command, "parameter")


def new_figure(width: float = 5.0, height: float | None = None):
    golden = (5 ** 0.5 - 1) / 2
    fig, ax = plt.subplots(figsize=(width, height or width * golden))
    return fig, ax


def plot_sweep(result, ax=None):
    """Draw gme_upper against the swept parameter; one line per series."""
    if ax is None:
        _, ax = new_figure()
    recs = result.records
    if result.series:
        groups = defaultdict(list)
        for r in recs:
            groups[r.extra[result.series]].append(r)
        for i, (key, rs) in enumerate(groups.items()):
            ax.plot([r.param for r in rs], [r.gme_upper for r in rs],
                    STYLES[i % len(STYLES)], color="k", label=f"{result.series} = {key:g}")
    else:
        ax.plot([r.param for r in recs], [r.gme_upper for r in recs], "-", color="k",
                marker="." if len(recs) < 30 else None, label=r"$\tilde E_G$")
    if "two_qubit_eg" in result.extra_columns:
        ax.plot([r.param for r in recs], [r.extra["two_qubit_eg"] for r in recs], "--",
                color="k", label="two qubits")
    elif any(r.reference is not None for r in recs) and result.command != "additivity":
        xs = [r.param for r in recs if r.reference is not None]
        ys = [r.reference for r in recs if r.reference is not None]
        ax.plot(xs, ys, "o", mfc="none", color="0.4", label="reference")
    ax.set_xlabel(_xlabel(result.command))
    ax.set_ylabel(r"$\tilde E_G$")
    ax.set_title(result.command)
    ax.legend(frameon=False)
    return ax


def save_sweep(result, path) -> None:
    """Render the sweep; the format follows the file extension (svg, png, pdf)."""
    fig, ax = new_figure()
    plot_sweep(result, ax)
    fig.tight_layout()
    meta = {"Date": None} if str(path).endswith(".svg") else None
    fig.savefig(path, metadata=meta)
    plt.close(fig)
