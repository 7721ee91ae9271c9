"""Report figures: learning curves rendered next to the delimited output.

Used by the CLI report path only; the harness core never imports matplotlib.
"""

from pathlib import Path

from matplotlib.figure import Figure


def _curve_axes(title: str, ylabel: str):
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.subplots()
    ax.set_title(title)
    ax.set_xlabel("budget spent")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _label(summary: dict) -> str:
    return (f"{summary['strategy']} "
            f"(AUBC {summary['aubc_mean']:.3f} ± {summary['aubc_sd']:.3f})")


def plot_accuracy_curves(summaries, out_path) -> Path:
    """Mean test accuracy vs budget, one line per run summary."""
    fig, ax = _curve_axes("Test accuracy vs labeling budget", "mean test accuracy")
    for summary in summaries:
        ax.plot(summary["round_budget"], summary["round_accuracy_mean"],
                marker=".", label=_label(summary))
    ax.legend(fontsize=8)
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    return out_path


def plot_ood_curves(summaries, out_path) -> Path:
    """Mean cumulative OOD queries vs budget, one line per run summary."""
    fig, ax = _curve_axes("OOD selections vs labeling budget",
                          "mean cumulative OOD selected")
    for summary in summaries:
        ax.plot(summary["round_budget"], summary["round_ood_mean"],
                marker=".", label=_label(summary))
    ax.legend(fontsize=8)
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    return out_path
