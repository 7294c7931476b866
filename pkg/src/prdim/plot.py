"""SVG line plots of sweep and radius-sweep results.

One line per variant, error bars are the standard deviation across
repetitions, and invalid estimates break the line instead of being
interpolated over.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import NoValidRecords


def _series_from_sweep(result):
    """{label: (x, mean, std)} with x the varying sample size."""
    vary_p = len(result.grid_p) >= len(result.grid_q)
    out = {}
    for v in result.variants:
        xs, means, stds = [], [], []
        for P, Q in result.cells():
            vals = result.values(v, P, Q)
            ok = vals[np.isfinite(vals)]
            xs.append(P if vary_p else Q)
            if ok.size:
                means.append(ok.mean())
                stds.append(ok.std(ddof=1) if ok.size > 1 else 0.0)
            else:
                means.append(np.nan)
                stds.append(np.nan)
        out[v.label] = (np.array(xs, float), np.array(means), np.array(stds))
    xlabel = "P (stimuli)" if vary_p else "Q (units)"
    return out, xlabel, True


def _series_from_local(results):
    by_variant = {}
    for res in results:
        by_variant.setdefault(res.variant.label, []).append(res)
    out = {}
    for label, group in by_variant.items():
        group = sorted(group, key=lambda r: r.radius)
        x = np.array([r.radius for r in group])
        mean = np.array([r.mean_gamma for r in group])
        std = np.array(
            [
                np.std([e.value for _, _, e in r.per_center], ddof=1) if r.n_valid > 1 else 0.0
                for r in group
            ]
        )
        out[label] = (x, mean, std)
    return out, "radius", False


def emit_plot(result, path, title: str = "") -> None:
    """Write an SVG of a SweepResult or a list of LocalDimResult.

    Each variant is drawn as an SVG group with id ``series-<label>``.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if isinstance(result, Sequence):
        series, xlabel, logx = _series_from_local(result)
    else:
        series, xlabel, logx = _series_from_sweep(result)
    if not any(np.isfinite(m).any() for _, m, _ in series.values()):
        raise NoValidRecords("nothing valid to plot")

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, mean, std) in series.items():
        if not np.isfinite(mean).any():
            continue
        # NaN entries leave gaps in the line
        cont = ax.errorbar(x, mean, yerr=std, marker="o", ms=4, capsize=3, label=label)
        cont.lines[0].set_gid(f"series-{label}")
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("dimensionality")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
