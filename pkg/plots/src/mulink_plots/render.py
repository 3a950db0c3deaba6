"""Deterministic rendering of figure specs to SVG and PNG.

Determinism contract: a fixed rc parameter set (user config never leaks in),
a fixed SVG hash salt, and no timestamps in image metadata.  Rendering the
same CSV twice therefore yields byte-identical files, which is asserted by
the test suite and is what makes shipped figures reviewable in version
control.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg", force=True)

import matplotlib.pyplot as plt
import numpy as np

from .io import InputError, Record, load_rows
from .spec import FAMILY_LABELS, SIDE_LABELS, FigureSpec

_RC = {
    "figure.dpi": 100.0,
    "savefig.dpi": 150.0,
    "font.family": "DejaVu Sans",
    "font.size": 9.0,
    "axes.grid": True,
    "axes.axisbelow": True,
    "grid.alpha": 0.35,
    "grid.linewidth": 0.5,
    "legend.fontsize": 8.0,
    "legend.framealpha": 0.9,
    "lines.linewidth": 1.4,
    "lines.markersize": 4.0,
    # text stays text in the SVG: greppable labels, no font path baking
    "svg.fonttype": "none",
    "svg.hashsalt": "mulink-plots",
}

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2")
_MARKERS = ("o", "s", "d", "^", "v", "P", "X", "*", ">", "<")

_STRAT_ORDER = {"BD": 0, "ZFC": 1, "MET": 2, "SU": 3}
_STRAT_COLOR = {"BD": "#1f77b4", "ZFC": "#d62728",
                "MET": "#2ca02c", "SU": "#9467bd"}
_STRAT_MARKER = {"BD": "o", "ZFC": "s", "MET": "d", "SU": "^"}
_RHO_DASHES = ((), (5, 2), (2, 2), (1, 1))


def render(spec: FigureSpec) -> tuple[Path, Path]:
    """Render one figure; returns the written (svg_path, png_path).

    Loading happens before any filesystem writes, so a bad or empty CSV
    leaves no partial output behind.
    """
    rows: list[Record] = []
    for path in spec.inputs:
        rows.extend(load_rows(path))
    with plt.rc_context(_RC):
        if spec.style == "bars":
            fig = _build_bars(spec, rows)
        elif spec.style == "lines":
            fig = _build_lines(spec, rows)
        else:
            raise InputError(f"{spec.preset}: unknown style {spec.style!r}")
        try:
            spec.output.parent.mkdir(parents=True, exist_ok=True)
            svg = spec.output.with_suffix(".svg")
            png = spec.output.with_suffix(".png")
            fig.savefig(svg, format="svg", metadata={"Date": None})
            fig.savefig(png, format="png",
                        metadata={"Software": "mulink-plots"})
        finally:
            plt.close(fig)
    return svg, png


# ------------------------------------------------------------------ line plots


def _series_groups(spec: FigureSpec, rows: list[Record]):
    """Ordered (key, label, points) groups per the spec's series rule."""
    if spec.series == "side":
        order = {"rx": 0, "tx": 1, "both": 2}
        keyf = lambda r: str(r.aux.get("side", ""))
        sortf = lambda k: (order.get(k, 9), k)
        labelf = lambda k: SIDE_LABELS.get(k, k)
    elif spec.series == "strategy_rho":
        keyf = lambda r: (r.strategy, r.rho)
        sortf = lambda k: (_STRAT_ORDER.get(k[0], 9), k[1])
        labelf = lambda k: f"{k[0]}, ρ = {k[1]:g}"
    elif spec.series == "family":
        keyf = lambda r: r.family
        sortf = lambda k: k
        labelf = lambda k: FAMILY_LABELS.get(k, k)
    else:
        raise InputError(f"{spec.preset}: unknown series grouping {spec.series!r}")
    groups: dict = {}
    for row in rows:
        groups.setdefault(keyf(row), []).append(row)
    out = []
    for key in sorted(groups, key=sortf):
        pts = sorted(groups[key], key=lambda r: getattr(r, spec.x))
        out.append((key, labelf(key), pts))
    return out


def _line_style(spec: FigureSpec, key, index: int, rho_levels: list[float]) -> dict:
    if spec.series == "strategy_rho":
        strat, rho = key
        dashes = _RHO_DASHES[min(rho_levels.index(rho), len(_RHO_DASHES) - 1)]
        return dict(color=_STRAT_COLOR.get(strat, _COLORS[index % len(_COLORS)]),
                    marker=_STRAT_MARKER.get(strat, "o"), dashes=dashes)
    return dict(color=_COLORS[index % len(_COLORS)],
                marker=_MARKERS[index % len(_MARKERS)], dashes=())


def _build_lines(spec: FigureSpec, rows: list[Record]):
    if spec.panel:
        panels = sorted({getattr(r, spec.panel) for r in rows})
    else:
        panels = [None]
    fig, axes = plt.subplots(
        len(panels), 1, figsize=(7.0, 4.3 * len(panels)),
        sharex=len(panels) > 1, squeeze=False)
    rho_levels = sorted({r.rho for r in rows})
    for ax, panel_value in zip(axes[:, 0], panels):
        if panel_value is None:
            sub = rows
            ax.set_title(spec.title)
        else:
            sub = [r for r in rows if getattr(r, spec.panel) == panel_value]
            ax.set_title(f"{spec.title} ({panel_value:g} dB)")
        for i, (key, label, pts) in enumerate(_series_groups(spec, sub)):
            xs = [getattr(p, spec.x) for p in pts]
            ys = [p.mean_sum_rate for p in pts]
            yerr = np.asarray([p.ci95_halfwidth for p in pts])
            ax.errorbar(xs, ys, yerr=yerr, label=label, capsize=2,
                        **_line_style(spec, key, i, rho_levels))
        if spec.preset == "fig_corr":
            _corr_extras(ax, sub)
        ax.set_ylabel(spec.y_label)
        ncol = 2 if spec.series == "strategy_rho" else 1
        ax.legend(loc="best", ncol=ncol)
    axes[-1, 0].set_xlabel(spec.x_label)
    fig.tight_layout()
    return fig


def _corr_extras(ax, rows: list[Record]) -> None:
    """Zero line plus the analytic envelope carried by receive-side rows."""
    ax.axhline(0.0, color="0.5", linewidth=0.8, zorder=1)
    env = sorted((r for r in rows
                  if r.aux.get("side") == "rx" and "lower" in r.aux),
                 key=lambda r: r.rho)
    if not env:
        return
    rhos = [r.rho for r in env]
    ax.plot(rhos, [r.aux["lower"] for r in env], color="0.3", linewidth=0.9,
            linestyle="--", label="analytic envelope (receive side)")
    ax.plot(rhos, [r.aux["upper"] for r in env], color="0.3", linewidth=0.9,
            linestyle="--")


# ------------------------------------------------------------------- bar plots


def _bin_key(label: str):
    # stream histogram labels look like "<100m", "100-200m", ">200m"
    if label.startswith("<"):
        return (0, 0.0)
    if label.startswith(">"):
        return (2, 0.0)
    head = label.split("-", 1)[0]
    try:
        return (1, float(head))
    except ValueError:
        return (1, 0.0)


def _build_bars(spec: FigureSpec, rows: list[Record]):
    keyed: dict[float, Record] = {}
    for row in rows:
        if "stream_share" not in row.aux:
            raise InputError(
                f"{spec.preset}: row {row.scenario_id!r} lacks aux.stream_share")
        keyed[row.rho] = row
    panels = sorted(keyed)
    fig, axes = plt.subplots(len(panels), 1,
                             figsize=(7.0, 3.4 * len(panels)), squeeze=False)
    for ax, rho in zip(axes[:, 0], panels):
        share = keyed[rho].aux["stream_share"]
        labels = sorted(share, key=_bin_key)
        n_streams = max(len(share[lab]) for lab in labels)
        base = np.arange(len(labels), dtype=float)
        width = 0.8 / n_streams
        for s in range(n_streams):
            heights = [share[lab][s] if s < len(share[lab]) else 0.0
                       for lab in labels]
            ax.bar(base - 0.4 + (s + 0.5) * width, heights, width=width,
                   color=_COLORS[s % len(_COLORS)],
                   label=f"{s + 1} stream" + ("s" if s else ""))
        ax.set_xticks(base)
        ax.set_xticklabels(labels)
        ax.set_ylim(0.0, 1.0)
        ax.set_ylabel(spec.y_label)
        ax.set_title(f"{spec.title} (ρ = {rho:g})")
        ax.legend(loc="best")
    axes[-1, 0].set_xlabel(spec.x_label)
    fig.tight_layout()
    return fig
