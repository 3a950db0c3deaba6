"""Figure definitions: which CSV each preset reads and what the axes show.

One figure per preset.  The axis mapping and series grouping mirror the
simulator's preset definitions, so a rendered figure can be checked against
its CSV by eye: x is the swept quantity, one line (or bar group) per series.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .io import InputError

SUM_RATE_LABEL = "average sum rate [bits/channel use]"
OFFSET_LABEL = "rate offset gap [bits/channel use]"

X_LABELS = {
    "k_users": "number of users K",
    "snr_db": "average SNR [dB]",
    "rho": "correlation factor ρ",
    "distance_bin": "user distance from base station",
}

SIDE_LABELS = {
    "rx": "receive-side correlation",
    "tx": "transmit-side correlation",
    "both": "correlation on both sides",
}

FAMILY_LABELS = {
    "rvqs-bd-q": "BD, quantized (bit scaling)",
    "rvqs-bd-perfect": "BD, perfect CSI (matched pool)",
    "rvqs-zfc-q": "ZFC, quantized (MESC + MMSE rx)",
    "rvqs-su": "single user, SVD",
    "rvqf-bd": "BD, 10-bit codebooks",
    "rvqf-zfc-qbc": "ZFC, 5-bit codebooks (QBC)",
    "rvqf-zfc-qbc-mmse": "ZFC, 5-bit codebooks (QBC + MMSE rx)",
    "rvqf-su": "single user, SVD",
}

TITLES = {
    "fig_corr": "BD minus ZFC rate offset vs antenna correlation",
    "fig_equal_snr": "sum rate vs number of users, equal average SNR",
    "fig_cell": "sum rate vs number of users, circular cell, perfect CSI",
    "fig_streams": "streams allocated per scheduled user, by distance",
    "fig_est_equal": "sum rate vs number of users, estimated CSI, equal SNR",
    "fig_est_cell": "sum rate vs number of users, circular cell, estimated CSI",
    "fig_est_opportunistic":
        "circular cell, estimated CSI, statistical preselection",
    "fig_rvq_scaling": "quantized CSI with SNR-scaled feedback bits",
    "fig_rvq_fixed": "quantized CSI with fixed feedback budgets",
}


@dataclass(frozen=True)
class FigureSpec:
    """Recipe for one figure: input CSVs, axis mapping, grouping, output."""

    preset: str
    inputs: tuple[Path, ...]
    style: str                 # "lines" or "bars"
    x: str                     # Record attribute on the x axis
    x_label: str
    y_label: str
    series: str                # "side" | "strategy_rho" | "family" | "streams"
    panel: str | None          # Record attribute splitting subplots
    title: str
    output: Path               # stem; render adds .svg / .png


_DEF = {
    "fig_corr": dict(style="lines", x="rho", series="side",
                     y_label=OFFSET_LABEL, panel=None),
    "fig_equal_snr": dict(style="lines", x="k_users", series="strategy_rho",
                          y_label=SUM_RATE_LABEL, panel="snr_db"),
    "fig_cell": dict(style="lines", x="k_users", series="strategy_rho",
                     y_label=SUM_RATE_LABEL, panel=None),
    "fig_streams": dict(style="bars", x="distance_bin", series="streams",
                        y_label="probability", panel="rho"),
    "fig_est_equal": dict(style="lines", x="k_users", series="strategy_rho",
                          y_label=SUM_RATE_LABEL, panel="snr_db"),
    "fig_est_cell": dict(style="lines", x="k_users", series="strategy_rho",
                         y_label=SUM_RATE_LABEL, panel=None),
    "fig_est_opportunistic": dict(style="lines", x="k_users",
                                  series="strategy_rho",
                                  y_label=SUM_RATE_LABEL, panel=None),
    "fig_rvq_scaling": dict(style="lines", x="snr_db", series="family",
                            y_label=SUM_RATE_LABEL, panel=None),
    "fig_rvq_fixed": dict(style="lines", x="snr_db", series="family",
                          y_label=SUM_RATE_LABEL, panel=None),
}


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(_DEF))


def spec_for(preset: str, in_dir: str | Path, out_dir: str | Path) -> FigureSpec:
    try:
        d = _DEF[preset]
    except KeyError:
        raise InputError(
            f"unknown preset {preset!r} (known: {', '.join(preset_names())})"
        ) from None
    return FigureSpec(
        preset=preset,
        inputs=(Path(in_dir) / f"{preset}.csv",),
        style=d["style"],
        x=d["x"],
        x_label=X_LABELS[d["x"]],
        y_label=d["y_label"],
        series=d["series"],
        panel=d["panel"],
        title=TITLES[preset],
        output=Path(out_dir) / preset,
    )


def figure_specs(in_dir: str | Path, out_dir: str | Path) -> list[FigureSpec]:
    return [spec_for(name, in_dir, out_dir) for name in preset_names()]
