"""Prebaked scenario collections, one per shipped figure.

Every preset returns the list of jobs whose aggregated rows make up one CSV
file.  Jobs within a preset share seeds so that curves compared against each
other ride on common random numbers; the companion perfect-CSI and
imperfect-CSI presets reuse the same seed for paired loss measurements.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..channel import CellGeometry
from ..errors import ConfigError
from .scenario import Scenario

_CELL = CellGeometry(
    radius_m=250.0,
    min_distance_m=35.0,
    pathloss_exponent=3.5,
    shadow_std_db=8.0,
    edge_snr_db=20.0,
)

_K_SWEEP = (8, 16, 24, 32, 40)
_RHO_GRID = (0.0, 0.4, 0.8)
_CORR_GRID = tuple(round(0.1 * i, 1) for i in range(10))


@dataclass(frozen=True)
class BetaJob:
    """One Monte Carlo offset-gap point (see runner.run_beta_job)."""

    job_id: str
    n: int
    m: int
    side: str
    rho: float
    trials: int
    seed: int


def _corr(trials, seed):
    trials = trials or 100_000
    seed = 101 if seed is None else seed
    return [
        BetaJob(job_id=f"corr-{side}-rho{rho:g}", n=8, m=2, side=side,
                rho=rho, trials=trials, seed=seed)
        for side in ("rx", "tx", "both")
        for rho in _CORR_GRID
    ]


def _equal_snr(trials, seed, *, csi="perfect"):
    trials = trials or 2000
    seed = 202 if seed is None else seed
    strategies = ("BD", "ZFC", "MET") if csi == "perfect" else ("BD", "ZFC")
    tag = "eqsnr" if csi == "perfect" else "est-eqsnr"
    out = []
    for strat in strategies:
        for k in _K_SWEEP:
            for snr in (10.0, 20.0):
                for rho in _RHO_GRID:
                    out.append(Scenario(
                        scenario_id=f"{tag}-{strat}-k{k}-snr{snr:g}-rho{rho:g}",
                        n=8, m=4, k=k, strategy=strat,
                        snr_db=snr, rx_rho=rho,
                        mmse_combiner=(strat == "ZFC"),
                        csi=csi,
                        scheduler="cbsus" if csi == "perfect" else "cbsus_robust",
                        trials=trials, seed=seed))
    return out


def _cell(trials, seed, *, csi="perfect", scheduler=None):
    trials = trials or 2000
    seed = 303 if seed is None else seed
    if scheduler == "stat_preselect":
        strategies = ("BD", "ZFC", "MET")
        tag = "opp-cell"
        seed = 505 if seed == 303 else seed
    elif csi == "perfect":
        strategies = ("BD", "ZFC", "MET")
        tag = "cell"
    else:
        strategies = ("BD", "ZFC")
        tag = "est-cell"
    out = []
    for strat in strategies:
        for k in _K_SWEEP:
            for rho in _RHO_GRID:
                out.append(Scenario(
                    scenario_id=f"{tag}-{strat}-k{k}-rho{rho:g}",
                    n=8, m=4, k=k, strategy=strat,
                    cell=_CELL, rx_rho=rho,
                    mmse_combiner=(strat == "ZFC"),
                    csi=csi,
                    scheduler=scheduler or ("cbsus" if csi == "perfect" else "cbsus_robust"),
                    trials=trials, seed=seed))
    return out


def _streams(trials, seed):
    trials = trials or 2000
    seed = 404 if seed is None else seed
    return [
        Scenario(
            scenario_id=f"streams-rho{rho:g}",
            n=8, m=4, k=20, strategy="MET",
            cell=_CELL, rx_rho=rho,
            scheduler="cbsus", trials=trials, seed=seed)
        for rho in _RHO_GRID[::2]
    ]


_RVQ_SCALING_SNRS = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.3)
_RVQ_FIXED_SNRS = (0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0)


def _rvq_scaling(trials, seed):
    trials = trials or 2000
    seed = 606 if seed is None else seed
    out = []
    for snr in _RVQ_SCALING_SNRS:
        common = dict(n=4, m=2, k=8, snr_db=snr, trials=trials, seed=seed)
        out.append(Scenario(
            scenario_id=f"rvqs-bd-q-snr{snr:g}", strategy="BD",
            csi="quantized", bit_gap=1.0, scheduler="cbsus_robust", **common))
        # Pool-matched to the quantized run (k // m candidates) so the
        # horizontal gap between the two curves isolates quantization loss.
        out.append(Scenario(
            scenario_id=f"rvqs-bd-perfect-snr{snr:g}", strategy="BD",
            scheduler="cbsus", pool=common["k"] // common["m"], **common))
        out.append(Scenario(
            scenario_id=f"rvqs-zfc-q-snr{snr:g}", strategy="ZFC",
            csi="quantized", bit_gap=1.0, combiner="MESC", mmse_combiner=True,
            scheduler="cbsus_robust", **common))
        out.append(Scenario(
            scenario_id=f"rvqs-su-snr{snr:g}", strategy="SU",
            scheduler="random", **common))
    return out


def _rvq_fixed(trials, seed):
    trials = trials or 2000
    seed = 707 if seed is None else seed
    out = []
    for snr in _RVQ_FIXED_SNRS:
        common = dict(n=6, m=2, k=6, snr_db=snr, trials=trials, seed=seed)
        out.append(Scenario(
            scenario_id=f"rvqf-bd-snr{snr:g}", strategy="BD",
            csi="quantized", bits=10, scheduler="random", **common))
        out.append(Scenario(
            scenario_id=f"rvqf-zfc-qbc-snr{snr:g}", strategy="ZFC",
            csi="quantized", bits=5, combiner="QBC", scheduler="random", **common))
        out.append(Scenario(
            scenario_id=f"rvqf-zfc-qbc-mmse-snr{snr:g}", strategy="ZFC",
            csi="quantized", bits=5, combiner="QBC", mmse_combiner=True,
            scheduler="random", **common))
        out.append(Scenario(
            scenario_id=f"rvqf-su-snr{snr:g}", strategy="SU",
            scheduler="random", **common))
    return out


_PRESETS = {
    "fig_corr": _corr,
    "fig_equal_snr": lambda t, s: _equal_snr(t, s),
    "fig_cell": lambda t, s: _cell(t, s),
    "fig_streams": _streams,
    "fig_est_equal": lambda t, s: _equal_snr(t, s, csi="estimated"),
    "fig_est_cell": lambda t, s: _cell(t, s, csi="estimated"),
    "fig_est_opportunistic": lambda t, s: _cell(t, s, csi="estimated",
                                                scheduler="stat_preselect"),
    "fig_rvq_scaling": _rvq_scaling,
    "fig_rvq_fixed": _rvq_fixed,
}


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(_PRESETS))


def figure_preset(name: str, *, trials: int | None = None, seed: int | None = None):
    """Jobs for one named figure: Scenario and/or BetaJob instances.

    ``trials`` and ``seed`` override the preset defaults uniformly, which is
    how the test suite runs thinned-out versions of every figure.
    """
    try:
        builder = _PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset (available: {', '.join(preset_names())})",
            path=name) from None
    return builder(trials, seed)
