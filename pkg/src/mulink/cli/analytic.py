"""Named closed-form evaluations for the ``analytic`` subcommand.

Each name maps scalar parameters (parsed from ``key=value`` pairs) onto one
or more BoundReport records.  Correlated inputs are expressed through the
exponential correlation coefficient ``rho`` so everything stays scalar on
the command line.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from ..analytics import (
    BoundReport,
    beta_bd_zfc,
    digamma,
    distortion_bd,
    distortion_qbc,
    expected_effective_gain,
    feedback_bit_law,
    mc_beta_bd_zfc,
    qbc_gain,
    quantization_bit_rule,
    rate_loss_bound,
    scheduling_loss_bounds,
    separate_eigenvalues,
)
from ..channel import exp_correlation
from ..csi import training_matrix
from ..errors import ConfigError

REPORT_COLUMNS = ["kind", "value", "direction", "valid", "inputs"]


def _rx_eigs(rho: float, m: int) -> np.ndarray:
    eigs = np.linalg.eigvalsh(exp_correlation(rho, 0.0, m))
    return separate_eigenvalues(np.clip(eigs, 0.0, None))


def _require(params: dict, *names: str) -> list:
    missing = [k for k in names if k not in params]
    if missing:
        raise ConfigError(f"missing parameters: {', '.join(missing)}", path="params")
    return [params[k] for k in names]


def _power(params: dict) -> float:
    if "power_db" in params:
        return 10.0 ** (params["power_db"] / 10.0)
    if "power" in params:
        return float(params["power"])
    raise ConfigError("need power or power_db", path="params")


def _beta_bounds(params):
    n, m, rho = _require(params, "n", "m", "rho")
    eigs = _rx_eigs(rho, int(m))
    diff = beta_bd_zfc(int(n), int(m), [eigs] * (int(n) // int(m)), [eigs] * int(n))
    base = {"n": int(n), "m": int(m), "rho": rho}
    return [
        BoundReport("offset-gap-lower", diff.lower, "lower", dict(base)),
        BoundReport("offset-gap-upper", diff.upper, "upper", dict(base)),
        BoundReport("offset-gap-homogeneous-upper", diff.homogeneous_upper,
                    "upper", dict(base)),
        BoundReport("offset-gap-first-term", diff.first_term, "exact", dict(base)),
    ]


def _beta_mc(params):
    n, m = _require(params, "n", "m")
    trials = int(params.get("trials", 100_000))
    seed = int(params.get("seed", 0))
    rho_rx = float(params.get("rho_rx", params.get("rho", 0.0)))
    rho_tx = float(params.get("rho_tx", 0.0))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    est = mc_beta_bd_zfc(int(n), int(m), trials, rng, rho_rx=rho_rx, rho_tx=rho_tx)
    inputs = dict(est.inputs)
    inputs.update({"se": est.se, "trials": trials, "seed": seed})
    return [BoundReport("offset-gap-mc", est.value, "exact", inputs)]


def _scheduling_loss(params):
    n, m, k = _require(params, "n", "m", "k")
    c1 = float(params.get("c1", 1.0))
    c2 = float(params.get("c2", 1.0))
    return list(scheduling_loss_bounds(int(n), int(m), int(k), c1, c2))


def _distortion(kind):
    def run(params):
        n, m, bits = _require(params, "n", "m", "bits")
        fn = distortion_bd if kind == "bd" else distortion_qbc
        value = fn(int(n), int(m), float(bits))
        return [BoundReport(f"codebook-distortion-{kind}", value, "exact",
                            {"n": int(n), "m": int(m), "bits": bits})]
    return run


def _qbc_gain(params):
    n, m, rho = _require(params, "n", "m", "rho")
    value = qbc_gain(_rx_eigs(rho, int(m)), int(n))
    return [BoundReport("combining-gain-qbc", value, "exact",
                        {"n": int(n), "m": int(m), "rho": rho})]


def _effective_gain(params):
    n, m, rho = _require(params, "n", "m", "rho")
    value = expected_effective_gain(_rx_eigs(rho, int(m)), int(n))
    return [BoundReport("effective-gain-mrc", value, "exact",
                        {"n": int(n), "m": int(m), "rho": rho})]


def _rate_loss(regime):
    def run(params):
        n, m = _require(params, "n", "m")
        n, m = int(n), int(m)
        power = _power(params)
        rho = float(params.get("rho", 0.0))
        kwargs = {}
        if regime == "BD-Q":
            _require(params, "bits")
            kwargs = {"bits": float(params["bits"]),
                      "rx_corr": exp_correlation(rho, 0.0, m)}
        elif regime == "ZFC-Q":
            _require(params, "bits")
            kwargs = {"bits": float(params["bits"]),
                      "gain": qbc_gain(_rx_eigs(rho, m), n)}
        elif regime == "BD-EST":
            psi, s2 = _require(params, "training_power", "noise_var")
            corr = exp_correlation(rho, 0.0, m)
            train = training_matrix(corr, float(psi), float(s2))
            kwargs = {"rx_corr": corr, "training": train.matrix,
                      "noise_var": float(s2)}
        else:  # ZFC-EST
            psi, s2 = _require(params, "training_power", "noise_var")
            kwargs = {"gain": expected_effective_gain(_rx_eigs(rho, m), n) if m > 1
                      else float(n),
                      "training_power": float(psi), "noise_var": float(s2)}
        report = rate_loss_bound(regime, power, n, m, **kwargs)
        report.inputs["rho"] = rho
        return [report]
    return run


def _feedback_bits(params):
    n, m = _require(params, "n", "m")
    constant = float(params.get("constant", 0.0))
    return [feedback_bit_law(int(n), int(m), _power(params), constant)]


def _bit_rule(params):
    n, m = _require(params, "n", "m")
    gap = float(params.get("gap", 1.0))
    rule = quantization_bit_rule(int(n), int(m), _power(params),
                                 gap_bits_per_stream=gap)
    base = {"n": int(n), "m": int(m), "gap_bits_per_stream": gap}
    return [
        BoundReport("bits-per-user-bd", float(rule.bd_bits), "exact",
                    dict(base, constant=rule.bd_constant)),
        BoundReport("bits-per-user-zfc", float(rule.zfc_bits), "exact",
                    dict(base, constant=rule.zfc_constant)),
    ]


def _digamma(params):
    (n,) = _require(params, "n")
    return [BoundReport("digamma", digamma(int(n)), "exact", {"n": int(n)})]


_EVALUATORS = {
    "beta-bounds": _beta_bounds,
    "beta-mc": _beta_mc,
    "scheduling-loss": _scheduling_loss,
    "distortion-bd": _distortion("bd"),
    "distortion-qbc": _distortion("qbc"),
    "qbc-gain": _qbc_gain,
    "effective-gain": _effective_gain,
    "rate-loss-bd-q": _rate_loss("BD-Q"),
    "rate-loss-zfc-q": _rate_loss("ZFC-Q"),
    "rate-loss-bd-est": _rate_loss("BD-EST"),
    "rate-loss-zfc-est": _rate_loss("ZFC-EST"),
    "feedback-bits": _feedback_bits,
    "bit-rule": _bit_rule,
    "digamma": _digamma,
}


def analytic_names() -> tuple[str, ...]:
    return tuple(sorted(_EVALUATORS))


def parse_params(text: str) -> dict:
    """Parse ``k=v,k=v`` with ints preserved and floats otherwise."""
    params: dict = {}
    if not text:
        return params
    for chunk in text.split(","):
        if "=" not in chunk:
            raise ConfigError(f"expected key=value, got {chunk!r}", path="params")
        key, _, raw = chunk.partition("=")
        key = key.strip()
        raw = raw.strip()
        try:
            params[key] = int(raw)
        except ValueError:
            try:
                params[key] = float(raw)
            except ValueError:
                raise ConfigError(f"cannot parse number {raw!r}", path=f"params.{key}") \
                    from None
    return params


def run_analytic(name: str, params: dict) -> list[BoundReport]:
    """Evaluate one named closed form; unknown names raise ConfigError."""
    try:
        fn = _EVALUATORS[name]
    except KeyError:
        raise ConfigError(
            f"unknown analytic name (available: {', '.join(analytic_names())})",
            path=name) from None
    return fn(params)


def write_reports(reports: list[BoundReport], out) -> None:
    """CSV-format reports to a path or an open text stream."""
    def emit(fh):
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for rep in reports:
            writer.writerow([
                rep.kind,
                f"{rep.value:.10g}" if not math.isnan(rep.value) else "nan",
                rep.direction,
                int(rep.valid),
                json.dumps(_plain(rep.inputs), sort_keys=True, separators=(",", ":")),
            ])

    if out is None or out is sys.stdout:
        emit(sys.stdout)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            emit(fh)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj
