"""Simulation scenario configs: JSON loading, validation and hashing.

A scenario pins down one simulated operating point (antenna geometry, user
population, strategy, CSI model, scheduler, trial count, seed).  Configs are
plain JSON, either a single object or an array of objects; every key that has
a default may be omitted.  Validation happens in two passes: a JSON schema
for shapes and enums, then cross-field rules that the schema language cannot
express.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from ..channel import CellGeometry
from ..errors import ConfigError, DomainError

STRATEGIES = ("BD", "ZFC", "MET", "SU")
COMBINERS = ("MRC", "QBC", "MESC")
CSI_MODES = ("perfect", "quantized", "estimated")
SCHEDULERS = ("random", "cbsus", "cbsus_robust", "stat_preselect")
TRAINING_MODES = ("proportional", "fixed")

_CELL_SCHEMA = {
    "type": "object",
    "properties": {
        "radius_m": {"type": "number", "exclusiveMinimum": 0},
        "min_distance_m": {"type": "number", "exclusiveMinimum": 0},
        "pathloss_exponent": {"type": "number", "exclusiveMinimum": 2},
        "shadow_std_db": {"type": "number", "minimum": 0},
        "edge_snr_db": {"type": "number"},
    },
    "required": ["radius_m", "min_distance_m", "pathloss_exponent",
                 "shadow_std_db", "edge_snr_db"],
    "additionalProperties": False,
}

_CSI_SCHEMA = {
    "type": "object",
    "properties": {
        "mode": {"enum": list(CSI_MODES)},
        "bits": {"type": "integer", "minimum": 0},
        "bit_gap": {"type": "number", "exclusiveMinimum": 0},
        "noise_var": {"type": "number", "exclusiveMinimum": 0},
        "training": {
            "type": "object",
            "properties": {
                "mode": {"enum": list(TRAINING_MODES)},
                "coefficient": {"type": "number", "exclusiveMinimum": 0},
                "power": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["mode"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "scenario_id": {"type": "string", "minLength": 1},
        "n": {"type": "integer", "minimum": 2},
        "m": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "strategy": {"enum": list(STRATEGIES)},
        "snr_db": {"type": "number"},
        "cell": _CELL_SCHEMA,
        "rx_rho": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "tx_rho": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "combiner": {"enum": list(COMBINERS)},
        "mmse_combiner": {"type": "boolean"},
        "csi": _CSI_SCHEMA,
        "scheduler": {"enum": list(SCHEDULERS)},
        "schedule_size": {"type": "integer", "minimum": 1},
        "pool": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "exclusiveMaximum": 2**64},
    },
    "required": ["scenario_id", "n", "m", "k", "strategy"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class Scenario:
    """One fully specified simulation point.

    ``snr_db`` and ``cell`` are mutually exclusive: the first fixes every
    user's average SNR, the second draws positions in a circular cell and
    reports rates at the configured edge SNR.  ``pool`` caps how many users
    spend CSI acquisition resources (defaults depend on strategy and CSI
    mode); the scheduler then picks among that pool.
    """

    scenario_id: str
    n: int
    m: int
    k: int
    strategy: str
    snr_db: float | None = None
    cell: CellGeometry | None = None
    rx_rho: float = 0.0
    tx_rho: float = 0.0
    combiner: str = "MRC"
    mmse_combiner: bool = False
    csi: str = "perfect"
    bits: int | None = None
    bit_gap: float | None = None
    training_mode: str = "proportional"
    training_coefficient: float = 1.0
    training_power: float = 10.0
    uplink_noise_var: float = 1.0
    scheduler: str = "cbsus"
    schedule_size: int | None = None
    pool: int | None = None
    trials: int = 1000
    seed: int = 0


def _fail(path: str, message: str) -> ConfigError:
    return ConfigError(message, path=path)


def _cross_checks(sc: Scenario) -> None:
    sid = sc.scenario_id
    if sc.m >= sc.n:
        raise _fail(f"{sid}.m", f"need fewer user antennas than transmit antennas, got m={sc.m}, n={sc.n}")
    if (sc.snr_db is None) == (sc.cell is None):
        raise _fail(f"{sid}.snr_db", "exactly one of snr_db and cell must be given")
    if sc.strategy not in STRATEGIES:
        raise _fail(f"{sid}.strategy", f"unknown strategy {sc.strategy!r}")
    if sc.csi not in CSI_MODES:
        raise _fail(f"{sid}.csi.mode", f"unknown CSI mode {sc.csi!r}")
    if sc.scheduler not in SCHEDULERS:
        raise _fail(f"{sid}.scheduler", f"unknown scheduler {sc.scheduler!r}")
    if sc.combiner not in COMBINERS:
        raise _fail(f"{sid}.combiner", f"unknown combiner {sc.combiner!r}")
    if sc.strategy == "SU":
        if sc.csi != "perfect":
            raise _fail(f"{sid}.csi.mode",
                        "single-user eigenbeamforming is simulated with perfect CSI only")
        if sc.scheduler != "random":
            raise _fail(f"{sid}.scheduler", "single-user transmission picks its user at random")
    if sc.strategy == "MET":
        if sc.csi == "quantized":
            raise _fail(f"{sid}.csi.mode", "per-eigenmode transmission has no quantized CSI model")
        if sc.scheduler == "random":
            raise _fail(f"{sid}.scheduler", "per-eigenmode transmission schedules greedily")
    if sc.csi == "quantized":
        if (sc.bits is None) == (sc.bit_gap is None):
            raise _fail(f"{sid}.csi", "quantized CSI needs exactly one of bits and bit_gap")
        if sc.combiner == "MRC" and sc.strategy == "ZFC":
            raise _fail(f"{sid}.combiner",
                        "quantized combining needs a codebook-aware combiner (QBC or MESC)")
    if sc.csi != "quantized" and (sc.bits is not None or sc.bit_gap is not None):
        raise _fail(f"{sid}.csi", "bits/bit_gap only apply to quantized CSI")
    if sc.scheduler == "cbsus_robust" and sc.csi == "perfect":
        raise _fail(f"{sid}.scheduler", "robust scheduling needs an imperfect CSI mode")
    if sc.schedule_size is not None and sc.schedule_size > sc.k:
        raise _fail(f"{sid}.schedule_size", "cannot schedule more users than exist")
    if sc.pool is not None and sc.pool > sc.k:
        raise _fail(f"{sid}.pool", "CSI pool cannot exceed the user count")
    if sc.k < 1:
        raise _fail(f"{sid}.k", "need at least one user")


def scenario_from_dict(
    doc: dict,
    *,
    seed_override: int | None = None,
    trials_override: int | None = None,
) -> Scenario:
    """Validate one JSON object and build a Scenario."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "(root)"
        raise ConfigError(err.message, path=path)

    cell = None
    if "cell" in doc:
        try:
            cell = CellGeometry(**doc["cell"])
        except DomainError as exc:
            raise ConfigError(str(exc), path=f"{doc['scenario_id']}.cell") from exc
    csi_doc = doc.get("csi", {"mode": "perfect"})
    training = csi_doc.get("training", {})
    sc = Scenario(
        scenario_id=doc["scenario_id"],
        n=doc["n"],
        m=doc["m"],
        k=doc["k"],
        strategy=doc["strategy"],
        snr_db=doc.get("snr_db"),
        cell=cell,
        rx_rho=doc.get("rx_rho", 0.0),
        tx_rho=doc.get("tx_rho", 0.0),
        combiner=doc.get("combiner", "MRC"),
        mmse_combiner=doc.get("mmse_combiner", False),
        csi=csi_doc["mode"],
        bits=csi_doc.get("bits"),
        bit_gap=csi_doc.get("bit_gap"),
        training_mode=training.get("mode", "proportional"),
        training_coefficient=training.get("coefficient", 1.0),
        training_power=training.get("power", 10.0),
        uplink_noise_var=csi_doc.get("noise_var", 1.0),
        scheduler=doc.get("scheduler", "cbsus"),
        schedule_size=doc.get("schedule_size"),
        pool=doc.get("pool"),
        trials=trials_override if trials_override is not None else doc.get("trials", 1000),
        seed=seed_override if seed_override is not None else doc.get("seed", 0),
    )
    _cross_checks(sc)
    return sc


def load_scenarios(
    path: str | Path,
    *,
    seed_override: int | None = None,
    trials_override: int | None = None,
) -> list[Scenario]:
    """Load one JSON object or an array of them from ``path``."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path=str(path)) from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", path=str(path)) from exc
    docs = doc if isinstance(doc, list) else [doc]
    if not docs:
        raise ConfigError("config array is empty", path=str(path))
    out = []
    for item in docs:
        if not isinstance(item, dict):
            raise ConfigError("every config entry must be an object", path=str(path))
        out.append(scenario_from_dict(
            item, seed_override=seed_override, trials_override=trials_override))
    ids = [sc.scenario_id for sc in out]
    if len(set(ids)) != len(ids):
        raise ConfigError("scenario ids must be unique", path=str(path))
    return out


def canonical_dict(sc: Scenario) -> dict:
    """Stable plain-dict form of a scenario (None fields dropped)."""
    out = {}
    for f in dataclasses.fields(sc):
        val = getattr(sc, f.name)
        if val is None:
            continue
        if isinstance(val, CellGeometry):
            val = dataclasses.asdict(val)
        out[f.name] = val
    return out


def scenario_hash(sc: Scenario) -> str:
    """Short content hash so output rows are traceable to their config."""
    blob = json.dumps(canonical_dict(sc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]
