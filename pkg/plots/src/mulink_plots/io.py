"""CSV intake for the figure renderer.

The renderer is a pure consumer of the simulator's CSV contract: input files
are opened read-only and the header is validated before any row is parsed,
so schema drift fails loudly with a message naming the missing columns.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

REQUIRED_COLUMNS = (
    "scenario_id", "kind", "strategy", "csi", "scheduler", "snr_db",
    "rx_rho", "tx_rho", "k_users", "trials", "seed", "mean_sum_rate",
    "ci95_halfwidth", "aux",
)


class InputError(ValueError):
    """Raised when an input CSV is unusable; the message says why."""


def _float(text: str | None) -> float:
    # The writer blanks NaN and missing values.
    if text is None or text == "":
        return math.nan
    return float(text)


@dataclass(frozen=True)
class Record:
    """One CSV row with numeric fields parsed and ``aux`` decoded."""

    scenario_id: str
    kind: str
    strategy: str
    csi: str
    scheduler: str
    snr_db: float
    rx_rho: float
    tx_rho: float
    k_users: int
    trials: int
    seed: int
    mean_sum_rate: float
    ci95_halfwidth: float
    aux: dict

    @property
    def rho(self) -> float:
        """Correlation magnitude regardless of which link side carries it."""
        return max(self.rx_rho, self.tx_rho)

    @property
    def family(self) -> str:
        """Scenario family: the id with any trailing SNR sweep suffix removed."""
        return self.scenario_id.rsplit("-snr", 1)[0]


def load_rows(path: str | Path) -> list[Record]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    rows: list[Record] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise InputError(
                f"{path}: missing columns {missing}, found {list(header)}")
        for raw in reader:
            line = len(rows) + 2
            try:
                aux = json.loads(raw["aux"]) if raw["aux"] else {}
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{line}: bad aux JSON ({exc})") from None
            try:
                rows.append(Record(
                    scenario_id=raw["scenario_id"],
                    kind=raw["kind"],
                    strategy=raw["strategy"],
                    csi=raw["csi"],
                    scheduler=raw["scheduler"],
                    snr_db=_float(raw["snr_db"]),
                    rx_rho=_float(raw["rx_rho"]),
                    tx_rho=_float(raw["tx_rho"]),
                    k_users=int(raw["k_users"]),
                    trials=int(raw["trials"]),
                    seed=int(raw["seed"]),
                    mean_sum_rate=_float(raw["mean_sum_rate"]),
                    ci95_halfwidth=_float(raw["ci95_halfwidth"]),
                    aux=aux,
                ))
            except (TypeError, ValueError) as exc:
                raise InputError(f"{path}:{line}: bad value ({exc})") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    return rows


def sample_dir() -> Path:
    """Directory with the shipped sample CSVs (one per preset)."""
    return Path(__file__).parent / "sample_data"
