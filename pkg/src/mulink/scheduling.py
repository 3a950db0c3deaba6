"""User selection: random sets, greedy sum-rate selection, and stream
allocation statistics.

The greedy selector evaluates candidates with equal power split (selection
is approximate by design); the caller applies water-filling to the final
set when building the actual precoders.  Robust variants fold a per-user
average interference level, caused by imperfect transmitter side
information, into the predicted rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .precoding import _GrowingZfState, null_space_basis

__all__ = [
    "ScheduleResult",
    "random_schedule",
    "cbsus",
    "stat_preselect",
    "stream_histogram",
]

_IMPROVE_EPS = 1e-12


@dataclass(frozen=True)
class ScheduleResult:
    """Ordered scheduled user ids with the scheduler's own rate estimate."""

    users: tuple[int, ...]
    stream_counts: tuple[int, ...]
    scheduler: str
    predicted_sum_rate: float


def random_schedule(n_users: int, target_size: int, rng: np.random.Generator) -> ScheduleResult:
    """Uniform selection of ``target_size`` distinct users out of ``n_users``."""
    if target_size < 1 or n_users < target_size:
        raise DomainError(
            f"cannot pick {target_size} users out of {n_users}")
    picked = np.sort(rng.choice(n_users, size=target_size, replace=False))
    return ScheduleResult(
        users=tuple(int(u) for u in picked),
        stream_counts=(),
        scheduler="random",
        predicted_sum_rate=math.nan)


def _zfc_greedy(ids, rows, total_power, cap, interference):
    n_tx = rows.shape[1]
    state = _GrowingZfState(n_tx)
    selected: list[int] = []
    sel_interf: list[float] = []
    remaining = np.ones(len(ids), dtype=bool)
    current = 0.0
    while len(selected) < cap and remaining.any():
        idx = np.flatnonzero(remaining)
        gains, feasible = state.candidate_gains(rows[idx])
        size = len(selected) + 1
        power = total_power / size
        if interference is None:
            sinr = power * gains
        else:
            coef = total_power * (size - 1) / size
            e = np.empty_like(gains)
            e[:, :len(selected)] = np.asarray(sel_interf)[None, :]
            e[:, len(selected)] = np.asarray([interference[ids[i]] for i in idx])
            sinr = power * gains / (1.0 + coef * e)
        rates = np.sum(np.log1p(sinr), axis=1) / math.log(2.0)
        rates[~feasible] = -np.inf
        best = int(np.argmax(rates))
        if not rates[best] > current + _IMPROVE_EPS:
            break
        chosen = int(idx[best])
        state.add(rows[chosen])
        selected.append(chosen)
        if interference is not None:
            sel_interf.append(float(interference[ids[chosen]]))
        remaining[chosen] = False
        current = float(rates[best])
    users = tuple(ids[i] for i in selected)
    return users, tuple(1 for _ in users), current


def _bd_set_rate(mats, total_power, interference_mats):
    """Equal-power predicted sum rate of a candidate multi-stream set."""
    size = len(mats)
    m = mats[0].shape[0]
    power = total_power / (m * size)
    coef = total_power * (size - 1) / size
    total = 0.0
    for k, h in enumerate(mats):
        if size > 1:
            null = null_space_basis(np.vstack([mats[j] for j in range(size) if j != k]))
        else:
            null = np.eye(h.shape[1], dtype=complex)
        if null.shape[1] < m:
            return -math.inf
        eff = h @ null
        if interference_mats is None:
            s = np.linalg.svd(eff, compute_uv=False)
            total += float(np.sum(np.log1p(power * s**2)))
        else:
            cov = np.eye(m) + coef * np.atleast_2d(interference_mats[k])
            sign, base = np.linalg.slogdet(cov)
            sign, full = np.linalg.slogdet(cov + power * (eff @ eff.conj().T))
            total += float(full - base)
    return total / math.log(2.0)


def _bd_greedy(ids, mats, total_power, cap, interference):
    selected: list[int] = []
    remaining = list(range(len(ids)))
    current = 0.0
    while len(selected) < cap and remaining:
        best_rate, best_pos = -math.inf, None
        for pos in remaining:
            trial = selected + [pos]
            emats = None
            if interference is not None:
                emats = [interference[ids[p]] for p in trial]
            rate = _bd_set_rate([mats[p] for p in trial], total_power, emats)
            if rate > best_rate + _IMPROVE_EPS:
                best_rate, best_pos = rate, pos
        if best_pos is None or not best_rate > current + _IMPROVE_EPS:
            break
        selected.append(best_pos)
        remaining.remove(best_pos)
        current = best_rate
    users = tuple(ids[i] for i in selected)
    m = mats[0].shape[0]
    return users, tuple(m for _ in users), current


def cbsus(
    candidates: dict[int, np.ndarray],
    total_power: float,
    strategy: str,
    *,
    max_size: int | None = None,
    avg_interference: dict[int, float | np.ndarray] | None = None,
) -> ScheduleResult:
    """Greedy capacity-based user selection.

    Starts from the empty set and keeps adding the user that maximises the
    predicted equal-power sum rate, rebuilding the zero-forcing solution at
    every step; stops when no candidate improves the objective or the
    spatial size cap is reached.  May return a single user.

    Args:
        candidates: user id -> acquired channel state; a row vector per user
            for ``ZFC``, an (m, n) matrix per user for ``BD``.
        total_power: transmit power budget (noise is normalised to one).
        strategy: ``ZFC`` or ``BD``.
        max_size: optional cap below the spatial limit.
        avg_interference: optional user id -> mean interference level caused
            by CSI imperfections (scalar for ZFC, (m, m) matrix for BD); the
            scheduler sees P(|S|-1)/|S| times this level as extra noise.
    """
    if not candidates:
        raise DomainError("no candidates to schedule")
    if total_power <= 0.0:
        raise DomainError("total power must be positive")
    ids = sorted(candidates)  # ascending ids; argmax tie-break -> lowest id
    if avg_interference is not None and any(u not in avg_interference for u in ids):
        raise DomainError("avg_interference must cover every candidate")
    strategy = strategy.upper()
    if strategy == "ZFC":
        rows = np.vstack([np.asarray(candidates[u]).reshape(1, -1) for u in ids])
        cap = min(rows.shape[1], max_size or rows.shape[1], len(ids))
        users, counts, rate = _zfc_greedy(ids, rows, total_power, cap, avg_interference)
    elif strategy == "BD":
        mats = [np.atleast_2d(np.asarray(candidates[u])) for u in ids]
        m, n_tx = mats[0].shape
        spatial = n_tx // m
        cap = min(spatial, max_size or spatial, len(ids))
        if m == 1:
            rows = np.vstack(mats)
            users, counts, rate = _zfc_greedy(ids, rows, total_power, cap, avg_interference)
        else:
            users, counts, rate = _bd_greedy(ids, mats, total_power, cap, avg_interference)
    else:
        raise DomainError(f"unknown greedy strategy {strategy!r}")
    return ScheduleResult(
        users=users,
        stream_counts=counts,
        scheduler="cbsus" if avg_interference is None else "cbsus_robust",
        predicted_sum_rate=rate)


def stat_preselect(scores: dict[int, float], keep: int) -> tuple[int, ...]:
    """Keep the ``keep`` users with the strongest long-term statistics.

    ``scores`` is user id -> tr(R_T) * tr(R_R) (or any long-term figure of
    merit).  Ties resolve to the lowest id.  Used ahead of CSI acquisition
    so only the preselected users spend training resources.
    """
    if keep < 1:
        raise DomainError("keep must be at least 1")
    ranked = sorted(scores, key=lambda u: (-scores[u], u))
    return tuple(ranked[:min(keep, len(ranked))])


def stream_histogram(
    distances_m: np.ndarray,
    streams: np.ndarray,
    edges: tuple[float, ...] = (100.0, 200.0),
    max_streams: int | None = None,
) -> dict[str, np.ndarray]:
    """Distribution of allocated streams per scheduled user, by distance bin.

    Returns bin label -> probability vector over stream counts 1..max;
    empty bins are omitted.  Default bins: closer than 100 m (cell centre),
    100 to 200 m, beyond 200 m (cell edge).
    """
    distances_m = np.asarray(distances_m, dtype=float)
    streams = np.asarray(streams, dtype=int)
    if distances_m.shape != streams.shape:
        raise DomainError("distances and stream counts must align")
    if np.any(streams < 1):
        raise DomainError("stream counts must be at least 1")
    top = max_streams or (int(streams.max()) if streams.size else 1)
    labels = [f"<{edges[0]:g}m"]
    labels += [f"{lo:g}-{hi:g}m" for lo, hi in zip(edges, edges[1:])]
    labels += [f">{edges[-1]:g}m"]
    which = np.digitize(distances_m, edges)
    out: dict[str, np.ndarray] = {}
    for b, label in enumerate(labels):
        mask = which == b
        if not np.any(mask):
            continue
        hist = np.bincount(streams[mask], minlength=top + 1)[1:top + 1]
        out[label] = hist / hist.sum()
    return out
