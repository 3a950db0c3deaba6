"""Downlink precoder constructions and power allocation.

All constructions take the channel state the transmitter has acquired (which
may be perfect, estimated or quantized) and return a :class:`PrecodePlan`.
Noise power is normalised to one, so ``total_power`` plays the role of SNR.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScheduleError, DomainError

__all__ = [
    "PrecodePlan",
    "waterfill",
    "null_space_basis",
    "zfc_precoder",
    "bd_precoder",
    "met_precoder",
    "su_svd_precoder",
]

_RANK_RTOL = 1e-12
_COND_LIMIT = 1e12
_LOG2 = np.log(2.0)


def waterfill(gains: np.ndarray, total_power: float) -> np.ndarray:
    """Classic water-filling over parallel channels with unit noise.

    Maximises sum log2(1 + p_i * g_i) subject to sum p_i = total_power,
    p_i >= 0.  Zero gains receive zero power.  The returned allocation
    consumes the budget exactly (up to roundoff).
    """
    gains = np.asarray(gains, dtype=float)
    if gains.ndim != 1:
        raise DomainError("gains must be a 1-D array")
    if np.any(gains < 0.0) or not np.all(np.isfinite(gains)):
        raise DomainError("gains must be finite and nonnegative")
    if total_power < 0.0:
        raise DomainError(f"total power must be nonnegative, got {total_power}")
    powers = np.zeros_like(gains)
    if total_power == 0.0 or not np.any(gains > 0.0):
        return powers
    order = np.argsort(-gains)
    g = gains[order]
    active = g > 0.0
    with np.errstate(divide="ignore"):
        inv = np.where(active, 1.0 / g, np.inf)
    csum = np.cumsum(inv)
    m_range = np.arange(1, g.size + 1)
    with np.errstate(invalid="ignore"):
        level = (total_power + csum) / m_range
    feasible = level > inv  # holds for a prefix when sorted by gain
    m = int(np.sum(feasible))
    level_star = (total_power + csum[m - 1]) / m
    p_sorted = np.zeros_like(g)
    p_sorted[:m] = level_star - inv[:m]
    powers[order] = p_sorted
    return powers


def _waterfill_batch(gains: np.ndarray, total_power: float) -> np.ndarray:
    """Row-wise water-filling; rows are independent gain vectors."""
    g_order = np.argsort(-gains, axis=1)
    g = np.take_along_axis(gains, g_order, axis=1)
    with np.errstate(divide="ignore"):
        inv = np.where(g > 0.0, 1.0 / g, np.inf)
    csum = np.cumsum(inv, axis=1)
    m_range = np.arange(1, gains.shape[1] + 1)
    with np.errstate(invalid="ignore"):
        level = (total_power + csum) / m_range
    m = np.maximum(np.sum(level > inv, axis=1), 1)
    idx = m - 1
    level_star = (total_power + np.take_along_axis(csum, idx[:, None], axis=1)) / m[:, None]
    # All-zero rows make level_star - inv transiently nan; masked right below.
    with np.errstate(invalid="ignore"):
        p_sorted = np.clip(level_star - inv, 0.0, None)
    p_sorted[np.isinf(inv)] = 0.0
    mask = m_range[None, :] > m[:, None]
    p_sorted[mask] = 0.0
    powers = np.empty_like(p_sorted)
    np.put_along_axis(powers, g_order, p_sorted, axis=1)
    return powers


def null_space_basis(matrix: np.ndarray, rtol: float = _RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the right null space of ``matrix``.

    Rank is decided relative to the largest singular value with tolerance
    ``rtol``.  A matrix with no rows (or all-zero rows) yields the identity;
    a full-rank wide stack yields an empty (n, 0) basis, which is a valid
    (signalled) outcome rather than an error.
    """
    matrix = np.atleast_2d(np.asarray(matrix))
    n = matrix.shape[1]
    if matrix.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(matrix, full_matrices=True)
    rank = int(np.sum(s > rtol * s[0])) if s.size else 0
    return vh[rank:].conj().T


@dataclass(frozen=True)
class PrecodePlan:
    """Scheduled users with per-user precoders and stream powers.

    ``bases[k]`` is the (n_tx, d_k) semi-unitary direction matrix for user
    ``users[k]``; ``precoders[k]`` is the same matrix with the square roots
    of ``stream_powers[k]`` folded in, so the transmit covariance of user k
    is precoders[k] @ precoders[k]^H.
    """

    users: tuple[int, ...]
    bases: tuple[np.ndarray, ...]
    stream_powers: tuple[np.ndarray, ...]
    stream_gains: tuple[np.ndarray, ...]
    total_power: float
    strategy: str

    @property
    def precoders(self) -> tuple[np.ndarray, ...]:
        return tuple(b * np.sqrt(p) for b, p in zip(self.bases, self.stream_powers))

    @property
    def stream_counts(self) -> tuple[int, ...]:
        return tuple(b.shape[1] for b in self.bases)

    def used_power(self) -> float:
        return float(sum(np.sum(p) for p in self.stream_powers))


def _split_powers(powers, counts):
    out = []
    at = 0
    for c in counts:
        out.append(powers[at:at + c])
        at += c
    return out


def _allocate(gains: np.ndarray, total_power: float, power_mode: str) -> np.ndarray:
    if power_mode == "waterfill":
        return waterfill(gains, total_power)
    if power_mode == "equal":
        return np.full(gains.shape, total_power / gains.size)
    raise DomainError(f"unknown power mode {power_mode!r}")


def zfc_precoder(
    rows: np.ndarray,
    total_power: float,
    power_mode: str = "waterfill",
    user_ids: tuple[int, ...] | None = None,
) -> PrecodePlan:
    """Zero-forcing on single effective channel rows (one stream per user).

    ``rows[k]`` holds the row vector h_k^H reported for user k.  Each beam
    is the normalised k-th column of the pseudo-inverse, which nulls all
    other scheduled rows exactly.
    """
    rows = np.atleast_2d(np.asarray(rows))
    n_sched, n_tx = rows.shape
    if n_sched > n_tx:
        raise DomainError(f"cannot zero-force {n_sched} users with {n_tx} antennas")
    if total_power <= 0.0:
        raise DomainError("total power must be positive")
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s[-1] <= 0.0 or s[0] / s[-1] > _COND_LIMIT:
        raise DegenerateScheduleError(
            f"scheduled rows are numerically collinear (cond {s[0] / max(s[-1], 1e-300):.2e})")
    pinv = (vh.conj().T / s) @ u.conj().T            # (n_tx, n_sched)
    norms = np.linalg.norm(pinv, axis=0)
    beams = pinv / norms
    gains = 1.0 / norms**2
    powers = _allocate(gains, total_power, power_mode)
    users = tuple(user_ids) if user_ids is not None else tuple(range(n_sched))
    return PrecodePlan(
        users=users,
        bases=tuple(beams[:, k:k + 1] for k in range(n_sched)),
        stream_powers=tuple(powers[k:k + 1] for k in range(n_sched)),
        stream_gains=tuple(gains[k:k + 1] for k in range(n_sched)),
        total_power=float(total_power),
        strategy="ZFC",
    )


def bd_precoder(
    channels: list[np.ndarray],
    total_power: float,
    power_mode: str = "waterfill",
    user_ids: tuple[int, ...] | None = None,
) -> PrecodePlan:
    """Block diagonalisation: each user's precoder lives in the null space
    of every co-scheduled user's channel and is rotated to diagonalise the
    user's own projected channel.

    With single-antenna users this is exactly the single-stream zero-forcing
    construction; that case is delegated so the two strategies produce
    identical plans.
    """
    channels = [np.atleast_2d(np.asarray(h)) for h in channels]
    n_sched = len(channels)
    if n_sched == 0:
        raise DomainError("empty schedule")
    m = channels[0].shape[0]
    n_tx = channels[0].shape[1]
    if any(h.shape != (m, n_tx) for h in channels):
        raise DomainError("all scheduled channels must share one shape")
    if n_sched * m > n_tx:
        raise DomainError(
            f"{n_sched} users with {m} streams each exceed {n_tx} antennas")
    if total_power <= 0.0:
        raise DomainError("total power must be positive")
    for h in channels:
        s = np.linalg.svd(h, compute_uv=False)
        if s[-1] <= _RANK_RTOL * s[0]:
            raise DomainError("scheduled channel is rank deficient")
    if m == 1:
        plan = zfc_precoder(np.vstack(channels), total_power, power_mode, user_ids)
        return dataclasses.replace(plan, strategy="BD")

    bases = []
    gains = []
    for k in range(n_sched):
        others = [channels[j] for j in range(n_sched) if j != k]
        null = null_space_basis(np.vstack(others)) if others else np.eye(n_tx, dtype=complex)
        proj = channels[k] @ null
        _, s, bh = np.linalg.svd(proj, full_matrices=False)
        bases.append(null @ bh.conj().T[:, :m])
        gains.append(s[:m] ** 2)
    all_gains = np.concatenate(gains)
    powers = _allocate(all_gains, total_power, power_mode)
    split = _split_powers(powers, [m] * n_sched)
    users = tuple(user_ids) if user_ids is not None else tuple(range(n_sched))
    return PrecodePlan(
        users=users,
        bases=tuple(bases),
        stream_powers=tuple(split),
        stream_gains=tuple(gains),
        total_power=float(total_power),
        strategy="BD",
    )


def su_svd_precoder(channel: np.ndarray, total_power: float, user_id: int = 0) -> PrecodePlan:
    """Single-user eigenbeamforming with water-filling over the eigenmodes.

    Streams that receive zero water-filling power are dropped, so the plan
    collapses to a single stream as the power budget shrinks.
    """
    channel = np.atleast_2d(np.asarray(channel))
    if total_power <= 0.0:
        raise DomainError("total power must be positive")
    _, s, vh = np.linalg.svd(channel, full_matrices=False)
    keep = s > _RANK_RTOL * s[0]
    s = s[keep]
    gains = s**2
    powers = waterfill(gains, total_power)
    active = powers > 0.0
    basis = vh.conj().T[:, keep][:, active]
    return PrecodePlan(
        users=(user_id,),
        bases=(basis,),
        stream_powers=(powers[active],),
        stream_gains=(gains[active],),
        total_power=float(total_power),
        strategy="SU",
    )


class _GrowingZfState:
    """Incremental zero-forcing gains while rows are added one at a time.

    Used by greedy stream/user selection: given the current row stack E,
    evaluates for many candidate rows at once the per-stream gains of the
    zero-forcing solution on E extended by the candidate.  Gains are
    1 / diag((E' E'^H)^{-1}) via a bordered inverse of the Gram matrix.
    """

    def __init__(self, n_tx: int):
        self.n_tx = n_tx
        self.rows: list[np.ndarray] = []
        self._gram_inv = np.zeros((0, 0), dtype=complex)

    def __len__(self):
        return len(self.rows)

    def candidate_gains(self, cand: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gains (n_cand, t + 1) for each candidate row appended to the stack.

        Column t (the last one) is the candidate's own gain.  Also returns
        a feasibility mask; candidates inside the span of the stack are
        marked infeasible.
        """
        cand = np.atleast_2d(cand)
        n_cand = cand.shape[0]
        t = len(self.rows)
        norms = np.sum(np.abs(cand) ** 2, axis=1).real
        if t == 0:
            gains = norms[:, None].copy()
            return gains, gains[:, 0] > 0.0
        e = np.vstack(self.rows)
        u = e @ cand.conj().T                       # (t, n_cand)
        v = self._gram_inv @ u
        schur = norms - np.sum(u.conj() * v, axis=0).real
        feasible = schur > 1e-12 * np.maximum(norms, 1e-300)
        diag = np.diag(self._gram_inv).real
        safe = np.where(feasible, schur, 1.0)
        inv_diag = diag[:, None] + (np.abs(v) ** 2) / safe[None, :]
        gains = np.empty((n_cand, t + 1))
        with np.errstate(divide="ignore"):
            gains[:, :t] = (1.0 / inv_diag).T
        gains[:, t] = schur
        return gains, feasible

    def add(self, row: np.ndarray) -> None:
        self.rows.append(np.asarray(row).ravel())
        e = np.vstack(self.rows)
        self._gram_inv = np.linalg.inv(e @ e.conj().T)


def met_precoder(
    channels: list[np.ndarray],
    total_power: float,
    max_streams: int | None = None,
    user_ids: tuple[int, ...] | None = None,
) -> tuple[PrecodePlan, list[np.ndarray]]:
    """Greedy per-eigenmode transmission with zero inter-stream interference.

    Every (user, eigenmode) pair is a candidate stream whose effective row
    is sigma_i * v_i^H from the user's SVD.  At each step the pair that
    maximises the water-filled zero-forcing sum rate is added; selection
    stops when no pair improves the rate or all spatial dimensions are in
    use.  Returns the plan plus per-user receive combiners (the selected
    left singular vectors).

    With single-antenna users this degenerates to greedy zero-forcing user
    selection with the same water-filled objective.
    """
    channels = [np.atleast_2d(np.asarray(h)) for h in channels]
    if not channels:
        raise DomainError("need at least one candidate user")
    m, n_tx = channels[0].shape
    if any(h.shape != (m, n_tx) for h in channels):
        raise DomainError("all candidate channels must share one shape")
    if total_power <= 0.0:
        raise DomainError("total power must be positive")
    cap = min(n_tx, max_streams) if max_streams else n_tx
    ids = tuple(user_ids) if user_ids is not None else tuple(range(len(channels)))

    cand_rows = []
    cand_key = []          # (user position, mode)
    left_vecs = []
    for pos, h in enumerate(channels):
        u, s, vh = np.linalg.svd(h, full_matrices=False)
        left_vecs.append(u)
        for mode in range(min(m, n_tx)):
            cand_rows.append(s[mode] * vh[mode])
            cand_key.append((pos, mode))
    cand_rows = np.array(cand_rows)

    state = _GrowingZfState(n_tx)
    remaining = np.ones(len(cand_key), dtype=bool)
    selected: list[int] = []
    current_rate = 0.0
    while len(selected) < cap and remaining.any():
        idx = np.flatnonzero(remaining)
        gains, feasible = state.candidate_gains(cand_rows[idx])
        powers = _waterfill_batch(gains, total_power)
        rates = np.sum(np.log1p(powers * gains), axis=1) / _LOG2
        rates[~feasible] = -np.inf
        best = int(np.argmax(rates))
        if not rates[best] > current_rate:
            break
        chosen = int(idx[best])
        state.add(cand_rows[chosen])
        selected.append(chosen)
        remaining[chosen] = False
        current_rate = float(rates[best])

    # Final zero-forcing over the selected stream rows, then regroup per user.
    order = sorted(selected, key=lambda i: cand_key[i])
    stream_plan = zfc_precoder(cand_rows[order], total_power, "waterfill")
    users_pos = sorted({cand_key[i][0] for i in order})
    bases, powers, gains, combiners = [], [], [], []
    for pos in users_pos:
        cols = [j for j, i in enumerate(order) if cand_key[i][0] == pos]
        modes = [cand_key[order[j]][1] for j in cols]
        bases.append(np.hstack([stream_plan.bases[j] for j in cols]))
        powers.append(np.concatenate([stream_plan.stream_powers[j] for j in cols]))
        gains.append(np.concatenate([stream_plan.stream_gains[j] for j in cols]))
        combiners.append(left_vecs[pos][:, modes])
    plan = PrecodePlan(
        users=tuple(ids[p] for p in users_pos),
        bases=tuple(bases),
        stream_powers=tuple(powers),
        stream_gains=tuple(gains),
        total_power=float(total_power),
        strategy="MET",
    )
    return plan, combiners
