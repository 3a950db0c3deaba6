"""Achievable rate evaluation for a precoded downlink.

Rates are measured on the true channels, whatever side information produced
the precoders, so mismatched transmit filters show up as interference rather
than as an optimistic bookkeeping artifact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .precoding import PrecodePlan

__all__ = [
    "RateRecord",
    "rate_general",
    "sum_rate",
    "asymptotic_offset",
    "multiplexing_gain_fit",
]

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class RateRecord:
    """Rates of one evaluated schedule in one coherence block."""

    scenario_id: str
    trial: int
    strategy: str
    csi: str
    per_user: dict[int, float]
    sum_rate: float


def _logdet_hermitian(a: np.ndarray) -> float:
    """log det of a Hermitian positive definite matrix via Cholesky."""
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise DomainError("covariance lost positive definiteness") from exc
    return 2.0 * float(np.sum(np.log(np.diagonal(chol).real)))


def rate_general(
    channel: np.ndarray,
    own_precoder: np.ndarray,
    other_precoders: list[np.ndarray] | tuple[np.ndarray, ...] = (),
    combiner: np.ndarray | None = None,
) -> float:
    """Achievable rate in bits per channel use for one user.

    With unit-variance noise per antenna the rate is

        log2 det(I + S + J) - log2 det(I + J)

    where S and J are the received covariance contributions of the user's
    own streams and of everyone else's streams.  A ``combiner`` restricts
    the receiver to the given output dimensions (columns are combining
    vectors); noise is whitened accordingly.
    """
    h = np.atleast_2d(np.asarray(channel))
    if combiner is not None:
        c = np.asarray(combiner)
        if c.ndim == 1:
            c = c[:, None]
        h = c.conj().T @ h
        noise = c.conj().T @ c
    else:
        noise = np.eye(h.shape[0], dtype=complex)
    eff_own = h @ np.asarray(own_precoder)
    own = eff_own @ eff_own.conj().T
    other = np.zeros_like(own)
    for w in other_precoders:
        eff = h @ np.asarray(w)
        other += eff @ eff.conj().T
    total = _logdet_hermitian(noise + own + other)
    base = _logdet_hermitian(noise + other)
    return max((total - base) / _LN2, 0.0)


def sum_rate(
    channels: dict[int, np.ndarray],
    plan: PrecodePlan,
    combiners: dict[int, np.ndarray] | None = None,
) -> tuple[float, dict[int, float]]:
    """Sum rate and per-user rates on the true channels.

    ``channels`` maps user id to the true (m, n) channel; every scheduled
    user in the plan must be present.  ``combiners`` optionally maps user
    ids to receive filters (users absent from the map use all antennas).
    """
    precoders = plan.precoders
    per_user: dict[int, float] = {}
    for pos, uid in enumerate(plan.users):
        if uid not in channels:
            raise DomainError(f"no channel supplied for scheduled user {uid}")
        others = [precoders[j] for j in range(len(precoders)) if j != pos]
        comb = None if combiners is None else combiners.get(uid)
        per_user[uid] = rate_general(channels[uid], precoders[pos], others, comb)
    return float(sum(per_user.values())), per_user


def asymptotic_offset(
    channels: dict[int, np.ndarray],
    plan: PrecodePlan,
    combiners: dict[int, np.ndarray] | None = None,
) -> float:
    """High-power rate offset of an interference-free plan.

    For block-diagonalised users the per-user limit of
    R_k - M log2(P/K_tot) is log2 det(H_k W_k)^2 with equal power per
    stream; single-stream users contribute log2 |h_k^H w_k|^2.  The
    returned value is the sum over scheduled users of log2 det of the
    squared effective channel with unit-norm precoder columns.
    """
    total = 0.0
    for pos, uid in enumerate(plan.users):
        h = np.atleast_2d(np.asarray(channels[uid]))
        if combiners is not None and uid in combiners:
            c = combiners[uid]
            if c.ndim == 1:
                c = c[:, None]
            h = c.conj().T @ h
        eff = h @ plan.bases[pos]
        gram = eff @ eff.conj().T
        sign, logdet = np.linalg.slogdet(gram)
        if sign.real <= 0.0:
            return float("-inf")
        total += logdet / _LN2
    return float(total)


def multiplexing_gain_fit(power_db: np.ndarray, rates: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and offset of rate against log2 power.

    Returns (slope, offset) of the affine model rate = slope * log2(P) +
    offset over the supplied grid; use the top of the power range for
    asymptotics.  The slope is the multiplexing gain in bits per 3 dB.
    """
    power_db = np.asarray(power_db, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if power_db.size != rates.size or power_db.size < 3:
        raise DomainError("need at least three (power, rate) points")
    log2p = power_db / (10.0 * np.log10(2.0))
    slope, offset = np.polyfit(log2p, rates, 1)
    return float(slope), float(offset)
