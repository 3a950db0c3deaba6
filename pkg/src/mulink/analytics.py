"""Closed-form performance expressions and their Monte Carlo companions.

Everything here is pure and stateless.  The combinatorial expressions assume
strictly separated correlation eigenvalues; callers widen degenerate spectra
with :func:`separate_eigenvalues` first (relative bias of the same order as
the perturbation).  Compensated summation keeps the alternating sums usable
up to M = 4 receive antennas and N = 16 transmit antennas; larger sizes are
rejected rather than silently returning noise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .channel import correlation_sqrt, exp_correlation, rotate_correlation_sqrt
from .errors import DomainError

__all__ = [
    "EULER_GAMMA",
    "BoundReport",
    "AsymptoticDifference",
    "digamma",
    "separate_eigenvalues",
    "beta_bd_zfc",
    "beta_heterogeneous_upper",
    "scheduling_loss_bounds",
    "distortion_bd",
    "distortion_qbc",
    "qbc_gain",
    "expected_effective_gain",
    "rate_loss_bound",
    "feedback_bit_law",
    "quantization_bit_rule",
    "training_power_law",
    "mc_effective_channel_stats",
    "mc_beta_bd_zfc",
]

EULER_GAMMA = 0.5772156649015329
_LN2 = math.log(2.0)
_LOG2E = 1.0 / _LN2
_MAX_COMB_M = 4
_MAX_COMB_N = 16
_MIN_REL_GAP = 1e-6


@dataclass(frozen=True)
class BoundReport:
    """A named analytic quantity with its direction and echoed inputs."""

    kind: str
    value: float
    direction: str            # "upper" | "lower" | "exact"
    inputs: dict = field(default_factory=dict)
    valid: bool = True


def digamma(n: int) -> float:
    """Digamma at a positive integer: -gamma + sum_{k<n} 1/k."""
    if int(n) != n or n < 1:
        raise DomainError(f"digamma needs a positive integer, got {n}")
    return -EULER_GAMMA + math.fsum(1.0 / k for k in range(1, int(n)))


def separate_eigenvalues(eigenvalues: Sequence[float], rel: float = 1e-4) -> np.ndarray:
    """Sort ascending and widen near-ties to a minimum relative gap.

    The closed forms below require strictly distinct eigenvalues.  Widening
    by ``rel`` changes each eigenvalue by at most a factor (1 + rel)^M, so
    downstream quantities inherit a relative bias of that order.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    if lam.size == 0 or lam[0] <= 0.0:
        raise DomainError("eigenvalues must be positive")
    out = lam.copy()
    for i in range(1, out.size):
        floor = out[i - 1] * (1.0 + rel)
        if out[i] < floor:
            out[i] = floor
    return out


def _check_separation(lam: np.ndarray) -> None:
    if np.any(np.diff(lam) < _MIN_REL_GAP * lam[-1]):
        raise DomainError(
            "eigenvalues are too close for the closed form; widen them with "
            "separate_eigenvalues() first")


def _first_term(n: int, m: int) -> float:
    return n * _LOG2E / m * math.fsum((m - i) / i for i in range(1, m))


def _sorted_positive(eigenvalues: Sequence[float]) -> np.ndarray:
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    if lam.size == 0 or lam[0] <= 0.0 or not np.all(np.isfinite(lam)):
        raise DomainError("eigenvalues must be positive and finite")
    return lam


@dataclass(frozen=True)
class AsymptoticDifference:
    """High-power sum-rate offset gap between multi-stream and combining
    transmission, with its computable envelope.

    ``value`` is present only when per-user effective-gain terms were
    supplied (Monte Carlo plug-ins or an exact evaluation); the bounds are
    always filled in.  ``z_source`` records what produced the z terms.
    """

    first_term: float
    lower: float
    upper: float
    homogeneous_upper: float
    z_lower: tuple[float, ...]
    z_upper: tuple[float, ...]
    value: float | None = None
    z_source: str = "bounds"
    inputs: dict = field(default_factory=dict)


def beta_bd_zfc(
    n: int,
    m: int,
    bd_eigenvalues: Sequence[Sequence[float]],
    zfc_eigenvalues: Sequence[Sequence[float]],
    z_terms: Sequence[float] | None = None,
    z_source: str = "monte-carlo",
) -> AsymptoticDifference:
    """Expected high-power offset difference between the two strategies.

    The exact decomposition is

        beta = n*(log2 e)/m * sum_{i<m} (m-i)/i
               + sum over multi-stream users of log2 prod(eigenvalues)
               - sum over combining users of z

    with z = E{log2 ||c^H H||^2} - psi(n)/ln2 per combining user.  Each z
    is sandwiched by log2(lambda_max) from below and by
    log2 E{||c^H H||^2} - psi(n)/ln2 from above, which yields the returned
    upper/lower envelope for beta.

    Args:
        n: transmit antennas; m: antennas per user, m | n.
        bd_eigenvalues: receive-correlation eigenvalues for each of the n/m
            multi-stream users (length-m sequences).
        zfc_eigenvalues: same for each of the n combining users.
        z_terms: optional per-combining-user z values; when given the exact
            ``value`` is filled in.
        z_source: bookkeeping string recorded alongside ``value``.
    """
    if m < 1 or n <= m or n % m != 0:
        raise DomainError(f"need m < n with m dividing n, got n={n}, m={m}")
    if len(bd_eigenvalues) != n // m or len(zfc_eigenvalues) != n:
        raise DomainError(
            f"expected {n // m} multi-stream and {n} combining eigenvalue sets")
    first = _first_term(n, m)
    bd_term = math.fsum(
        math.log2(lam) for eigs in bd_eigenvalues for lam in _sorted_positive(eigs))
    psi_term = digamma(n) * _LOG2E
    z_lo: list[float] = []
    z_hi: list[float] = []
    for eigs in zfc_eigenvalues:
        lam = _sorted_positive(eigs)
        z_lo.append(math.log2(lam[-1]))
        gain = expected_effective_gain(lam, n) if m > 1 else n * float(lam[0])
        z_hi.append(math.log2(gain) - psi_term)
    upper = first + bd_term - math.fsum(z_lo)
    lower = first + bd_term - math.fsum(z_hi)
    lam0 = _sorted_positive(zfc_eigenvalues[0])
    homog = first + n * (math.fsum(math.log2(l) for l in lam0) / m - math.log2(lam0[-1]))
    value = None
    if z_terms is not None:
        if len(z_terms) != n:
            raise DomainError(f"expected {n} z terms, got {len(z_terms)}")
        value = first + bd_term - math.fsum(z_terms)
    return AsymptoticDifference(
        first_term=first, lower=lower, upper=upper, homogeneous_upper=homog,
        z_lower=tuple(z_lo), z_upper=tuple(z_hi), value=value,
        z_source=z_source if z_terms is not None else "bounds",
        inputs={"n": n, "m": m})


def beta_heterogeneous_upper(n: int, m: int, gamma: float) -> float:
    """Offset-gap upper bound with n/m strong users of relative gain gamma.

    Strong users have correlation gamma*I, weak users I; only strong users
    get multi-stream service while combining serves everyone.
    """
    if gamma <= 0.0:
        raise DomainError("gamma must be positive")
    if m < 1 or n <= m or n % m != 0:
        raise DomainError(f"need m < n with m dividing n, got n={n}, m={m}")
    return _first_term(n, m) + (n - n // m) * math.log2(gamma)


def scheduling_loss_bounds(
    n: int, m: int, k: int, c1: float, c2: float,
) -> tuple[BoundReport, BoundReport]:
    """Lower bounds on the interference-cancellation loss with k-user selection.

    Returns (multi-stream bound, combining bound):

        loss_bd  >= -m * log2(1 - c1 * k^{-1/(m(n-m))})
        loss_zfc >=      -log2(1 - c2 * k^{-1/(n-m)})

    The constants are inputs.  When k is too small for the log argument to
    stay inside (0, 1) the report is flagged invalid and carries NaN.
    """
    if k < 1 or m < 1 or n <= m:
        raise DomainError("need k >= 1 and 1 <= m < n")
    out = []
    for kind, mult, c, expo in (
        ("scheduling-loss-bd", m, c1, -1.0 / (m * (n - m))),
        ("scheduling-loss-zfc", 1, c2, -1.0 / (n - m)),
    ):
        arg = 1.0 - c * k ** expo
        if 0.0 < arg <= 1.0:
            value, valid = -mult * math.log2(arg), True
        else:
            value, valid = math.nan, False
        out.append(BoundReport(
            kind=kind, value=value, direction="lower", valid=valid,
            inputs={"n": n, "m": m, "k": k, "c": c, "exponent": expo}))
    return out[0], out[1]


def distortion_bd(n: int, m: int, bits: float) -> float:
    """Mean squared chordal distortion of random subspace quantization.

    Gamma(1/T)/T * (2^bits / T! * prod_{i<=m} (n-i)!/(m-i)!)^{-1/T} with
    T = m(n-m).  Evaluated in log space so large bit counts stay finite.
    """
    if not 1 <= m < n:
        raise DomainError(f"need 1 <= m < n, got m={m}, n={n}")
    if bits < 0:
        raise DomainError("bits must be nonnegative")
    t = m * (n - m)
    log_inner = bits * _LN2 - math.lgamma(t + 1) + math.fsum(
        math.lgamma(n - i + 1) - math.lgamma(m - i + 1) for i in range(1, m + 1))
    return math.gamma(1.0 / t) / t * math.exp(-log_inner / t)


def distortion_qbc(n: int, m: int, bits: float) -> float:
    """Mean squared chordal distortion of combining-aided line quantization.

    2^{-bits/(n-m)} * binom(n-1, m-1)^{-1/(n-m)}.
    """
    if not 1 <= m < n:
        raise DomainError(f"need 1 <= m < n, got m={m}, n={n}")
    if bits < 0:
        raise DomainError("bits must be nonnegative")
    return math.exp(-(bits * _LN2 + math.log(math.comb(n - 1, m - 1))) / (n - m))


def qbc_gain(eigenvalues: Sequence[float], n: int) -> float:
    """Mean effective channel gain under distortion-minimising combining.

    For one receive-combined stream the gain is (n - m + 1) * E{Z} with
    Z = sum(xi_i) / sum(xi_i / lambda_i), xi_i iid unit exponentials and
    lambda_i the receive-correlation eigenvalues.  E{Z} is evaluated by
    piecewise integration of the tail of Z's distribution; each piece is a
    polynomial-plus-log antiderivative accumulated with compensated
    summation.  m = 1 degenerates to n * lambda.
    """
    lam = _sorted_positive(eigenvalues)
    m_dim = lam.size
    if n <= m_dim:
        raise DomainError(f"need more transmit antennas than eigenvalues, got n={n}")
    if m_dim == 1:
        return n * float(lam[0])
    _check_separation(lam)
    mu = [1.0 / float(l) for l in lam]          # descending
    terms: list[float] = []
    for seg in range(1, m_dim):
        for a in range(1, seg + 1):
            for b in range(seg + 1, m_dim + 1):
                mun, mut = mu[a - 1], mu[b - 1]
                den = mun - mut
                for i in range(1, seg + 1):
                    if i != a:
                        den *= mun - mu[i - 1]
                for j in range(seg + 1, m_dim + 1):
                    if j != b:
                        den *= mu[j - 1] - mut
                # tail piece g(u) = (mun-u)^seg (u-mut)^(m-seg-1); the
                # contribution is the integral of g'(u)/u over the segment
                piece: list[float] = []
                for s in range(0, seg + 1):
                    for r in range(0, m_dim - seg):
                        coef = (math.comb(seg, s) * math.comb(m_dim - seg - 1, r)
                                * mun ** (seg - s) * (-1) ** s
                                * (-mut) ** (m_dim - seg - 1 - r))
                        k = s + r
                        if k == 1:
                            piece.append(coef * math.log(mu[seg] / mu[seg - 1]))
                        elif k >= 2:
                            piece.append(coef * k / (k - 1)
                                         * (mu[seg] ** (k - 1) - mu[seg - 1] ** (k - 1)))
                terms.append(math.fsum(piece) / den)
    return (n - m_dim + 1) * math.fsum(terms)


def _capped_partitions(total: int, caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    if len(caps) == 1:
        if 0 <= total <= caps[0]:
            yield (total,)
        return
    for head in range(0, min(caps[0], total) + 1):
        for rest in _capped_partitions(total - head, caps[1:]):
            yield (head,) + rest


def _inversions(perm: tuple[int, ...]) -> int:
    return sum(1 for i in range(len(perm))
               for j in range(i + 1, len(perm)) if perm[i] > perm[j])


def expected_effective_gain(eigenvalues: Sequence[float], n: int) -> float:
    """Mean largest eigenvalue of H H^H for a receive-correlated channel.

    H is m x n with iid columns of covariance diag(eigenvalues); the value
    equals the mean effective gain after maximum ratio combining.  The
    permutation/subset/partition sum is exact for distinct eigenvalues and
    is accumulated with compensated summation.  Sizes beyond m = 4 or
    n = 16 are rejected (term count and cancellation both explode).
    """
    lam = _sorted_positive(eigenvalues)
    m_dim = lam.size
    if n < m_dim:
        raise DomainError(f"need n >= m, got n={n}, m={m_dim}")
    if m_dim == 1:
        return n * float(lam[0])
    if m_dim > _MAX_COMB_M or n > _MAX_COMB_N:
        raise DomainError(
            f"closed form supported for m <= {_MAX_COMB_M}, n <= {_MAX_COMB_N}")
    _check_separation(lam)
    delta = np.array([[lam[j] ** (n - i + 1) * math.factorial(n - i)
                       for j in range(m_dim)] for i in range(1, m_dim + 1)])
    det_delta = float(np.linalg.det(delta))
    fact_prod = 1.0
    for ell in range(n - m_dim + 1, n + 1):
        fact_prod *= math.factorial(ell - 1)
    outer: list[float] = []
    for m_idx in range(1, m_dim + 1):
        for zeta in itertools.permutations(range(1, m_dim + 1)):
            num = fact_prod
            for pos in range(1, m_dim + 1):
                num *= lam[zeta[pos - 1] - 1] ** (n - pos + 1)
            sign = (-1) ** (_inversions(zeta) + m_idx + 1)
            prefactor = num / (sign * det_delta)
            inner: list[float] = []
            for beta in itertools.combinations(range(1, m_dim + 1), m_idx):
                lam_sel = [float(lam[zeta[b - 1] - 1]) for b in beta]
                caps = [n - b for b in beta]
                inv_sum = math.fsum(1.0 / l for l in lam_sel)
                for ell in range(0, sum(caps) + 1):
                    for part in _capped_partitions(ell, caps):
                        val = math.factorial(ell) * inv_sum ** (-(ell + 1))
                        for kk, l in zip(part, lam_sel):
                            val /= math.factorial(kk) * l ** kk
                        inner.append(val)
            outer.append(prefactor * math.fsum(inner))
    return math.fsum(outer)


def rate_loss_bound(
    regime: str,
    power: float,
    n: int,
    m: int,
    *,
    bits: float | None = None,
    distortion: float | None = None,
    rx_corr: np.ndarray | None = None,
    gain: float | None = None,
    training: np.ndarray | None = None,
    noise_var: float | None = None,
    training_power: float | None = None,
) -> BoundReport:
    """Upper bound on the mean per-user rate loss of imperfect side information.

    Regimes (random selection, equal power allocation):
      * ``BD-Q``    log2 det(I_m + (P/m) D R)         needs bits|distortion, rx_corr
      * ``ZFC-Q``   log2(1 + (P/n) D G)               needs bits|distortion, gain
      * ``BD-EST``  log2 det(I_m + P(n-m)/n (R^{-T} + T^H T / s2)^{-1})
                                                      needs rx_corr, training, noise_var
      * ``ZFC-EST`` log2(1 + P(n-1)/n / (1/G + Psi/s2))
                                                      needs gain, training_power, noise_var

    ``rx_corr`` includes any large-scale gain; ``gain`` is the mean effective
    channel gain (see :func:`qbc_gain` / :func:`expected_effective_gain`).
    ``noise_var`` equal to zero means perfect estimation and returns 0.
    """
    key = regime.upper().replace("_", "-")
    if power < 0.0:
        raise DomainError("power must be nonnegative")
    inputs = {"regime": key, "power": power, "n": n, "m": m}
    if key in ("BD-Q", "ZFC-Q"):
        if distortion is None:
            if bits is None:
                raise DomainError("quantized regimes need bits or distortion")
            distortion = (distortion_bd(n, m, bits) if key == "BD-Q"
                          else distortion_qbc(n, m, bits))
        inputs["distortion"] = distortion
        if key == "BD-Q":
            if rx_corr is None:
                raise DomainError("BD-Q needs the receive correlation")
            r = np.atleast_2d(np.asarray(rx_corr))
            sign, logdet = np.linalg.slogdet(
                np.eye(m) + (power / m) * distortion * r)
            value = logdet / _LN2
        else:
            if gain is None:
                raise DomainError("ZFC-Q needs the mean effective gain")
            value = math.log2(1.0 + power / n * distortion * gain)
    elif key == "BD-EST":
        if rx_corr is None or training is None or noise_var is None:
            raise DomainError("BD-EST needs rx_corr, training and noise_var")
        if noise_var == 0.0:
            value = 0.0
        else:
            t = np.asarray(training)
            r = np.atleast_2d(np.asarray(rx_corr))
            err = np.linalg.inv(np.linalg.inv(r.T) + t.conj().T @ t / noise_var)
            sign, logdet = np.linalg.slogdet(
                np.eye(m) + power * (n - m) / n * err)
            value = logdet / _LN2
    elif key == "ZFC-EST":
        if gain is None or training_power is None or noise_var is None:
            raise DomainError("ZFC-EST needs gain, training_power and noise_var")
        if noise_var == 0.0:
            value = 0.0
        else:
            value = math.log2(
                1.0 + power * (n - 1) / n / (1.0 / gain + training_power / noise_var))
    else:
        raise DomainError(f"unknown rate-loss regime {regime!r}")
    return BoundReport(kind=f"rate-loss-{key.lower()}", value=float(value),
                       direction="upper", inputs=inputs)


def feedback_bit_law(n: int, m: int, power: float, constant: float = 0.0) -> BoundReport:
    """Total direction-feedback bits keeping full multiplexing gain.

    B_total = n(n-m) log2(P) + constant across scheduled users; combining
    users carry B_total/n bits each while multi-stream users carry m times
    more (there are m times fewer of them).
    """
    if power <= 1.0:
        raise DomainError("power must exceed one")
    total = n * (n - m) * math.log2(power) + constant
    return BoundReport(
        kind="total-feedback-bits", value=total, direction="exact",
        inputs={"n": n, "m": m, "power": power, "constant": constant,
                "per_user_zfc": total / n, "per_user_bd": m * total / n})


@dataclass(frozen=True)
class BitRule:
    """Per-user codebook sizes hitting a target post-quantization gap."""

    bd_bits: int
    zfc_bits: int
    bd_constant: float
    zfc_constant: float
    gap_bits_per_stream: float


def quantization_bit_rule(
    n: int,
    m: int,
    power: float,
    *,
    gap_bits_per_stream: float = 1.0,
    zfc_gain: float | None = None,
) -> BitRule:
    """Bits per user so each quantized-loss bound equals the target gap.

    Solves the two distortion bounds for B at loss ``gap_bits_per_stream``
    per stream (uncorrelated receive covariance for the multi-stream bound;
    ``zfc_gain`` defaults to the uncorrelated value n - m + 1).  Results are
    rounded up and floored at zero.  Both laws have the form
    (n - m) log2 P - constant per stream; the constants are reported so
    output artifacts can record them.
    """
    if power <= 0.0 or gap_bits_per_stream <= 0.0:
        raise DomainError("power and gap must be positive")
    t = m * (n - m)
    a = math.gamma(1.0 / t) / t
    log_gprod = -math.lgamma(t + 1) + math.fsum(
        math.lgamma(n - i + 1) - math.lgamma(m - i + 1) for i in range(1, m + 1))
    delta = 2.0 ** gap_bits_per_stream - 1.0
    bd_exact = t * math.log2(a * power / (m * delta)) - log_gprod * _LOG2E
    bd_const = (n - m) * math.log2(m * delta / a) + log_gprod * _LOG2E / m
    gain = float(zfc_gain) if zfc_gain is not None else float(n - m + 1)
    zfc_exact = ((n - m) * math.log2(power * gain / (n * delta))
                 - math.log2(math.comb(n - 1, m - 1)))
    zfc_const = ((n - m) * math.log2(n * delta / gain)
                 + math.log2(math.comb(n - 1, m - 1)))
    return BitRule(
        bd_bits=max(0, math.ceil(bd_exact - 1e-9)),
        zfc_bits=max(0, math.ceil(zfc_exact - 1e-9)),
        bd_constant=bd_const, zfc_constant=zfc_const,
        gap_bits_per_stream=gap_bits_per_stream)


def training_power_law(
    power: Sequence[float],
    mode: str = "proportional",
    *,
    coefficient: float = 1.0,
    fixed_value: float = 10.0,
) -> np.ndarray:
    """Training power schedule over a transmit-power sweep.

    ``proportional`` keeps Psi = coefficient * P (the regime that preserves
    the multiplexing gain; coefficient m for multi-stream users matches
    equal uplink/downlink SNR).  ``fixed`` pins Psi to a constant, which
    caps the achievable slope.
    """
    p = np.asarray(power, dtype=float)
    if p.size == 0:
        raise DomainError("power sweep must be nonempty")
    if np.any(p <= 0.0):
        raise DomainError("powers must be positive")
    if mode == "proportional":
        if coefficient <= 0.0:
            raise DomainError("coefficient must be positive")
        return coefficient * p
    if mode == "fixed":
        if fixed_value <= 0.0:
            raise DomainError("fixed training power must be positive")
        return np.full_like(p, fixed_value)
    raise DomainError(f"unknown training power mode {mode!r}")


# ------------------------------------------------------------------ Monte Carlo


@dataclass(frozen=True)
class EffectiveGainStats:
    mean_gain: float
    mean_log2_gain: float
    se_gain: float
    se_log2_gain: float
    trials: int


def mc_effective_channel_stats(
    eigenvalues: Sequence[float],
    n: int,
    trials: int,
    rng: np.random.Generator,
    chunk: int = 65536,
) -> EffectiveGainStats:
    """Monte Carlo mean of the largest eigenvalue of H H^H and of its log2.

    Companion check for :func:`expected_effective_gain` and plug-in source
    for the z terms of :func:`beta_bd_zfc`.
    """
    lam = _sorted_positive(eigenvalues)
    m_dim = lam.size
    scale = np.sqrt(lam)[:, None]
    s1 = s2 = l1 = l2 = 0.0
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        g = (rng.standard_normal((t, m_dim, n))
             + 1j * rng.standard_normal((t, m_dim, n))) * np.sqrt(0.5)
        h = scale * g
        top = np.linalg.eigvalsh(h @ h.conj().transpose(0, 2, 1))[:, -1]
        logs = np.log2(top)
        s1 += float(np.sum(top)); s2 += float(np.sum(top ** 2))
        l1 += float(np.sum(logs)); l2 += float(np.sum(logs ** 2))
        done += t
    mean = s1 / trials
    mean_log = l1 / trials
    var = max(s2 / trials - mean ** 2, 0.0)
    var_log = max(l2 / trials - mean_log ** 2, 0.0)
    return EffectiveGainStats(
        mean_gain=mean, mean_log2_gain=mean_log,
        se_gain=math.sqrt(var / trials), se_log2_gain=math.sqrt(var_log / trials),
        trials=trials)


_phased_sqrt = rotate_correlation_sqrt


@dataclass(frozen=True)
class BetaEstimate:
    value: float
    se: float
    trials: int
    inputs: dict = field(default_factory=dict)


def mc_beta_bd_zfc(
    n: int,
    m: int,
    trials: int,
    rng: np.random.Generator,
    *,
    rho_rx: float = 0.0,
    rho_tx: float = 0.0,
    chunk: int = 4096,
) -> BetaEstimate:
    """Monte Carlo estimate of the high-power offset gap under random selection.

    Per trial, n/m multi-stream users are precoded in each other's null
    spaces and n combining users apply maximum ratio combining followed by
    zero forcing; the sample is the difference of the two offset sums.
    Correlation phases are drawn per user.  The random stream is consumed
    identically for every (rho_rx, rho_tx), so estimates over a correlation
    sweep are positively coupled and cross zero smoothly.
    """
    if m < 1 or n <= m or n % m != 0:
        raise DomainError(f"need m < n with m dividing n, got n={n}, m={m}")
    s_bd = n // m
    rx_base = correlation_sqrt(exp_correlation(rho_rx, 0.0, m))
    tx_base = correlation_sqrt(exp_correlation(rho_tx, 0.0, n))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        # multi-stream side: s_bd users of m antennas each
        g = (rng.standard_normal((t, s_bd, m, n))
             + 1j * rng.standard_normal((t, s_bd, m, n))) * np.sqrt(0.5)
        th_r = rng.uniform(0.0, 2.0 * np.pi, size=(t, s_bd))
        th_t = rng.uniform(0.0, 2.0 * np.pi, size=(t, s_bd))
        h = _phased_sqrt(rx_base, th_r) @ g @ _phased_sqrt(tx_base, th_t)
        bd_sum = np.zeros(t)
        for s in range(s_bd):
            others = np.concatenate([h[:, j] for j in range(s_bd) if j != s], axis=1)
            _, _, vh = np.linalg.svd(others, full_matrices=True)
            basis = vh[:, n - m:, :].conj().transpose(0, 2, 1)
            eff = h[:, s] @ basis
            sign, logdet = np.linalg.slogdet(eff @ eff.conj().transpose(0, 2, 1))
            bd_sum += logdet * _LOG2E
        # combining side: n independent users
        g = (rng.standard_normal((t, n, m, n))
             + 1j * rng.standard_normal((t, n, m, n))) * np.sqrt(0.5)
        th_r = rng.uniform(0.0, 2.0 * np.pi, size=(t, n))
        th_t = rng.uniform(0.0, 2.0 * np.pi, size=(t, n))
        h = _phased_sqrt(rx_base, th_r) @ g @ _phased_sqrt(tx_base, th_t)
        u, _, _ = np.linalg.svd(h)
        comb = u[..., :, 0]
        rows = np.einsum("tkm,tkmn->tkn", comb.conj(), h)
        gram = rows @ rows.conj().transpose(0, 2, 1)
        inv_diag = np.diagonal(np.linalg.inv(gram), axis1=1, axis2=2).real
        zfc_sum = np.sum(np.log2(1.0 / inv_diag), axis=1)
        sample = bd_sum - zfc_sum
        total += float(np.sum(sample))
        total_sq += float(np.sum(sample ** 2))
        done += t
    mean = total / trials
    var = max(total_sq / trials - mean ** 2, 0.0)
    return BetaEstimate(
        value=mean, se=math.sqrt(var / trials), trials=trials,
        inputs={"n": n, "m": m, "rho_rx": rho_rx, "rho_tx": rho_tx})
