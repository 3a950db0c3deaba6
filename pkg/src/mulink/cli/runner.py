"""Monte Carlo scenario runner with deterministic, order-independent output.

Every trial owns three independent random streams (channel, CSI acquisition,
scheduling) derived from the scenario seed and the trial index, so results do
not depend on execution order or on how trials are split across worker
processes.  The channel stream is consumed identically by every strategy,
which pairs the strategies on common random numbers: curves produced from
the same seed cross smoothly.

Rates are always evaluated on the true channels; imperfect CSI only affects
what the scheduler and precoder get to see.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..analytics import (
    beta_bd_zfc,
    distortion_bd,
    distortion_qbc,
    expected_effective_gain,
    mc_beta_bd_zfc,
    qbc_gain,
    quantization_bit_rule,
    separate_eigenvalues,
)
from ..channel import (
    correlation_sqrt,
    draw_cell_users,
    exp_correlation,
    rotate_correlation_sqrt,
)
from ..combining import mesc, mmse_combiner, mrc, qbc
from ..csi import mmse_estimate, rvq_codebook, quantize_subspace, simulate_uplink, training_matrix
from ..errors import DomainError
from ..precoding import bd_precoder, met_precoder, su_svd_precoder, zfc_precoder
from ..rates import sum_rate
from ..scheduling import cbsus, random_schedule, stat_preselect, stream_histogram
from .scenario import Scenario, scenario_hash

_CHANNEL, _CSI, _SCHED = 0, 1, 2
_TWO_PI = 2.0 * math.pi

CSV_COLUMNS = [
    "scenario_id", "kind", "strategy", "csi", "scheduler",
    "snr_db", "rx_rho", "tx_rho", "k_users", "trials", "seed",
    "scenario_hash", "mean_sum_rate", "ci95_halfwidth",
    "mean_scheduled_users", "aux",
]


@dataclass(frozen=True)
class ResultRow:
    """One aggregated output record (either a sum-rate point or an offset-gap
    point); ``aux`` carries side information such as stream histograms,
    resolved codebook sizes or analytic bound values."""

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
    scenario_hash: str
    mean_sum_rate: float
    ci95_halfwidth: float
    mean_scheduled_users: float | None
    aux: dict = field(default_factory=dict)


# --------------------------------------------------------------- scenario context


@dataclass(frozen=True)
class _Context:
    """Per-scenario precomputation shared by all trials (picklable)."""

    power: float
    rx_sqrt: np.ndarray            # (m, m) zero-phase correlation square root
    tx_sqrt: np.ndarray            # (n, n)
    rx_eigs_desc: np.ndarray       # descending eigenvalues of the rx correlation
    rx_eigvecs_desc: np.ndarray    # matching eigenvector columns
    mrc_gain_base: float           # E ||H^H c||^2 at unit gain, MRC combiner
    qbc_gain_base: float           # same under quantization-based combining
    bits: int | None
    bit_constant: float | None
    dist_bd: float | None          # codebook distortion factors at `bits`
    dist_qbc: float | None
    psi_per_dim: float | None      # training power per effective dimension


def _build_context(sc: Scenario) -> _Context:
    power = 1.0 if sc.cell is not None else 10.0 ** (sc.snr_db / 10.0)
    rx_corr = exp_correlation(sc.rx_rho, 0.0, sc.m)
    tx_corr = exp_correlation(sc.tx_rho, 0.0, sc.n)
    eigs, vecs = np.linalg.eigh(rx_corr)
    order = np.argsort(eigs)[::-1]
    eigs_desc = np.clip(eigs[order], 0.0, None)
    vecs_desc = vecs[:, order]

    if sc.m == 1:
        mrc_base = float(sc.n)
        qbc_base = float(sc.n)
    else:
        sep = separate_eigenvalues(eigs_desc)
        mrc_base = expected_effective_gain(sep, sc.n)
        qbc_base = qbc_gain(sep, sc.n)

    bits = bit_constant = dist_b = dist_q = None
    if sc.csi == "quantized":
        if sc.bits is not None:
            bits = sc.bits
        else:
            zfc_gain = None if sc.rx_rho == 0.0 else qbc_base
            rule = quantization_bit_rule(
                sc.n, sc.m, power, gap_bits_per_stream=sc.bit_gap, zfc_gain=zfc_gain)
            bits = rule.bd_bits if sc.strategy == "BD" else rule.zfc_bits
            bit_constant = rule.bd_constant if sc.strategy == "BD" else rule.zfc_constant
        dist_b = distortion_bd(sc.n, sc.m, bits)
        dist_q = distortion_qbc(sc.n, sc.m, bits)

    psi = None
    if sc.csi == "estimated":
        if sc.training_mode == "proportional":
            psi = sc.training_coefficient * power
        else:
            psi = sc.training_power
    return _Context(
        power=power,
        rx_sqrt=correlation_sqrt(rx_corr),
        tx_sqrt=correlation_sqrt(tx_corr),
        rx_eigs_desc=eigs_desc,
        rx_eigvecs_desc=vecs_desc,
        mrc_gain_base=mrc_base,
        qbc_gain_base=qbc_base,
        bits=bits,
        bit_constant=bit_constant,
        dist_bd=dist_b,
        dist_qbc=dist_q,
        psi_per_dim=psi,
    )


def _stream(seed: int, tag: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(tag, trial)))


# --------------------------------------------------------------------- one trial


def _draw_channels(ctx: _Context, sc: Scenario, gains: np.ndarray, rng: np.random.Generator):
    """All K true channels plus each user's receive-correlation square root."""
    theta = rng.uniform(0.0, _TWO_PI, size=(sc.k, 2))
    g = rng.standard_normal((sc.k, sc.m, sc.n)) + 1j * rng.standard_normal((sc.k, sc.m, sc.n))
    g *= math.sqrt(0.5)
    rx_sq = rotate_correlation_sqrt(ctx.rx_sqrt, theta[:, 0])
    rx_sq = rx_sq * np.sqrt(gains)[:, None, None]
    tx_sq = rotate_correlation_sqrt(ctx.tx_sqrt, theta[:, 1])
    h = rx_sq @ g @ tx_sq
    return h, rx_sq, theta


def _pool_ids(ctx: _Context, sc: Scenario, gains: np.ndarray) -> list[int]:
    """Users that get to spend CSI acquisition resources."""
    if sc.csi == "perfect":
        # Explicit pool caps the candidate set even without feedback cost,
        # so baselines can be pool-matched against limited-feedback runs.
        return list(range(sc.pool if sc.pool is not None else sc.k))
    if sc.strategy == "ZFC":
        keep = sc.pool if sc.pool is not None else sc.k
        return list(range(keep))
    if sc.strategy == "BD":
        keep = sc.pool if sc.pool is not None else max(1, sc.k // sc.m)
        if sc.scheduler == "stat_preselect":
            return sorted(stat_preselect({u: float(gains[u]) for u in range(sc.k)}, keep))
        return list(range(keep))
    # MET with estimated CSI: everyone is in the pool, the per-user
    # dimension count is decided in the acquisition step.
    return list(range(sc.k))


def _met_dim_counts(sc: Scenario, gains: np.ndarray, eigs_desc: np.ndarray) -> dict[int, int]:
    """Dimensions acquired per user: the K strongest statistical eigenmodes.

    Each user contributes m candidate modes with long-term strength
    gain * lambda_i; the strongest K across the population win.  Users left
    with zero modes spend no training resources.
    """
    modes = [(-(float(gains[u]) * float(eigs_desc[i])), u, i)
             for u in range(sc.k) for i in range(sc.m)]
    modes.sort()
    counts: dict[int, int] = {}
    for _, u, _i in modes[:sc.k]:
        counts[u] = counts.get(u, 0) + 1
    return counts


@dataclass
class _Acquired:
    mats: dict[int, np.ndarray]
    prelim: dict[int, np.ndarray]
    interference: dict[int, float | np.ndarray] | None


def _acquire(ctx, sc, h, rx_sq, theta, gains, pool, rng) -> _Acquired:
    mats: dict[int, np.ndarray] = {}
    prelim: dict[int, np.ndarray] = {}
    interference: dict[int, float | np.ndarray] | None = None

    if sc.csi == "perfect":
        for u in pool:
            if sc.strategy == "ZFC":
                c = mrc(h[u])
                prelim[u] = c
                mats[u] = (c.conj().T @ h[u])[0]
            else:
                mats[u] = h[u]
        return _Acquired(mats, prelim, None)

    if sc.csi == "quantized":
        # Each user draws its own codebook; shared books would let users
        # collide on a codeword and make zero forcing singular.
        interference = {}
        if sc.strategy == "ZFC":
            for u in pool:
                book = rvq_codebook(sc.n, 1, ctx.bits, rng)
                if sc.combiner == "MESC":
                    c, idx = mesc(h[u], book, ctx.power, num_streams_total=sc.n)
                else:
                    c, idx = qbc(h[u], book)
                prelim[u] = c
                g_eff = float(gains[u]) * ctx.qbc_gain_base
                mats[u] = math.sqrt(g_eff) * book.entries[idx, :, 0].conj()
                interference[u] = ctx.dist_qbc * g_eff / (sc.n - 1)
        else:  # BD
            factor = sc.n * ctx.dist_bd / (sc.m * (sc.n - sc.m))
            for u in pool:
                book = rvq_codebook(sc.n, sc.m, ctx.bits, rng)
                idx, _ = quantize_subspace(h[u], book)
                scale = math.sqrt(float(gains[u]) * sc.n)
                mats[u] = scale * book.entries[idx].conj().T
                r_k = rx_sq[u] @ rx_sq[u]
                interference[u] = factor * r_k
        return _Acquired(mats, prelim, interference)

    # estimated CSI
    interference = {}
    noise = sc.uplink_noise_var
    if sc.strategy == "ZFC":
        for u in pool:
            c = mrc(h[u])
            prelim[u] = c
            h_eff = c.conj().T @ h[u]
            prior = np.array([[float(gains[u]) * ctx.mrc_gain_base / sc.n]], dtype=complex)
            train = training_matrix(prior, ctx.psi_per_dim, noise)
            y = simulate_uplink(h_eff, train, rng)
            est, err = mmse_estimate(y, train, prior)
            mats[u] = est[0]
            interference[u] = float(err[0, 0].real)
    elif sc.strategy == "BD":
        for u in pool:
            prior = rx_sq[u] @ rx_sq[u]
            train = training_matrix(prior, ctx.psi_per_dim * sc.m, noise)
            y = simulate_uplink(h[u], train, rng)
            est, err = mmse_estimate(y, train, prior)
            mats[u] = est
            interference[u] = err
    else:  # MET: statistical eigenmode combiners ahead of estimation
        if sc.scheduler == "stat_preselect":
            counts = _met_dim_counts(sc, gains, ctx.rx_eigs_desc)
        else:
            counts = {u: sc.m for u in pool}
        for u in pool:
            d = counts.get(u, 0)
            if d == 0:
                continue
            phases = np.exp(1j * theta[u, 0] * np.arange(sc.m))
            comb = (phases[:, None] * ctx.rx_eigvecs_desc)[:, :d]
            h_eff = comb.conj().T @ h[u]
            prior = np.diag(float(gains[u]) * ctx.rx_eigs_desc[:d]).astype(complex)
            train = training_matrix(prior, ctx.psi_per_dim * d, noise)
            y = simulate_uplink(h_eff, train, rng)
            est, err = mmse_estimate(y, train, prior)
            padded = np.zeros((sc.m, sc.n), dtype=complex)
            padded[:d] = est
            mats[u] = padded
            interference[u] = err
    return _Acquired(mats, prelim, interference)


def _schedule_and_precode(ctx, sc, acq: _Acquired, sd_rng):
    pool = sorted(acq.mats)
    robust = sc.scheduler == "cbsus_robust" or (
        sc.scheduler == "stat_preselect" and sc.csi != "perfect")
    terms = acq.interference if robust else None

    if sc.strategy == "MET":
        cap = sc.schedule_size if sc.schedule_size is not None else sc.n
        plan, _ = met_precoder(
            [acq.mats[u] for u in pool], ctx.power, max_streams=cap, user_ids=tuple(pool))
        return plan

    if sc.scheduler == "random":
        if sc.strategy == "ZFC":
            size = min(sc.n, len(pool))
        else:
            size = min(sc.n // sc.m, len(pool))
        if sc.schedule_size is not None:
            size = min(size, sc.schedule_size)
        picked = random_schedule(len(pool), size, sd_rng)
        sched = [pool[i] for i in picked.users]
    else:
        result = cbsus(
            {u: acq.mats[u] for u in pool}, ctx.power, sc.strategy,
            max_size=sc.schedule_size, avg_interference=terms)
        sched = list(result.users)

    if sc.strategy == "ZFC":
        rows = np.vstack([np.asarray(acq.mats[u]).reshape(1, -1) for u in sched])
        return zfc_precoder(rows, ctx.power, "waterfill", user_ids=tuple(sched))
    return bd_precoder([acq.mats[u] for u in sched], ctx.power, "waterfill",
                       user_ids=tuple(sched))


def _trial(ctx: _Context, sc: Scenario, trial: int):
    ch_rng = _stream(sc.seed, _CHANNEL, trial)
    csi_rng = _stream(sc.seed, _CSI, trial)
    sd_rng = _stream(sc.seed, _SCHED, trial)

    if sc.cell is not None:
        users = draw_cell_users(sc.cell, sc.k, ch_rng, transmit_power=1.0)
        gains, dists = users.gains, users.distances_m
    else:
        gains, dists = np.ones(sc.k), None
    h, rx_sq, theta = _draw_channels(ctx, sc, gains, ch_rng)

    if sc.strategy == "SU":
        uid = int(sd_rng.integers(sc.k))
        plan = su_svd_precoder(h[uid], ctx.power, user_id=uid)
    else:
        pool = _pool_ids(ctx, sc, gains)
        acq = _acquire(ctx, sc, h, rx_sq, theta, gains, pool, csi_rng)
        plan = _schedule_and_precode(ctx, sc, acq, sd_rng)

    channels = {u: h[u] for u in plan.users}
    combiners = None
    if sc.strategy == "ZFC":
        combiners = {}
        precs = plan.precoders
        for pos, uid in enumerate(plan.users):
            if sc.mmse_combiner:
                others = [precs[j] for j in range(len(precs)) if j != pos]
                combiners[uid] = mmse_combiner(h[uid], precs[pos], others)
            else:
                combiners[uid] = acq.prelim[uid]
    total, _per_user = sum_rate(channels, plan, combiners)

    if dists is not None:
        sched_d = tuple(float(dists[u]) for u in plan.users)
    else:
        sched_d = ()
    return total, len(plan.users), sched_d, plan.stream_counts


def _trial_block(ctx: _Context, sc: Scenario, trials: list[int]):
    return [(t, _trial(ctx, sc, t)) for t in trials]


# ------------------------------------------------------------------- aggregation


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def run_scenario(sc: Scenario, threads: int = 1) -> ResultRow:
    """Run every trial of a scenario and aggregate to one output row.

    ``threads`` > 1 distributes trials over worker processes; the result is
    identical to the serial run because each trial's randomness depends only
    on (seed, trial index) and the aggregation is carried out in trial order.
    """
    ctx = _build_context(sc)
    outs: list = [None] * sc.trials
    indices = list(range(sc.trials))
    if threads > 1 and sc.trials > 1:
        blocks = [indices[i::threads * 4] for i in range(threads * 4)]
        blocks = [b for b in blocks if b]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for done in pool.map(_trial_block, [ctx] * len(blocks), [sc] * len(blocks), blocks):
                for t, res in done:
                    outs[t] = res
    else:
        for t in indices:
            outs[t] = _trial(ctx, sc, t)

    sums = [o[0] for o in outs]
    mean = math.fsum(sums) / sc.trials
    if sc.trials > 1:
        var = math.fsum((x - mean) ** 2 for x in sums) / (sc.trials - 1)
        ci = 1.96 * math.sqrt(var / sc.trials)
    else:
        ci = 0.0
    mean_sched = math.fsum(o[1] for o in outs) / sc.trials

    aux: dict = {}
    all_d = [d for o in outs for d in o[2]]
    all_s = [s for o in outs for s in o[3]]
    if all_d:
        hist = stream_histogram(np.array(all_d), np.array(all_s), max_streams=sc.m)
        aux["stream_share"] = {k: list(v) for k, v in hist.items()}
    if sc.csi == "quantized":
        aux["bits"] = ctx.bits
        if ctx.bit_constant is not None:
            aux["bit_constant"] = ctx.bit_constant
            aux["bit_gap_target"] = sc.bit_gap
    if sc.csi == "estimated":
        aux["training_power_per_dim"] = ctx.psi_per_dim
        aux["training_mode"] = sc.training_mode

    return ResultRow(
        scenario_id=sc.scenario_id,
        kind="sumrate",
        strategy=sc.strategy,
        csi=sc.csi,
        scheduler=sc.scheduler,
        snr_db=float(sc.cell.edge_snr_db if sc.cell is not None else sc.snr_db),
        rx_rho=sc.rx_rho,
        tx_rho=sc.tx_rho,
        k_users=sc.k,
        trials=sc.trials,
        seed=sc.seed,
        scenario_hash=scenario_hash(sc),
        mean_sum_rate=mean,
        ci95_halfwidth=ci,
        mean_scheduled_users=mean_sched,
        aux=_jsonify(aux),
    )


def run_beta_job(job) -> ResultRow:
    """Monte Carlo offset-gap point with analytic envelope where available.

    ``job`` provides job_id, n, m, side ('rx' | 'tx' | 'both'), rho, trials
    and seed.  The closed-form envelope applies to receive-side correlation
    only, so 'tx' and 'both' rows carry just the Monte Carlo estimate.
    """
    if job.side not in ("rx", "tx", "both"):
        raise DomainError(f"unknown correlation side {job.side!r}")
    rho_rx = job.rho if job.side in ("rx", "both") else 0.0
    rho_tx = job.rho if job.side in ("tx", "both") else 0.0
    rng = np.random.default_rng(np.random.SeedSequence(entropy=job.seed))
    est = mc_beta_bd_zfc(job.n, job.m, job.trials, rng, rho_rx=rho_rx, rho_tx=rho_tx)

    aux: dict = {"side": job.side}
    if job.side == "rx":
        eigs = np.linalg.eigvalsh(exp_correlation(job.rho, 0.0, job.m))
        sep = separate_eigenvalues(np.clip(eigs, 0.0, None))
        diff = beta_bd_zfc(job.n, job.m,
                           [sep] * (job.n // job.m), [sep] * job.n)
        aux.update(
            lower=diff.lower, upper=diff.upper,
            homogeneous_upper=diff.homogeneous_upper, first_term=diff.first_term)
    return ResultRow(
        scenario_id=job.job_id,
        kind="beta",
        strategy="BD-ZFC",
        csi="perfect",
        scheduler="random",
        snr_db=float("nan"),
        rx_rho=rho_rx,
        tx_rho=rho_tx,
        k_users=job.n,
        trials=job.trials,
        seed=job.seed,
        scenario_hash="",
        mean_sum_rate=est.value,
        ci95_halfwidth=1.96 * est.se,
        mean_scheduled_users=None,
        aux=_jsonify(aux),
    )


# ------------------------------------------------------------------- CSV output


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.10g}"
    return str(value)


def write_rows(rows: list[ResultRow], path: str | Path) -> None:
    """Write result rows as CSV with a fixed column order and float format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row.scenario_id, row.kind, row.strategy, row.csi, row.scheduler,
                _fmt(row.snr_db), _fmt(row.rx_rho), _fmt(row.tx_rho),
                row.k_users, row.trials, row.seed, row.scenario_hash,
                _fmt(row.mean_sum_rate), _fmt(row.ci95_halfwidth),
                _fmt(row.mean_scheduled_users),
                json.dumps(row.aux, sort_keys=True, separators=(",", ":")),
            ])
