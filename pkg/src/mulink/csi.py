"""Channel state acquisition: random codebook quantization and MMSE uplink
training.

Quantized feedback conveys only a subspace (direction information); training
based estimation returns a linear MMSE estimate plus its error covariance.
Uplink pilots follow the reversed-channel convention Y = H_eff^T T + N with
noise variance ``noise_var`` per entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceLimitError
from .precoding import waterfill

__all__ = [
    "Codebook",
    "TrainingConfig",
    "rvq_codebook",
    "row_space_basis",
    "chordal_distance",
    "quantize_subspace",
    "training_matrix",
    "simulate_uplink",
    "mmse_estimate",
]

_MAX_BITS = 24


@dataclass(frozen=True)
class Codebook:
    """Random vector quantization codebook of semi-unitary matrices."""

    entries: np.ndarray        # (size, n_tx, d)
    bits: int

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[2]


def rvq_codebook(n_tx: int, d: int, bits: int, rng: np.random.Generator) -> Codebook:
    """Draw 2^bits isotropic d-dimensional subspaces of C^n_tx.

    Gaussian matrices orthonormalised column by column give Haar-distributed
    semi-unitary codewords.  ``bits`` above 24 is rejected to keep the
    codebook within a sane memory budget.

    Args:
        n_tx: ambient dimension (transmit antennas).
        d: codeword rank, 1 <= d < n_tx.
        bits: codebook size exponent, >= 0.
        rng: numpy Generator; consumed deterministically.
    """
    if not 1 <= d < n_tx:
        raise DomainError(f"need 1 <= d < {n_tx}, got {d}")
    if bits < 0:
        raise DomainError("bits must be nonnegative")
    if bits > _MAX_BITS:
        raise ResourceLimitError(
            f"codebook of 2^{bits} entries exceeds the memory budget (max 2^{_MAX_BITS})")
    size = 1 << bits
    # One draw viewed as complex: half the RNG work of separate re/im draws.
    g = rng.standard_normal((size, n_tx, d, 2)).view(np.complex128)[..., 0]
    # batched modified Gram-Schmidt; d is tiny so the python loop is cheap
    for j in range(d):
        col = g[:, :, j]
        for i in range(j):
            prev = g[:, :, i]
            col -= np.sum(prev.conj() * col, axis=1, keepdims=True) * prev
        col /= np.linalg.norm(col, axis=1, keepdims=True)
    return Codebook(entries=g, bits=bits)


def row_space_basis(rows: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis (as columns) of the span of effective channel rows.

    A matrix whose rows are h_k^H spans the same subspace of C^n that the
    achievable effective channels h = H^H c live in.
    """
    rows = np.atleast_2d(np.asarray(rows))
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return vh[:rank].conj().T


def chordal_distance(rows: np.ndarray, codeword: np.ndarray) -> float:
    """Chordal distance between the row space of ``rows`` and a codeword.

    d(B, U) = sqrt(d - ||B^H U||_F^2) for orthonormal bases B, U of two
    d-dimensional subspaces.  Symmetric, zero iff the subspaces coincide,
    at most sqrt(d).
    """
    basis = row_space_basis(rows)
    cw = np.asarray(codeword)
    if cw.ndim == 1:
        cw = cw[:, None]
    if cw.shape[0] != basis.shape[0]:
        raise DomainError("subspaces live in different ambient dimensions")
    d = cw.shape[1]
    overlap = np.sum(np.abs(basis.conj().T @ cw) ** 2).real
    return float(np.sqrt(max(d - overlap, 0.0)))


def quantize_subspace(rows: np.ndarray, codebook: Codebook) -> tuple[int, float]:
    """Index of the codeword closest to the row space in chordal distance.

    Ties resolve to the lowest index.  Returns (index, distance).
    """
    basis = row_space_basis(rows)
    entries = codebook.entries
    if entries.shape[1] != basis.shape[0]:
        raise DomainError("codebook dimension does not match the channel")
    d = entries.shape[2]
    # ||U_k^H B||_F^2 via one GEMM: (rank, n) x (n, size*d), then reduce.
    flat = np.tensordot(basis.conj().T, entries, axes=([1], [1]))    # (rank, size, d)
    sq = d - np.sum(np.abs(flat) ** 2, axis=(0, 2))
    index = int(np.argmin(sq))
    return index, float(np.sqrt(max(sq[index], 0.0)))


@dataclass(frozen=True)
class TrainingConfig:
    """Uplink pilot matrix with its power budget and noise level."""

    matrix: np.ndarray         # (d, d)
    total_power: float
    noise_var: float


def training_matrix(
    effective_corr: np.ndarray,
    total_power: float,
    noise_var: float,
) -> TrainingConfig:
    """MSE-minimising pilot matrix for the effective receive correlation.

    Pilot energy water-fills over the eigenvalues of the effective
    correlation (gains lambda_i / noise_var), and the pilots are aligned
    with the eigenvectors.  The symmetric form T = conj(V) diag(sqrt(q)) V^T
    is used so that, under the reversed-channel pilot convention, the
    resulting estimation error covariance is exactly the eigen-aligned
    closed form for complex eigenvector matrices as well.

    Spending zero power is allowed and yields the zero matrix (the
    estimator then returns the prior mean).
    """
    effective_corr = np.atleast_2d(np.asarray(effective_corr))
    if noise_var <= 0.0:
        raise DomainError("uplink noise variance must be positive")
    if total_power < 0.0:
        raise DomainError("training power must be nonnegative")
    lam, vecs = np.linalg.eigh(effective_corr)
    if lam[0] < -1e-12 * max(lam[-1], 1.0):
        raise DomainError("effective correlation must be PSD")
    lam = np.clip(lam, 0.0, None)
    with np.errstate(divide="ignore"):
        gains = np.where(lam > 0.0, lam / noise_var, 0.0)
    q = waterfill(gains, total_power)
    t = (vecs.conj() * np.sqrt(q)) @ vecs.T
    return TrainingConfig(matrix=t, total_power=float(total_power), noise_var=float(noise_var))


def simulate_uplink(
    effective_channel: np.ndarray,
    training: TrainingConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Noisy pilot observation Y = H_eff^T T + N, one column per pilot use."""
    h = np.atleast_2d(np.asarray(effective_channel))     # (d, n)
    noise = rng.standard_normal((h.shape[1], h.shape[0])) \
        + 1j * rng.standard_normal((h.shape[1], h.shape[0]))
    noise *= np.sqrt(training.noise_var / 2.0)
    return h.T @ training.matrix + noise


def mmse_estimate(
    observation: np.ndarray,
    training: TrainingConfig,
    prior_corr: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Linear MMSE estimate of the effective channel from uplink pilots.

    The vectorised estimator for vec(H^T) has prior covariance
    prior_corr ⊗ I and regressor T^T ⊗ I, so both the filter and the error
    covariance factor: the error covariance of vec(H^T) is err_cov ⊗ I with

        err_cov = (prior_corr^{-1} + conj(T) T^T / noise_var)^{-1}.

    Returns:
        (estimate, err_cov): the (d, n) channel estimate and the (d, d)
        per-transmit-antenna error covariance across effective receive
        dimensions.  The true channel decomposes as
        estimate + err_cov^{1/2} E with E white.
    """
    y = np.atleast_2d(np.asarray(observation))
    prior = np.atleast_2d(np.asarray(prior_corr))
    d = prior.shape[0]
    if y.shape[1] != d or training.matrix.shape != (d, d):
        raise DomainError("observation, training and prior dimensions disagree")
    cond = np.linalg.cond(prior)
    if not np.isfinite(cond) or cond > 1e14:
        raise DomainError("prior correlation is singular")
    t = training.matrix
    err_cov = np.linalg.inv(np.linalg.inv(prior) + (t.conj() @ t.T) / training.noise_var)
    filt = err_cov @ t.conj() / training.noise_var       # (d, d)
    estimate = filt @ y.T                                # (d, n)
    return estimate, err_cov
