"""Receive combiner selection.

A combiner turns the M-antenna observation of user k into d_k effective
streams; the transmitter then only needs the d_k-dimensional effective
channel.  MRC maximises gain, QBC minimises quantization error jointly with
the codeword choice, MESC maximises expected SINR, and the MMSE combiner is
applied at data transmission once the actual precoders are known.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = ["mrc", "qbc", "mesc", "mmse_combiner"]


def _fix_phase(columns: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant entry is real positive.

    Singular vectors are only defined up to a unit phase; this pins the
    convention so equal inputs give bit-equal combiners.
    """
    out = columns.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        mags = np.abs(col)
        top = mags.max()
        if top == 0.0:
            continue
        lead = int(np.argmax(mags > 1e-12 * top))
        phase = col[lead] / abs(col[lead])
        out[:, j] = col * np.conj(phase)
    return out


def _codeword_matrix(codebook) -> np.ndarray:
    entries = getattr(codebook, "entries", codebook)
    entries = np.asarray(entries)
    if entries.ndim == 3:
        if entries.shape[2] != 1:
            raise DomainError("combiner selection needs rank-one codewords")
        entries = entries[:, :, 0]
    return entries


def mrc(channel: np.ndarray, d: int = 1) -> np.ndarray:
    """Maximum ratio combining: the d dominant left singular vectors.

    Columns are orthonormal and phase-fixed.  Singular values are taken in
    LAPACK's descending order; exact ties keep that order.
    """
    channel = np.atleast_2d(np.asarray(channel))
    m = channel.shape[0]
    if not 1 <= d <= m:
        raise DomainError(f"need 1 <= d <= {m}, got {d}")
    u, _, _ = np.linalg.svd(channel, full_matrices=False)
    return _fix_phase(u[:, :d])


def qbc(channel: np.ndarray, codebook) -> tuple[np.ndarray, int]:
    """Quantization-based combining.

    Jointly picks the codeword and the unit-norm combiner that minimise the
    chordal distance between the effective channel direction and the
    codeword.  The achievable effective directions form the row space of
    the channel, so the best combiner simply projects the codeword onto
    that space; the squared quantization error is one minus the squared
    projection norm.

    Returns:
        (combiner (M, 1), selected codeword index).  Ties go to the lowest
        index.
    """
    channel = np.atleast_2d(np.asarray(channel))
    m, n = channel.shape
    if m >= n:
        raise DomainError("receive combining assumes fewer antennas at the user")
    entries = _codeword_matrix(codebook)
    if entries.shape[1] != n:
        raise DomainError("codeword length does not match transmit antennas")
    u, s, vh = np.linalg.svd(channel, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * s[0]))
    basis = vh[:rank].conj().T                     # (n, rank) row-space basis
    proj = entries.conj() @ basis                  # (size, rank)
    err = 1.0 - np.sum(np.abs(proj) ** 2, axis=1)
    index = int(np.argmin(err))
    # Map the winning codeword back to a combiner: c solves H^H c ∝ P u.
    coeff = basis.conj().T @ entries[index]        # rank-space coordinates
    comb = u[:, :rank] @ (coeff / s[:rank])
    norm = np.linalg.norm(comb)
    if norm == 0.0:
        raise DomainError("codeword is orthogonal to the channel row space")
    return _fix_phase((comb / norm)[:, None]), index


def mesc(
    channel: np.ndarray,
    codebook,
    power: float,
    num_streams_total: int | None = None,
) -> tuple[np.ndarray, int]:
    """Maximum expected SINR combining.

    For every codeword u the SINR-optimal combiner is proportional to
    (I + (P/L) H (I - u u^H) H^H)^{-1} H u with L the total number of
    streams the transmitter multiplexes (defaults to the number of transmit
    antennas).  The codeword maximising the resulting expected SINR wins.
    At high power the selection coincides with QBC; at low power it leans
    toward effective channel gain.
    """
    channel = np.atleast_2d(np.asarray(channel))
    m, n = channel.shape
    if power <= 0.0:
        raise DomainError("power must be positive")
    entries = _codeword_matrix(codebook)
    if entries.shape[1] != n:
        raise DomainError("codeword length does not match transmit antennas")
    loading = power / float(num_streams_total if num_streams_total else n)
    hu = channel @ entries.T                       # columns H u_i -> (m, size)
    gram = channel @ channel.conj().T
    size = entries.shape[0]
    a = np.broadcast_to(np.eye(m, dtype=complex) + loading * gram, (size, m, m)).copy()
    outer = hu.T[:, :, None] * hu.T.conj()[:, None, :]
    a -= loading * outer
    x = np.linalg.solve(a, hu.T[:, :, None])[:, :, 0]      # (size, m)
    sinr = loading * np.sum(hu.T.conj() * x, axis=1).real
    index = int(np.argmax(sinr))
    comb = x[index]
    return _fix_phase((comb / np.linalg.norm(comb))[:, None]), index


def mmse_combiner(
    channel: np.ndarray,
    own_precoder: np.ndarray,
    other_precoders: list[np.ndarray] | tuple[np.ndarray, ...] = (),
) -> np.ndarray:
    """MMSE receive combiner for data transmission.

    Takes the d dominant left singular vectors of (I + J)^{-1} H W with J
    the received interference covariance from the other users' precoders.
    Columns come out orthonormal via the SVD and are phase-fixed.
    """
    channel = np.atleast_2d(np.asarray(channel))
    own_precoder = np.asarray(own_precoder)
    if own_precoder.ndim == 1:
        own_precoder = own_precoder[:, None]
    m = channel.shape[0]
    d = own_precoder.shape[1]
    if d > m:
        raise DomainError("cannot extract more streams than receive antennas")
    interference = np.eye(m, dtype=complex)
    for w in other_precoders:
        hw = channel @ (w[:, None] if np.asarray(w).ndim == 1 else w)
        interference += hw @ hw.conj().T
    filtered = np.linalg.solve(interference, channel @ own_precoder)
    u, _, _ = np.linalg.svd(filtered, full_matrices=False)
    return _fix_phase(u[:, :d])
