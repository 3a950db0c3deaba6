"""Spatially correlated Rayleigh fading and circular-cell user geometry.

Channels follow the separable (Kronecker) correlation model

    H = sqrt(gain) * R_rx^(1/2) Hw R_tx^(1/2)

with Hw iid CN(0, 1).  Correlation matrices use the exponential model
parameterised by a magnitude ``rho`` and an angle ``theta``; the angle is
typically redrawn per user so that users see differently rotated but equally
strong correlation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "CellGeometry",
    "CellUsers",
    "exp_correlation",
    "correlation_sqrt",
    "draw_channel",
    "draw_cell_users",
]

# Eigenvalues this far below the largest (relatively) are clamped to zero
# when factoring a correlation matrix; anything more negative is rejected.
_PSD_TOL = 1e-12


def exp_correlation(rho: float, theta: float, dim: int) -> np.ndarray:
    """Exponential correlation matrix with entries (rho * e^{j theta})^(c - r).

    The upper triangle holds increasing powers of the complex coefficient,
    the lower triangle is its conjugate, so the result is exactly Hermitian
    with a unit diagonal.

    Args:
        rho: correlation magnitude in [0, 1].
        theta: correlation phase in radians.
        dim: matrix side.

    Returns:
        (dim, dim) complex Hermitian matrix, positive definite for rho < 1.
    """
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"correlation magnitude must be in [0, 1], got {rho}")
    if dim < 1:
        raise DomainError(f"dimension must be positive, got {dim}")
    coeff = rho * np.exp(1j * theta)
    idx = np.arange(dim)
    diff = idx[None, :] - idx[:, None]          # column - row
    mag = coeff ** np.abs(diff)
    return np.where(diff >= 0, mag, np.conj(mag))


def correlation_sqrt(corr: np.ndarray) -> np.ndarray:
    """Hermitian PSD square root of a correlation matrix.

    Slightly negative eigenvalues from roundoff are clamped at zero;
    genuinely negative ones raise.
    """
    corr = np.asarray(corr)
    lam, vecs = np.linalg.eigh(corr)
    floor = -_PSD_TOL * max(lam[-1], 1.0)
    if lam[0] < floor:
        raise DomainError(f"correlation matrix is not PSD (min eigenvalue {lam[0]:.3e})")
    lam = np.clip(lam, 0.0, None)
    return (vecs * np.sqrt(lam)) @ vecs.conj().T


def rotate_correlation_sqrt(base_sqrt: np.ndarray, theta: np.ndarray | float) -> np.ndarray:
    """Apply diagonal phase rotations diag(e^{-i*j*theta}) around a square root.

    Rotating exp_correlation(rho, 0, dim) by theta reproduces the square root
    of exp_correlation(rho, theta, dim) without refactoring, so Monte Carlo
    loops can draw per-user phases cheaply.  ``theta`` may carry leading batch
    dimensions; the result then has shape ``theta.shape + base_sqrt.shape``.
    """
    base_sqrt = np.asarray(base_sqrt)
    theta = np.asarray(theta, dtype=float)
    dim = base_sqrt.shape[-1]
    d = np.exp(1j * theta[..., None] * np.arange(dim))
    return d[..., :, None] * base_sqrt * d[..., None, :].conj()


def draw_channel(
    rx_corr: np.ndarray | None,
    tx_corr: np.ndarray | None,
    gain: float,
    rng: np.random.Generator,
    *,
    n_rx: int | None = None,
    n_tx: int | None = None,
    rx_sqrt: np.ndarray | None = None,
    tx_sqrt: np.ndarray | None = None,
) -> np.ndarray:
    """Draw one Kronecker-correlated Rayleigh channel realisation.

    Either correlation argument may be None for an uncorrelated side, in
    which case the matching dimension must be given.  Precomputed matrix
    square roots can be passed to avoid refactoring inside Monte Carlo
    loops; they take precedence over the correlation arguments.

    Returns:
        (n_rx, n_tx) complex channel matrix.
    """
    if gain < 0.0:
        raise DomainError(f"large-scale gain must be nonnegative, got {gain}")
    if rx_sqrt is None and rx_corr is not None:
        rx_sqrt = correlation_sqrt(rx_corr)
    if tx_sqrt is None and tx_corr is not None:
        tx_sqrt = correlation_sqrt(tx_corr)
    m = rx_sqrt.shape[0] if rx_sqrt is not None else n_rx
    n = tx_sqrt.shape[0] if tx_sqrt is not None else n_tx
    if m is None or n is None:
        raise DomainError("dimensions are undetermined; pass correlation or n_rx/n_tx")
    white = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    white *= np.sqrt(0.5)
    h = white
    if rx_sqrt is not None:
        h = rx_sqrt @ h
    if tx_sqrt is not None:
        h = h @ tx_sqrt
    if gain != 1.0:
        h = np.sqrt(gain) * h
    return h


@dataclass(frozen=True)
class CellGeometry:
    """Circular cell: radius, keep-out disc, distance-decay and shadowing."""

    radius_m: float
    min_distance_m: float
    pathloss_exponent: float
    shadow_std_db: float
    edge_snr_db: float

    def __post_init__(self):
        if not 0.0 < self.min_distance_m < self.radius_m:
            raise DomainError("need 0 < min_distance_m < radius_m")
        if self.pathloss_exponent <= 2.0:
            raise DomainError("pathloss exponent must exceed 2")
        if self.shadow_std_db < 0.0:
            raise DomainError("shadow standard deviation must be nonnegative")


@dataclass(frozen=True)
class CellUsers:
    """One drop of user positions with the induced large-scale gains."""

    gains: np.ndarray
    distances_m: np.ndarray
    shadow_db: np.ndarray


def draw_cell_users(
    geometry: CellGeometry,
    n_users: int,
    rng: np.random.Generator,
    transmit_power: float,
) -> CellUsers:
    """Drop users uniformly over the cell area and compute large-scale gains.

    Gains are normalised so that a user at the cell edge with zero shadow
    fading sees an average SNR of ``edge_snr_db`` when the transmitter
    spends ``transmit_power`` (noise power is one throughout).

    Radial distances follow the area-uniform law on the annulus between
    the keep-out distance and the cell radius.
    """
    if n_users < 1:
        raise DomainError(f"need at least one user, got {n_users}")
    if transmit_power <= 0.0:
        raise DomainError(f"transmit power must be positive, got {transmit_power}")
    u = rng.random(n_users)
    r0sq = geometry.min_distance_m**2
    dist = np.sqrt(r0sq + u * (geometry.radius_m**2 - r0sq))
    shadow = rng.normal(0.0, geometry.shadow_std_db, n_users) if geometry.shadow_std_db > 0 \
        else np.zeros(n_users)
    edge_lin = 10.0 ** (geometry.edge_snr_db / 10.0)
    rel = (dist / geometry.radius_m) ** (-geometry.pathloss_exponent) * 10.0 ** (shadow / 10.0)
    gains = rel * (edge_lin / transmit_power)
    return CellUsers(gains=gains, distances_m=dist, shadow_db=shadow)
