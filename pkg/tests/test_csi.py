"""Quantized feedback and uplink training / estimation."""

import numpy as np
import pytest

from mulink.csi import (
    chordal_distance,
    mmse_estimate,
    quantize_subspace,
    row_space_basis,
    rvq_codebook,
    simulate_uplink,
    training_matrix,
)
from mulink.errors import DomainError, ResourceLimitError


def _chan(rng, m, n):
    return (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) * np.sqrt(0.5)


# ------------------------------------------------------------------ codebooks

def test_rvq_codebook_entries_are_semi_unitary():
    rng = np.random.default_rng(1)
    book = rvq_codebook(6, 2, 5, rng)
    assert book.entries.shape == (32, 6, 2)
    assert book.size == 32 and book.dim == 2 and book.bits == 5
    grams = np.einsum("kni,knj->kij", book.entries.conj(), book.entries)
    assert np.max(np.abs(grams - np.eye(2))) < 1e-10


def test_rvq_codebook_is_deterministic_per_seed():
    a = rvq_codebook(4, 1, 6, np.random.default_rng(42))
    b = rvq_codebook(4, 1, 6, np.random.default_rng(42))
    assert np.array_equal(a.entries, b.entries)


def test_rvq_codebook_limits():
    rng = np.random.default_rng(2)
    assert rvq_codebook(4, 1, 0, rng).size == 1
    with pytest.raises(ResourceLimitError):
        rvq_codebook(4, 1, 25, rng)
    with pytest.raises(DomainError):
        rvq_codebook(4, 4, 3, rng)
    with pytest.raises(DomainError):
        rvq_codebook(4, 1, -1, rng)


# ------------------------------------------------------------- chordal metric

def test_chordal_distance_identities():
    rng = np.random.default_rng(3)
    h = _chan(rng, 2, 6)
    basis = row_space_basis(h)
    assert basis.shape == (6, 2)
    assert np.allclose(basis.conj().T @ basis, np.eye(2), atol=1e-12)
    # same span, even through an invertible row mix
    mix = np.array([[1.0, 2.0], [0.5j, 1.0]]) @ h
    assert chordal_distance(mix, basis) == pytest.approx(0.0, abs=1e-7)
    # orthogonal 2-dim subspaces of C^4 sit at the maximal distance sqrt(2)
    u = np.eye(4)[:, :2]
    v = np.eye(4)[:, 2:]
    assert chordal_distance(u.T, v) == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_chordal_distance_dimension_check():
    rng = np.random.default_rng(4)
    with pytest.raises(DomainError):
        chordal_distance(_chan(rng, 2, 6), np.eye(4)[:, :2])


def test_quantize_subspace_matches_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(10):
        h = _chan(rng, 2, 5)
        book = rvq_codebook(5, 2, 4, rng)
        index, dist = quantize_subspace(h, book)
        dists = [chordal_distance(h, book.entries[i]) for i in range(book.size)]
        assert index == int(np.argmin(dists))
        assert dist == pytest.approx(min(dists), abs=1e-9)


# ------------------------------------------------------------------ training

def test_training_matrix_waterfills_over_prior_eigenvalues():
    prior = np.diag([2.0, 0.5])
    cfg = training_matrix(prior, total_power=3.0, noise_var=1.0)
    t = cfg.matrix
    assert np.trace(t.conj().T @ t).real == pytest.approx(3.0, rel=1e-12)
    # diagonal prior: pilots are diagonal with water-filled energies
    from mulink.precoding import waterfill
    q = waterfill(np.array([2.0, 0.5]), 3.0)
    assert np.allclose(np.sort(np.diag(t @ t.conj().T).real), np.sort(q), atol=1e-12)
    assert np.max(np.abs(t - np.diag(np.diag(t)))) < 1e-12


def test_training_matrix_zero_power_is_allowed():
    cfg = training_matrix(np.eye(2), total_power=0.0, noise_var=1.0)
    assert np.all(cfg.matrix == 0.0)


def test_training_matrix_validation():
    with pytest.raises(DomainError):
        training_matrix(np.eye(2), total_power=1.0, noise_var=0.0)
    with pytest.raises(DomainError):
        training_matrix(np.eye(2), total_power=-1.0, noise_var=1.0)


# ----------------------------------------------------------------- estimation

def test_mmse_estimate_scalar_posterior_matches_closed_form():
    # d = 1: error variance must equal 1 / (1/prior + psi/noise)
    prior = np.array([[2.5]])
    cfg = training_matrix(prior, total_power=4.0, noise_var=0.5)
    rng = np.random.default_rng(6)
    y = simulate_uplink(_chan(rng, 1, 3) * np.sqrt(2.5), cfg, rng)
    est, err = mmse_estimate(y, cfg, prior)
    assert est.shape == (1, 3)
    assert err[0, 0].real == pytest.approx(1.0 / (1.0 / 2.5 + 4.0 / 0.5), rel=1e-12)


def test_mmse_estimate_error_covariance_matches_monte_carlo():
    rng = np.random.default_rng(7)
    prior = np.array([[1.5, 0.4 + 0.2j], [0.4 - 0.2j, 0.8]])
    sqrt = np.linalg.cholesky(prior)
    cfg = training_matrix(prior, total_power=6.0, noise_var=1.0)
    trials, n = 4000, 4
    acc = np.zeros((2, 2), dtype=complex)
    cross = np.zeros((2, 2), dtype=complex)
    for _ in range(trials):
        h = sqrt @ _chan(rng, 2, n)
        y = simulate_uplink(h, cfg, rng)
        est, err = mmse_estimate(y, cfg, prior)
        e = h - est
        acc += e @ e.conj().T / n
        cross += e @ est.conj().T / n
    acc /= trials
    cross /= trials
    assert np.allclose(acc, err, atol=0.05)
    # orthogonality principle: error uncorrelated with the estimate
    assert np.max(np.abs(cross)) < 0.05


def test_mmse_estimate_rejects_singular_prior_and_shape_mismatch():
    cfg = training_matrix(np.eye(2), total_power=2.0, noise_var=1.0)
    with pytest.raises(DomainError):
        mmse_estimate(np.zeros((3, 2)), cfg, np.diag([1.0, 0.0]))
    with pytest.raises(DomainError):
        mmse_estimate(np.zeros((3, 3)), cfg, np.eye(2))
