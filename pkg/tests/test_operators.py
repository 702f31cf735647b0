"""Linear-algebra helpers: eigen transforms, partial trace, purification."""

import numpy as np
import pytest

from cqrel.operators import (
    OperatorError,
    eigh_psd,
    embed_factor,
    fidelity,
    kron_all,
    matrix_log2,
    partial_trace,
    permute_operator,
    pinch,
    pinch_factor,
    psd_power,
    purify,
    random_density,
    random_pure_vector,
    require_density,
    require_hermitian,
    spectrum_count,
    trace_norm,
    vn_entropy,
)


def test_require_hermitian_rejects_skew():
    m = np.array([[0.0, 1.0], [-1.0, 0.0]])
    with pytest.raises(OperatorError):
        require_hermitian(m)
    sym = require_hermitian(np.array([[1.0, 2.0], [2.0, 3.0]]))
    assert np.allclose(sym, sym.conj().T)


def test_require_density_rejects_bad_trace_and_negativity():
    with pytest.raises(OperatorError):
        require_density(np.diag([0.7, 0.7]))
    with pytest.raises(OperatorError):
        require_density(np.diag([1.5, -0.5]))
    ok = require_density(np.diag([0.25, 0.75]))
    assert abs(np.trace(ok) - 1.0) < 1e-12


def test_random_density_is_valid_and_rank_controlled():
    rng = np.random.default_rng(11)
    for dim in (2, 3, 5):
        rho = random_density(rng, dim)
        require_density(rho)
        low = random_density(rng, dim, rank=1)
        w = np.linalg.eigvalsh(low)
        assert np.sum(w > 1e-10) == 1


def test_psd_power_and_log_match_spectral_definitions():
    rng = np.random.default_rng(5)
    rho = random_density(rng, 4)
    w, v = np.linalg.eigh(rho)
    direct = (v * w ** 0.37) @ v.conj().T
    assert np.allclose(psd_power(rho, 0.37), direct, atol=1e-12)
    lg = matrix_log2(rho)
    back = (v * np.log2(np.clip(w, 1e-300, None))) @ v.conj().T
    assert np.allclose(lg, back, atol=1e-10)


def test_eigh_psd_clips_small_negatives():
    rho = np.diag([1.0 + 1e-12, -1e-12])
    w, _ = eigh_psd(rho)
    assert np.all(w >= 0.0)


def test_partial_trace_of_product_recovers_factors():
    rng = np.random.default_rng(3)
    a = random_density(rng, 2)
    b = random_density(rng, 3)
    ab = np.kron(a, b)
    assert np.allclose(partial_trace(ab, (2, 3), keep=(0,)), a, atol=1e-12)
    assert np.allclose(partial_trace(ab, (2, 3), keep=(1,)), b, atol=1e-12)
    # three factors, keep middle
    c = random_density(rng, 2)
    abc = kron_all(a, b, c)
    assert np.allclose(partial_trace(abc, (2, 3, 2), keep=(1,)), b, atol=1e-12)


def test_partial_trace_preserves_trace_on_entangled_states():
    rng = np.random.default_rng(7)
    rho = random_density(rng, 6)
    red = partial_trace(rho, (2, 3), keep=(0,))
    assert abs(np.trace(red) - 1.0) < 1e-12
    require_density(red)


def test_permute_operator_swap_is_consistent_with_kron():
    rng = np.random.default_rng(9)
    a = random_density(rng, 2)
    b = random_density(rng, 3)
    swapped = permute_operator(np.kron(a, b), (2, 3), (1, 0))
    assert np.allclose(swapped, np.kron(b, a), atol=1e-12)


def test_embed_factor_acts_trivially_elsewhere():
    rng = np.random.default_rng(13)
    op = rng.normal(size=(3, 3))
    big = embed_factor(op, (2, 3, 2), axis=1)
    vec = rng.normal(size=12)
    direct = kron_all(np.eye(2), op, np.eye(2)) @ vec
    assert np.allclose(big @ vec, direct, atol=1e-12)


def test_purify_round_trip_and_trim():
    rng = np.random.default_rng(21)
    rho = random_density(rng, 3, rank=2)
    vec = purify(rho)
    mat = vec.reshape(3, -1)
    assert np.allclose(mat @ mat.conj().T, rho, atol=1e-10)
    trimmed = purify(rho, trim=True)
    assert trimmed.size == 3 * 2  # ancilla is exactly the rank
    mat = trimmed.reshape(3, 2)
    assert np.allclose(mat @ mat.conj().T, rho, atol=1e-10)


def test_purify_is_deterministic():
    rng = np.random.default_rng(2)
    rho = random_density(rng, 4)
    assert np.array_equal(purify(rho), purify(rho))


def test_pinch_keeps_diagonal_kills_offdiagonal():
    rng = np.random.default_rng(4)
    rho = random_density(rng, 3)
    pinched = pinch(rho)
    assert np.allclose(pinched, np.diag(np.diag(rho)), atol=1e-12)
    # pinching in the eigenbasis of rho is the identity on rho
    _, v = np.linalg.eigh(rho)
    assert np.allclose(pinch(rho, basis=v), rho, atol=1e-10)


def test_pinch_factor_dephases_one_axis_only():
    rng = np.random.default_rng(6)
    a = random_density(rng, 2)
    b = random_density(rng, 3)
    out = pinch_factor(np.kron(a, b), (2, 3), axis=0)
    expect = np.kron(np.diag(np.diag(a)), b)
    assert np.allclose(out, expect, atol=1e-12)


def test_fidelity_bounds_and_pure_state_formula():
    rng = np.random.default_rng(8)
    for _ in range(10):
        rho = random_density(rng, 3)
        sigma = random_density(rng, 3)
        f = fidelity(rho, sigma)
        assert -1e-10 <= f <= 1.0 + 1e-10
    psi = random_pure_vector(rng, 3)
    phi = random_pure_vector(rng, 3)
    f = fidelity(np.outer(psi, psi.conj()), np.outer(phi, phi.conj()))
    assert abs(f - abs(np.vdot(psi, phi))) < 1e-10
    assert abs(fidelity(rho, rho) - 1.0) < 1e-10


def test_trace_norm_of_difference_detects_equality():
    rng = np.random.default_rng(10)
    rho = random_density(rng, 4)
    assert trace_norm(rho - rho) < 1e-14
    sigma = random_density(rng, 4)
    tn = trace_norm(rho - sigma)
    w = np.linalg.eigvalsh(rho - sigma)
    assert abs(tn - np.abs(w).sum()) < 1e-10


def test_spectrum_count_clusters_repeated_eigenvalues():
    assert spectrum_count(np.diag([0.5, 0.5, 0.0, 0.0])) == 2
    assert spectrum_count(np.diag([0.25, 0.25, 0.25, 0.25])) == 1
    assert spectrum_count(np.diag([0.6, 0.3, 0.1])) == 3
    # near-degenerate pair merges under the cluster tolerance
    assert spectrum_count(np.diag([0.5, 0.5 - 1e-12, 0.0]), 1e-9) == 2


def test_vn_entropy_known_values():
    assert abs(vn_entropy(np.diag([1.0, 0.0]))) < 1e-12
    assert abs(vn_entropy(np.diag([0.5, 0.5])) - 1.0) < 1e-12
    assert abs(vn_entropy(np.eye(4) / 4) - 2.0) < 1e-12
