"""Exact finite-blocklength experiments against classical oracles."""

import math

import numpy as np
import pytest

from cqrel.channels import (
    CQChannel,
    CQState,
    GuardError,
    ValidationError,
    bsc_channel,
    pure_pair_channel,
)
from cqrel.codes import ShapingMap, modified_toeplitz
from cqrel.entropies import guessing_probability
from cqrel.simulator import (
    CodingExperiment,
    certify_affine_achievability,
    code_error_exact,
    compression_experiment,
    coset_error_sweep,
    extraction_experiment,
    product_channel,
    product_state,
)


def test_product_channel_orders_words_lexicographically():
    ch = bsc_channel(0.2)
    ch2 = product_channel(ch, 2)
    assert ch2.alphabet_size == 4 and ch2.dim_b == 4
    # index 2 = word (1, 0) -> outputs[1] (x) outputs[0]
    expect = np.kron(ch.outputs[1], ch.outputs[0])
    assert np.allclose(ch2.outputs[2], expect, atol=1e-14)


def test_product_channel_n_one_and_guard():
    ch = bsc_channel(0.2)
    ch1 = product_channel(ch, 1)
    for a, b in zip(ch1.outputs, ch.outputs):
        assert np.allclose(a, b, atol=1e-15)
    with pytest.raises(GuardError):
        product_channel(ch, 8)  # 4^8 = 65536 > 2^14
    with pytest.raises(ValidationError):
        product_channel(ch, 0)


def test_product_state_prior_is_iid():
    st = CQState(np.array([0.3, 0.7]),
                 (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
    st2 = product_state(st, 2)
    assert np.allclose(st2.prior, [0.09, 0.21, 0.21, 0.49], atol=1e-14)


def test_code_error_trivial_channels():
    sys21 = modified_toeplitz(2, 1, 2, seed=3)
    orth = CQChannel((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
    assert code_error_exact(CodingExperiment(orth, sys21)) < 1e-12
    same = CQChannel((np.eye(2) / 2, np.eye(2) / 2))
    assert abs(code_error_exact(CodingExperiment(same, sys21)) - 0.5) < 1e-12
    sys32 = modified_toeplitz(3, 2, 2, seed=5)
    assert abs(code_error_exact(CodingExperiment(same, sys32)) - 0.75) < 1e-12


def test_code_error_matches_classical_ml_oracle():
    p = 0.11
    ch = bsc_channel(p)
    sys_ = modified_toeplitz(3, 1, 2, seed=7)
    got = code_error_exact(CodingExperiment(ch, sys_))
    words = sys_.codewords()
    err = 0.0
    for y_int in range(8):
        y = [(y_int >> (2 - i)) & 1 for i in range(3)]
        likes = [np.prod([(1 - p) if wi == yi else p
                          for wi, yi in zip(w, y)]) for w in words]
        err += 0.5 * (sum(likes) - max(likes))
    assert abs(got - err) < 1e-10


def test_pgm_decoder_never_beats_optimal():
    rng = np.random.default_rng(0)
    ch = pure_pair_channel(0.45)
    for seed in range(5):
        sys_ = modified_toeplitz(3, 2, 2, seed=seed)
        e_opt = code_error_exact(CodingExperiment(ch, sys_, decoder="optimal"))
        e_pgm = code_error_exact(CodingExperiment(ch, sys_, decoder="pgm"))
        assert e_pgm >= e_opt - 1e-9


def test_invalid_experiment_configs():
    ch = bsc_channel(0.1)
    sys_ = modified_toeplitz(3, 1, 2, seed=0)
    with pytest.raises(ValidationError):
        CodingExperiment(ch, sys_, decoder="viterbi")
    sys3 = modified_toeplitz(3, 1, 3, seed=0)
    with pytest.raises(ValidationError):
        CodingExperiment(ch, sys3)  # field size 3 vs binary channel
    with pytest.raises(ValidationError):
        code_error_exact(CodingExperiment(ch, sys_), syndrome=(1,))


def test_shaped_experiment_matches_direct_shaping():
    ch = pure_pair_channel(0.4)
    smap = ShapingMap(3, (1, 2))
    sys_ = modified_toeplitz(2, 1, 3, seed=2)
    via_exp = code_error_exact(CodingExperiment(ch, sys_, shaping=smap))
    from cqrel.codes import shaping_channel
    direct = code_error_exact(CodingExperiment(shaping_channel(ch, smap), sys_))
    assert abs(via_exp - direct) < 1e-14


def test_coset_average_equals_joint_syndrome_guessing():
    # mean error over cosets == 1 - P_guess(message | B, syndrome register),
    # with the joint ensemble built independently as block-diagonal states
    ch = pure_pair_channel(0.4)
    sys_ = modified_toeplitz(3, 1, 2, seed=9)
    exp = CodingExperiment(ch, sys_)
    sweep = coset_error_sweep(exp)

    q, n, k = sys_.q, sys_.n, sys_.k
    n_syn = q ** (n - k)
    d_n = exp.channel_n.dim_b
    conds = []
    for m in range(q ** k):
        big = np.zeros((n_syn * d_n, n_syn * d_n), dtype=complex)
        for v in range(n_syn):
            syndrome = [(v >> (n - k - 1 - i)) & 1 for i in range(n - k)]
            leader = np.zeros(n, dtype=np.int64)
            leader[k:] = syndrome
            word = (np.array([m]) @ sys_.generator + leader) % q
            idx = int(sum(int(w) * q ** (n - 1 - j)
                          for j, w in enumerate(word)))
            big[v * d_n:(v + 1) * d_n, v * d_n:(v + 1) * d_n] = \
                exp.channel_n.outputs[idx] / n_syn
        conds.append(big)
    joint = CQState(np.full(q ** k, 1.0 / q ** k), tuple(conds))
    assert abs(sweep.mean_error - (1.0 - guessing_probability(joint))) < 1e-10


def test_coset_sweep_reports_best_member():
    ch = bsc_channel(0.11)
    sys_ = modified_toeplitz(3, 1, 2, seed=7)
    sweep = coset_error_sweep(CodingExperiment(ch, sys_))
    assert len(sweep.errors) == 4
    assert sweep.best_error == min(sweep.errors)
    assert sweep.errors[sweep.syndromes.index(sweep.best_syndrome)] \
        == sweep.best_error
    d = sweep.as_dict()
    assert set(d) >= {"errors", "best_error", "mean_error"}


def test_certificate_beats_bound_on_enumerable_instances():
    cert = certify_affine_achievability(pure_pair_channel(0.5), 2, 1)
    assert cert.exhaustive and cert.family_size == 4
    assert cert.passed and cert.gap > 0.0
    assert cert.observed_exponent == pytest.approx(5.9769, abs=1e-3)
    # bound values reproduce the one-shot formula
    from cqrel.exponents import affine_code_bound
    ch2 = product_channel(pure_pair_channel(0.5), 2)
    nu = ch2.with_prior().spectrum_count()
    for s, b in zip(cert.s_grid, cert.bound_values):
        assert abs(b - affine_code_bound(ch2, 2, s, nu)) < 1e-12


def test_certificate_trivial_message_length():
    cert = certify_affine_achievability(pure_pair_channel(0.5), 2, 0)
    assert cert.observed_error == 0.0
    assert cert.observed_exponent == math.inf
    assert cert.passed


def test_certificate_error_monotone_in_message_length():
    ch = pure_pair_channel(0.4)
    errors = [certify_affine_achievability(ch, 3, m).observed_error
              for m in range(3)]
    for a, b in zip(errors, errors[1:]):
        assert b >= a - 1e-12


def test_certificate_sampling_path_is_deterministic():
    ch = bsc_channel(0.1)
    a = certify_affine_achievability(ch, 3, 1, enum_limit=2, samples=5, seed=3)
    b = certify_affine_achievability(ch, 3, 1, enum_limit=2, samples=5, seed=3)
    assert not a.exhaustive and a.evaluated == 5
    assert a.observed_error == b.observed_error
    assert a.best_diagonals == b.best_diagonals


def test_extraction_trivial_source_is_exactly_uniform():
    triv = CQState(np.array([0.5, 0.5]), (np.eye(1), np.eye(1)))
    res = extraction_experiment(triv, 2, 2)
    assert res.mean_divergence < 1e-12
    assert res.mean_purified_distance < 1e-7
    assert res.infinite_count == 0


def test_extraction_family_average_meets_bound():
    p = 0.1
    st = CQState(np.array([0.6, 0.4]),
                 (np.diag([1 - p, p]), np.diag([p, 1 - p])))
    res = extraction_experiment(st, 3, 1)
    assert res.exhaustive and res.family_size == 4
    assert res.satisfied
    assert all(res.mean_divergence <= b + 1e-9 for b in res.hayashi_bounds)
    assert len(res.divergences) == 4
    assert res.ci_half_width is None  # exhaustive -> exact, no interval


def test_extraction_sampling_reports_interval():
    p = 0.1
    st = CQState(np.array([0.5, 0.5]),
                 (np.diag([1 - p, p]), np.diag([p, 1 - p])))
    res = extraction_experiment(st, 3, 1, enum_limit=2, trials=3, seed=1)
    assert not res.exhaustive and res.evaluated == 3
    assert res.ci_half_width is not None and res.ci_half_width >= 0.0


def test_compression_perfectly_correlated_source():
    corr = CQState(np.array([0.5, 0.5]),
                   (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
    sys_ = modified_toeplitz(3, 1, 2, seed=11)
    res = compression_experiment(corr, sys_)
    assert res.error < 1e-12
    assert res.exponent == math.inf
    assert not res.converse_region  # H(Z|B) = 0 < rate


def test_compression_matches_classical_syndrome_decoding():
    p = 0.1
    st = CQState(np.array([0.5, 0.5]),
                 (np.diag([1 - p, p]), np.diag([p, 1 - p])))
    sys_ = modified_toeplitz(3, 1, 2, seed=11)
    res = compression_experiment(st, sys_)
    words = np.array([[(w >> 2) & 1, (w >> 1) & 1, w & 1] for w in range(8)])
    synd = (words @ sys_.f_check.T) % 2
    synd_idx = synd[:, 0] * 2 + synd[:, 1]
    err = 0.0
    for y_int in range(8):
        y = np.array([(y_int >> (2 - i)) & 1 for i in range(3)])
        for v in range(4):
            sel = words[synd_idx == v]
            ps = [np.prod([0.5 * ((1 - p) if zi == yi else p)
                           for zi, yi in zip(z, y)]) for z in sel]
            err += sum(ps) - max(ps)
    assert abs(res.error - err) < 1e-10
    assert abs(sum(res.syndrome_probs) - 1.0) < 1e-12
    assert res.slack == res.exponent - res.bound_value


def test_compression_flags_converse_region():
    # rate 1/3 log2(2) ~ 0.33 below H(Z|B) ~ 0.5 for an uninformative B
    st = CQState(np.array([0.89, 0.11]),
                 (np.eye(2) / 2, np.eye(2) / 2))
    sys_ = modified_toeplitz(3, 2, 2, seed=0)
    res = compression_experiment(st, sys_)
    assert res.converse_region
    assert res.error > 0.05  # converse region: error bounded away from 0
