"""Finite-blocklength experiments for affine coding over cq channels.

Everything here works on explicitly materialised n-fold product states, so
all error probabilities are exact (up to solver tolerance) rather than
Monte-Carlo estimates of the decoding step.  A dimension guard keeps the
dense joint below ``2**14``; experiments over code families fall back from
exhaustive enumeration to seeded sampling once the family outgrows
``ENUM_LIMIT``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._kernels import enumerate_vectors
from .channels import CQChannel, CQState, DENSE_JOINT_LIMIT, GuardError, ValidationError
from .codes import (
    ShapingMap,
    ToeplitzCodeSystem,
    enumerate_toeplitz_family,
    field_uniform,
    philox_generator,
    shaping_channel,
    toeplitz_diagonal_count,
)
from .entropies import (
    conditional_vn_entropy,
    cq_divergence_to_product,
    cq_fidelity_to_product,
    guessing_probability,
)
from .exponents import affine_code_bound, dc_exponent_bounds, hayashi_pa_bound

__all__ = [
    "ENUM_LIMIT",
    "product_channel",
    "product_state",
    "CodingExperiment",
    "code_error_exact",
    "coset_error_sweep",
    "CosetSweepResult",
    "AffineCodeCertificate",
    "certify_affine_achievability",
    "ExtractionResult",
    "extraction_experiment",
    "CompressionResult",
    "compression_experiment",
]

# Families larger than this are sampled instead of enumerated.
ENUM_LIMIT = 10 ** 5

DEFAULT_S_GRID = tuple(round(0.1 * i, 10) for i in range(1, 11))

_PGM_PINV_TOL = 1e-12


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CQREL_THREADS", "1")))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    """Map preserving order; threads only when CQREL_THREADS > 1."""
    workers = _thread_count()
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _check_guard(q: int, dim_b: int, n: int, limit: int) -> None:
    if n < 1:
        raise ValidationError(f"block length must be >= 1, got {n}")
    if (q * dim_b) ** n > limit:
        raise GuardError(
            f"joint dimension {(q * dim_b) ** n} exceeds limit {limit} "
            f"(q={q}, dim_b={dim_b}, n={n})")


def _word_indices(words: np.ndarray, q: int) -> np.ndarray:
    """Lexicographic rank of each row, most significant digit first."""
    n = words.shape[1]
    powers = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return words.astype(np.int64) @ powers


def product_channel(channel: CQChannel, n: int,
                    limit: int = DENSE_JOINT_LIMIT) -> CQChannel:
    """n-fold memoryless extension, inputs ordered lexicographically.

    Input word (z_1, ..., z_n) sits at index sum_i z_i q^(n-i) and maps to
    the Kronecker product of the single-letter outputs.
    """
    q = channel.alphabet_size
    _check_guard(q, channel.dim_b, n, limit)
    if n == 1:
        return CQChannel(channel.outputs)
    words = enumerate_vectors(q, n)
    outputs = []
    for row in words:
        acc = channel.outputs[int(row[0])]
        for z in row[1:]:
            acc = np.kron(acc, channel.outputs[int(z)])
        outputs.append(acc)
    return CQChannel(tuple(outputs))


def product_state(state: CQState, n: int,
                  limit: int = DENSE_JOINT_LIMIT) -> CQState:
    """n-fold i.i.d. extension of a cq state, lexicographic symbol order."""
    chan = product_channel(CQChannel(state.conditionals), n, limit)
    words = enumerate_vectors(state.alphabet_size, n)
    prior = np.prod(state.prior[words], axis=1)
    return CQState(prior, chan.outputs)


# ---------------------------------------------------------------------------
# exact decoding error of one code


@dataclass(frozen=True)
class CodingExperiment:
    """A code used over an n-fold product channel with a chosen decoder.

    ``shaping`` optionally precomposes the channel so that field symbols
    drive a smaller physical alphabet; the code then lives on F_q with
    q = shaping.q.
    """

    channel: CQChannel
    code: ToeplitzCodeSystem
    decoder: str = "optimal"
    shaping: ShapingMap | None = None
    limit: int = DENSE_JOINT_LIMIT

    def __post_init__(self):
        if self.decoder not in ("optimal", "pgm"):
            raise ValidationError(f"unknown decoder {self.decoder!r}")
        base = self.base_channel
        if base.alphabet_size != self.code.q:
            raise ValidationError(
                f"code field size {self.code.q} does not match channel "
                f"alphabet {base.alphabet_size}")
        _check_guard(base.alphabet_size, base.dim_b, self.code.n, self.limit)

    @cached_property
    def base_channel(self) -> CQChannel:
        if self.shaping is None:
            return self.channel
        return shaping_channel(self.channel, self.shaping)

    @cached_property
    def channel_n(self) -> CQChannel:
        return product_channel(self.base_channel, self.code.n, self.limit)

    @property
    def rate_bits(self) -> float:
        return self.code.k / self.code.n * math.log2(self.code.q)

    def coset_ensemble(self, syndrome=None) -> CQState:
        """Uniform ensemble over the q^k codewords of one coset."""
        code = self.code
        if syndrome is None:
            syndrome = code.syndrome_target
        syndrome = tuple(int(x) % code.q for x in syndrome)
        if len(syndrome) != code.n - code.k:
            raise ValidationError(
                f"syndrome length {len(syndrome)}, expected {code.n - code.k}")
        if syndrome == code.syndrome_target:
            words = code.codewords()
        else:
            leader = np.zeros(code.n, dtype=np.int64)
            leader[code.k:] = syndrome
            msgs = enumerate_vectors(code.q, code.k)
            words = (msgs @ code.generator + leader) % code.q
        idx = _word_indices(words, code.q)
        size = words.shape[0]
        prior = np.full(size, 1.0 / size)
        return CQState(prior, tuple(self.channel_n.outputs[i] for i in idx))


def _pgm_success(state: CQState) -> float:
    """Success probability of the pretty-good (square-root) measurement."""
    weighted = [p * c for p, c in zip(state.prior, state.conditionals)]
    total = sum(weighted)
    w, v = np.linalg.eigh(total)
    cut = _PGM_PINV_TOL * max(float(w[-1]), 0.0)
    inv = np.where(w > cut, 1.0 / np.sqrt(np.clip(w, cut, None)), 0.0)
    root_pinv = (v * inv) @ v.conj().T
    acc = 0.0
    for m in weighted:
        half = root_pinv @ m
        acc += float(np.real(np.trace(half @ half)))
    return acc


def code_error_exact(experiment: CodingExperiment, syndrome=None) -> float:
    """Exact average error of the configured decoder on one coset code."""
    ensemble = experiment.coset_ensemble(syndrome)
    if experiment.decoder == "optimal":
        success = guessing_probability(ensemble)
    else:
        success = _pgm_success(ensemble)
    return min(1.0, max(0.0, 1.0 - success))


@dataclass(frozen=True)
class CosetSweepResult:
    syndromes: tuple
    errors: tuple
    best_syndrome: tuple
    best_error: float
    mean_error: float

    def as_dict(self) -> dict:
        return {
            "syndromes": [list(s) for s in self.syndromes],
            "errors": list(self.errors),
            "best_syndrome": list(self.best_syndrome),
            "best_error": self.best_error,
            "mean_error": self.mean_error,
        }


def coset_error_sweep(experiment: CodingExperiment) -> CosetSweepResult:
    """Decoder error for every coset of one code, exact enumeration."""
    code = experiment.code
    rows = enumerate_vectors(code.q, code.n - code.k)
    syndromes = [tuple(int(x) for x in r) for r in rows]
    errors = _map_ordered(lambda s: code_error_exact(experiment, s), syndromes)
    best = min(range(len(errors)), key=lambda i: (errors[i], i))
    return CosetSweepResult(
        syndromes=tuple(syndromes),
        errors=tuple(errors),
        best_syndrome=syndromes[best],
        best_error=errors[best],
        mean_error=math.fsum(errors) / len(errors),
    )


# ---------------------------------------------------------------------------
# achievability certificate over the Toeplitz family


@dataclass(frozen=True)
class AffineCodeCertificate:
    """Best observed code versus the one-shot random-coding bound.

    ``observed_exponent`` is -log2 of the smallest optimal-decoder error
    found over the enumerated (or sampled) family of (diagonals, coset)
    pairs; ``passed`` certifies it dominates the bound at every grid s.
    """

    q: int
    n: int
    k: int
    s_grid: tuple
    bound_values: tuple
    bound_best: float
    observed_error: float
    observed_exponent: float
    gap: float
    passed: bool
    exhaustive: bool
    family_size: int
    evaluated: int
    best_diagonals: tuple
    best_syndrome: tuple

    def as_dict(self) -> dict:
        return {
            "q": self.q, "n": self.n, "k": self.k,
            "s_grid": list(self.s_grid),
            "bound_values": list(self.bound_values),
            "bound_best": self.bound_best,
            "observed_error": self.observed_error,
            "observed_exponent": self.observed_exponent,
            "gap": self.gap,
            "pass": self.passed,
            "exhaustive": self.exhaustive,
            "family_size": self.family_size,
            "evaluated": self.evaluated,
            "best_diagonals": list(self.best_diagonals),
            "best_syndrome": list(self.best_syndrome),
        }


def certify_affine_achievability(channel: CQChannel, n: int, k: int,
                                 s_grid=DEFAULT_S_GRID, *, seed: int = 0,
                                 samples: int = 200,
                                 enum_limit: int = ENUM_LIMIT,
                                 limit: int = DENSE_JOINT_LIMIT,
                                 decoder: str = "optimal") -> AffineCodeCertificate:
    """Search the modified-Toeplitz family for a code beating the bound.

    The one-shot bound promises a family member whose optimal-decoder error
    satisfies -log2 P_error >= e0(s, uniform, W^n) - s k log2 q
    - s log2 nu - log2(1/s) for each s in (0, 1]; the certificate reports
    the best code found and the gap to the best grid point.
    """
    q = channel.alphabet_size
    if not 0 <= k < n + 1:
        raise ValidationError(f"need 0 <= k <= n, got k={k}, n={n}")
    _check_guard(q, channel.dim_b, n, limit)

    channel_n = product_channel(channel, n, limit)
    nu = channel_n.with_prior().spectrum_count()
    bounds = tuple(
        affine_code_bound(channel_n, q ** k, s, nu) for s in s_grid)
    bound_best = max(bounds)

    n_diag = toeplitz_diagonal_count(n, k)
    diag_count = q ** n_diag
    coset_count = q ** (n - k)
    family_size = diag_count * coset_count
    exhaustive = family_size <= enum_limit

    if exhaustive:
        diag_rows = enumerate_toeplitz_family(n, k, q)
        coset_rows = enumerate_vectors(q, n - k)
        pairs = [(tuple(int(x) for x in d), tuple(int(x) for x in c))
                 for d in diag_rows for c in coset_rows]
    else:
        rng = philox_generator(seed, stream=1)
        pairs = []
        for _ in range(samples):
            d = tuple(int(x) for x in field_uniform(rng, q, n_diag))
            c = tuple(int(x) for x in field_uniform(rng, q, n - k))
            pairs.append((d, c))

    def error_of(pair):
        diags, syndrome = pair
        system = ToeplitzCodeSystem(q, n, k, diags, syndrome)
        exp = CodingExperiment(channel, system, decoder=decoder, limit=limit)
        return code_error_exact(exp)

    errors = _map_ordered(error_of, pairs)
    best = min(range(len(errors)), key=lambda i: (errors[i], i))
    best_error = errors[best]
    observed = math.inf if best_error <= 0.0 else -math.log2(best_error)
    gap = observed - bound_best
    return AffineCodeCertificate(
        q=q, n=n, k=k,
        s_grid=tuple(float(s) for s in s_grid),
        bound_values=bounds,
        bound_best=bound_best,
        observed_error=best_error,
        observed_exponent=observed,
        gap=gap,
        passed=bool(gap >= -1e-9),
        exhaustive=exhaustive,
        family_size=family_size,
        evaluated=len(pairs),
        best_diagonals=pairs[best][0],
        best_syndrome=pairs[best][1],
    )


# ---------------------------------------------------------------------------
# randomness extraction against quantum side information


@dataclass(frozen=True)
class ExtractionResult:
    """Family statistics of hashing an i.i.d. cq source down to k symbols."""

    q: int
    n: int
    k: int
    family_size: int
    evaluated: int
    exhaustive: bool
    divergences: tuple
    mean_divergence: float
    ci_half_width: float | None
    infinite_count: int
    purified_distances: tuple
    mean_purified_distance: float
    s_grid: tuple
    hayashi_bounds: tuple
    satisfied: bool

    def as_dict(self) -> dict:
        return {
            "q": self.q, "n": self.n, "k": self.k,
            "family_size": self.family_size,
            "evaluated": self.evaluated,
            "exhaustive": self.exhaustive,
            "mean_divergence": self.mean_divergence,
            "ci_half_width": self.ci_half_width,
            "infinite_count": self.infinite_count,
            "mean_purified_distance": self.mean_purified_distance,
            "s_grid": list(self.s_grid),
            "hayashi_bounds": list(self.hayashi_bounds),
            "pass": self.satisfied,
        }


def _hash_state(state_n: CQState, system: ToeplitzCodeSystem,
                words: np.ndarray, indices: np.ndarray) -> CQState:
    """cq state of the hashed register: blocks grouped by hash value."""
    q, k = system.q, system.k
    values = _word_indices(system.hash_value(words), q)
    m = q ** k
    dim = state_n.dim_b
    prior = np.zeros(m)
    blocks = np.zeros((m, dim, dim), dtype=complex)
    for w, v in enumerate(values):
        p = state_n.prior[indices[w]]
        prior[v] += p
        blocks[v] += p * state_n.conditionals[indices[w]]
    conds = []
    for v in range(m):
        if prior[v] > 0:
            conds.append(blocks[v] / prior[v])
        else:
            conds.append(np.eye(dim, dtype=complex) / dim)
    return CQState(prior, tuple(conds))


def extraction_experiment(state: CQState, n: int, k: int, *, seed: int = 0,
                          trials: int = 200, s_grid=DEFAULT_S_GRID,
                          enum_limit: int = ENUM_LIMIT,
                          limit: int = DENSE_JOINT_LIMIT) -> ExtractionResult:
    """Hash n i.i.d. copies down to k field symbols and measure leakage.

    For each family member the exact divergence
    D(rho_hatX E^n || uniform (x) rho_E^n) and the purified distance to the
    same product are computed; the family mean is compared against the
    average-case bound at every s on the grid.
    """
    q = state.alphabet_size
    if not 0 <= k <= n:
        raise ValidationError(f"need 0 <= k <= n, got k={k}, n={n}")
    _check_guard(q, state.dim_b, n, limit)

    state_n = product_state(state, n, limit)
    rho_e_n = state_n.average()
    words = enumerate_vectors(q, n)
    indices = _word_indices(words, q)

    n_diag = toeplitz_diagonal_count(n, k)
    family_size = q ** n_diag
    exhaustive = family_size <= enum_limit
    if exhaustive:
        diag_list = [tuple(int(x) for x in d)
                     for d in enumerate_toeplitz_family(n, k, q)]
    else:
        rng = philox_generator(seed, stream=2)
        diag_list = [tuple(int(x) for x in field_uniform(rng, q, n_diag))
                     for _ in range(trials)]

    def stats_of(diags):
        system = ToeplitzCodeSystem(q, n, k, diags, tuple([0] * (n - k)))
        hashed = _hash_state(state_n, system, words, indices)
        div = cq_divergence_to_product(hashed, rho_e_n)
        fid = cq_fidelity_to_product(hashed, rho_e_n)
        pd = math.sqrt(max(0.0, 1.0 - min(1.0, fid) ** 2))
        return div, pd

    results = _map_ordered(stats_of, diag_list)
    divergences = tuple(r[0] for r in results)
    distances = tuple(r[1] for r in results)
    finite = [d for d in divergences if math.isfinite(d)]
    infinite_count = len(divergences) - len(finite)
    if finite:
        mean_div = math.fsum(finite) / len(finite)
    else:
        mean_div = math.inf
    mean_pd = math.fsum(distances) / len(distances)

    ci = None
    if not exhaustive and len(finite) > 1:
        arr = np.array(finite)
        ci = 2.5758 * float(arr.std(ddof=1)) / math.sqrt(len(finite))

    hayashi = tuple(hayashi_pa_bound(state_n, q ** k, s) for s in s_grid)
    if infinite_count and infinite_count == len(divergences):
        satisfied = True  # vacuous: no finite sample to test
    else:
        satisfied = all(mean_div <= b + 1e-9 for b in hayashi)
    return ExtractionResult(
        q=q, n=n, k=k,
        family_size=family_size,
        evaluated=len(diag_list),
        exhaustive=exhaustive,
        divergences=divergences,
        mean_divergence=mean_div,
        ci_half_width=ci,
        infinite_count=infinite_count,
        purified_distances=distances,
        mean_purified_distance=mean_pd,
        s_grid=tuple(float(s) for s in s_grid),
        hayashi_bounds=hayashi,
        satisfied=satisfied,
    )


# ---------------------------------------------------------------------------
# compression with quantum side information


@dataclass(frozen=True)
class CompressionResult:
    """Exact syndrome-decoding error of one compression system.

    ``converse_region`` flags rates below the conditional entropy of the
    source, where no comparison against the achievability exponent is
    meaningful.
    """

    q: int
    n: int
    k: int
    rate_bits: float
    error: float
    exponent: float
    bound_value: float
    slack: float
    converse_region: bool
    syndrome_probs: tuple
    syndrome_errors: tuple

    def as_dict(self) -> dict:
        return {
            "q": self.q, "n": self.n, "k": self.k,
            "rate_bits": self.rate_bits,
            "error": self.error,
            "exponent": self.exponent,
            "bound_value": self.bound_value,
            "slack": self.slack,
            "converse_region": self.converse_region,
        }


def compression_experiment(state: CQState, system: ToeplitzCodeSystem, *,
                           limit: int = DENSE_JOINT_LIMIT) -> CompressionResult:
    """Compress n i.i.d. source symbols to their syndrome, decode with B.

    The decoder sees the syndrome and the quantum side information; its
    exact error is the syndrome-probability-weighted average of Helstrom
    errors over the per-syndrome posterior ensembles.   The per-copy
    exponent is compared against the i.i.d. achievability bound at the
    compression rate (n-k)/n log2 q.
    """
    q = state.alphabet_size
    if system.q != q:
        raise ValidationError(
            f"system field size {system.q} does not match alphabet {q}")
    n, k = system.n, system.k
    _check_guard(q, state.dim_b, n, limit)

    state_n = product_state(state, n, limit)
    words = enumerate_vectors(q, n)
    syndromes = _word_indices(system.syndrome(words), q)

    probs = []
    errors = []
    for v in range(q ** (n - k)):
        sel = np.flatnonzero(syndromes == v)
        p_v = float(np.sum(state_n.prior[sel]))
        probs.append(p_v)
        if p_v <= 0.0:
            errors.append(0.0)
            continue
        prior = state_n.prior[sel] / p_v
        conds = tuple(state_n.conditionals[i] for i in sel)
        success = guessing_probability(CQState(prior, conds))
        errors.append(min(1.0, max(0.0, 1.0 - success)))

    error = math.fsum(p * e for p, e in zip(probs, errors))
    exponent = math.inf if error <= 0.0 else -math.log2(error) / n
    rate = (n - k) / n * math.log2(q)
    bound = dc_exponent_bounds(state, rate, "lower").value
    slack = exponent - bound
    converse = rate < conditional_vn_entropy(state) - 1e-12
    return CompressionResult(
        q=q, n=n, k=k,
        rate_bits=rate,
        error=error,
        exponent=exponent,
        bound_value=bound,
        slack=slack,
        converse_region=bool(converse),
        syndrome_probs=tuple(probs),
        syndrome_errors=tuple(errors),
    )
