"""Distribution shaping, randomized affine codes, and hash universality.

The code family used everywhere is the modified Toeplitz construction over a
prime field: generator ``G = [I_k | T]`` with ``T`` a k x (n-k) Toeplitz
matrix (n-1 free diagonal parameters), message functional ``f_hat = [I_k|0]``,
syndrome functional ``f_check = [-T^T | I_{n-k}]``, stacked into the
invertible ``M = [[I, 0], [-T^T, I]]`` whose inverse-transpose's first k rows
recover ``G``.  Rows are the vector convention: messages are length-k rows,
words length-n rows, ``encode(m) = m G + v`` with coset leader
``v = (0, syndrome_target)``.

Randomness for Toeplitz sampling comes from a counter-based generator
(Philox) keyed by the seed with the stream index in the counter block, so
member ``i`` of a family is reproducible without generating members
``0..i-1``.  Field elements are drawn by modular reduction from 63-bit
integers; the bias is below q * 2^-63 < 2^-40 for every supported q.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from ._kernels import enumerate_vectors
from .channels import CQChannel, ValidationError

WILSON_Z_99 = 2.5758293035489004
EXHAUSTIVE_FAMILY_LIMIT = 10 ** 4


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


def require_prime(q: int) -> int:
    q = int(q)
    if not is_prime(q):
        raise ValidationError(f"{q} is not prime")
    return q


@dataclass(frozen=True)
class PrimeField:
    q: int

    def __post_init__(self):
        require_prime(self.q)


def gf_matmul(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)) % q


def gf_rank(a: np.ndarray, q: int) -> int:
    m = np.array(a, dtype=np.int64) % q
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        piv = None
        for r in range(rank, rows):
            if m[r, c] % q:
                piv = r
                break
        if piv is None:
            continue
        m[[rank, piv]] = m[[piv, rank]]
        inv = pow(int(m[rank, c]), q - 2, q)
        m[rank] = (m[rank] * inv) % q
        for r in range(rows):
            if r != rank and m[r, c]:
                m[r] = (m[r] - m[r, c] * m[rank]) % q
        rank += 1
        if rank == rows:
            break
    return rank


def gf_inv(a: np.ndarray, q: int) -> np.ndarray:
    m = np.array(a, dtype=np.int64) % q
    d = m.shape[0]
    if m.shape != (d, d):
        raise ValidationError(f"cannot invert non-square shape {m.shape}")
    aug = np.concatenate([m, np.eye(d, dtype=np.int64)], axis=1)
    for c in range(d):
        piv = None
        for r in range(c, d):
            if aug[r, c] % q:
                piv = r
                break
        if piv is None:
            raise ValidationError("matrix is singular over the field")
        aug[[c, piv]] = aug[[piv, c]]
        inv = pow(int(aug[c, c]), q - 2, q)
        aug[c] = (aug[c] * inv) % q
        for r in range(d):
            if r != c and aug[r, c]:
                aug[r] = (aug[r] - aug[r, c] * aug[c]) % q
    return aug[:, d:] % q


# ---------------------------------------------------------------------------
# counter-based randomness

_MASK64 = (1 << 64) - 1


def philox_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent reproducible stream: key = seed, counter block = stream."""
    key = np.array([seed & _MASK64, 0], dtype=np.uint64)
    counter = np.array([0, 0, stream & _MASK64, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def field_uniform(rng: np.random.Generator, q: int, size) -> np.ndarray:
    raw = rng.integers(0, 1 << 63, size=size, dtype=np.uint64)
    return (raw % q).astype(np.int64)


# ---------------------------------------------------------------------------
# distribution shaping


@dataclass(frozen=True)
class ShapingMap:
    """Deterministic map from uniform field elements to channel symbols.

    ``weights[x]`` field elements map to symbol x, so a uniform seed induces
    the prior ``weights / q``.
    """

    q: int
    weights: tuple

    def __post_init__(self):
        require_prime(self.q)
        w = tuple(int(x) for x in self.weights)
        if any(x < 0 for x in w) or sum(w) != self.q:
            raise ValidationError(f"weights {w} must be nonnegative and sum to q={self.q}")
        object.__setattr__(self, "weights", w)

    @cached_property
    def symbol_map(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.weights)), self.weights).astype(np.int64)

    def induced_prior(self) -> np.ndarray:
        return np.array(self.weights, dtype=float) / self.q


def quantize_distribution(p, q: int) -> tuple:
    """Best q-denominator approximation of a distribution, largest remainder.

    Returns ``(ShapingMap, total_variation)``.  The total variation satisfies
    tv <= r / (4 q) with r the support size; ties in the remainders are broken
    toward the lexicographically smallest weight vector.
    """
    require_prime(q)
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < -1e-12):
        raise ValidationError("p must be a nonnegative vector")
    if abs(p.sum() - 1.0) > 1e-8:
        raise ValidationError(f"p sums to {p.sum()!r}")
    p = np.clip(p, 0.0, None)
    scaled = p * q
    base = np.floor(scaled + 1e-12).astype(np.int64)
    base = np.minimum(base, np.ceil(scaled).astype(np.int64))
    rem = scaled - base
    missing = q - int(base.sum())
    order = sorted(range(p.size), key=lambda i: (-rem[i], -i))
    w = base.copy()
    for i in order[:max(missing, 0)]:
        w[i] += 1
    smap = ShapingMap(q, tuple(int(x) for x in w))
    tv = 0.5 * float(np.abs(p - smap.induced_prior()).sum())
    return smap, tv


def shaping_channel(channel: CQChannel, smap: ShapingMap) -> CQChannel:
    """Precompose a channel with a shaping map: input alphabet becomes F_q."""
    if len(smap.weights) != channel.alphabet_size:
        raise ValidationError("shaping weights do not match channel alphabet")
    return CQChannel(tuple(channel.outputs[x] for x in smap.symbol_map))


# ---------------------------------------------------------------------------
# modified Toeplitz code systems


def toeplitz_diagonal_count(n: int, k: int) -> int:
    return 0 if k in (0, n) else n - 1


@dataclass(frozen=True)
class ToeplitzCodeSystem:
    """Affine code, its dual functionals, and the coset leader, over F_q."""

    q: int
    n: int
    k: int
    diagonals: tuple
    syndrome_target: tuple

    def __post_init__(self):
        require_prime(self.q)
        if not (0 <= self.k <= self.n) or self.n < 1:
            raise ValidationError(f"need 0 <= k <= n, got n={self.n} k={self.k}")
        diags = tuple(int(x) % self.q for x in self.diagonals)
        if len(diags) != toeplitz_diagonal_count(self.n, self.k):
            raise ValidationError(
                f"expected {toeplitz_diagonal_count(self.n, self.k)} diagonal "
                f"parameters, got {len(diags)}")
        tgt = tuple(int(x) % self.q for x in self.syndrome_target)
        if len(tgt) != self.n - self.k:
            raise ValidationError(
                f"syndrome target length {len(tgt)} != n-k = {self.n - self.k}")
        object.__setattr__(self, "diagonals", diags)
        object.__setattr__(self, "syndrome_target", tgt)
        self._check_structure()

    @cached_property
    def t_matrix(self) -> np.ndarray:
        t = np.zeros((self.k, self.n - self.k), dtype=np.int64)
        for i in range(self.k):
            for j in range(self.n - self.k):
                t[i, j] = self.diagonals[(self.k - 1) - i + j]
        return t

    @cached_property
    def generator(self) -> np.ndarray:
        return np.concatenate([np.eye(self.k, dtype=np.int64), self.t_matrix],
                              axis=1)

    @cached_property
    def f_hat(self) -> np.ndarray:
        return np.concatenate(
            [np.eye(self.k, dtype=np.int64),
             np.zeros((self.k, self.n - self.k), dtype=np.int64)], axis=1)

    @cached_property
    def f_check(self) -> np.ndarray:
        return np.concatenate(
            [(-self.t_matrix.T) % self.q,
             np.eye(self.n - self.k, dtype=np.int64)], axis=1)

    @cached_property
    def m_matrix(self) -> np.ndarray:
        return np.concatenate([self.f_hat, self.f_check], axis=0)

    @cached_property
    def m_inverse_transpose(self) -> np.ndarray:
        return gf_inv(self.m_matrix, self.q).T % self.q

    @cached_property
    def coset_leader(self) -> np.ndarray:
        v = np.zeros(self.n, dtype=np.int64)
        v[self.k:] = self.syndrome_target
        return v

    def _check_structure(self) -> None:
        g = self.generator
        if self.k and gf_rank(g, self.q) != self.k:
            raise ValidationError("generator is not full rank")
        if np.any(gf_matmul(self.f_check, g.T, self.q)):
            raise ValidationError("syndrome functional does not annihilate the code")
        if np.any(self.m_inverse_transpose[:self.k] != g):
            raise ValidationError("inverse-transpose rows do not recover the generator")
        if np.any(self.syndrome(self.coset_leader) != np.array(self.syndrome_target,
                                                              dtype=np.int64)):
            raise ValidationError("coset leader has the wrong syndrome")

    def encode(self, message) -> np.ndarray:
        m = np.asarray(message, dtype=np.int64) % self.q
        if m.shape[-1] != self.k:
            raise ValidationError(f"message length {m.shape[-1]} != k = {self.k}")
        return (m @ self.generator + self.coset_leader) % self.q

    def syndrome(self, word) -> np.ndarray:
        z = np.asarray(word, dtype=np.int64) % self.q
        if z.shape[-1] != self.n:
            raise ValidationError(f"word length {z.shape[-1]} != n = {self.n}")
        return (z @ self.f_check.T) % self.q

    def message_of(self, word) -> np.ndarray:
        z = np.asarray(word, dtype=np.int64) % self.q
        return (z @ self.f_hat.T) % self.q

    def hash_value(self, word) -> np.ndarray:
        """Two-universal hash x -> G x used for randomness extraction."""
        z = np.asarray(word, dtype=np.int64) % self.q
        return (z @ self.generator.T) % self.q

    def codewords(self) -> np.ndarray:
        """All q^k members of the coset, row per message (message order)."""
        msgs = enumerate_vectors(self.q, self.k)
        return (msgs @ self.generator + self.coset_leader) % self.q

    def to_json_dict(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "k": self.k,
            "toeplitz_diagonals": list(self.diagonals),
            "syndrome_target": list(self.syndrome_target),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "ToeplitzCodeSystem":
        try:
            return cls(int(d["q"]), int(d["n"]), int(d["k"]),
                       tuple(d["toeplitz_diagonals"]),
                       tuple(d["syndrome_target"]))
        except KeyError as exc:
            raise ValidationError(f"missing code field {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ToeplitzCodeSystem":
        return cls.from_json_dict(json.loads(text))


def modified_toeplitz(n: int, k: int, q: int, seed: int, *, index: int = 0,
                      syndrome_target=None) -> ToeplitzCodeSystem:
    """Member ``index`` of the seeded random Toeplitz family."""
    require_prime(q)
    rng = philox_generator(seed, stream=index)
    diags = field_uniform(rng, q, toeplitz_diagonal_count(n, k))
    if syndrome_target is None:
        syndrome_target = tuple([0] * (n - k))
    return ToeplitzCodeSystem(q, n, k, tuple(int(x) for x in diags),
                              tuple(int(x) for x in syndrome_target))


def enumerate_toeplitz_family(n: int, k: int, q: int):
    """All diagonal vectors of the (n, k) family as an array of rows."""
    return enumerate_vectors(q, toeplitz_diagonal_count(n, k))


# ---------------------------------------------------------------------------
# Fourier conjugation


def fourier_matrix(q: int) -> np.ndarray:
    z = np.arange(q)
    return np.exp(2j * np.pi * np.outer(z, z) / q) / np.sqrt(q)


def fourier_conjugation(q: int, n: int = 1) -> tuple:
    """n-fold Fourier basis change and its mutual-unbiasedness deviation.

    Returns ``(F, deviation)`` where deviation is
    max over entries of ``| |F[z,x]|^2 - q^-n |``.
    """
    f = fourier_matrix(q)
    out = f
    for _ in range(n - 1):
        out = np.kron(out, f)
    dev = float(np.max(np.abs(np.abs(out) ** 2 - 1.0 / q ** n)))
    return out, dev


def linear_map_fourier_action(m_matrix: np.ndarray, q: int) -> float:
    """Deviation of the basis-permutation rule under an invertible map.

    The permutation unitary U sending |z> to |M z> must send the conjugate
    basis vector labelled x to the one labelled (M^-1)^T x; returns the max
    entrywise deviation over all labels.
    """
    m = np.asarray(m_matrix, dtype=np.int64) % q
    n = m.shape[0]
    total = q ** n
    if total > 4096:
        raise ValidationError(f"dimension q^n = {total} too large for dense check")
    vecs = enumerate_vectors(q, n)
    powers = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    u = np.zeros((total, total))
    images = (vecs @ m.T) % q
    u[(images @ powers), np.arange(total)] = 1.0
    f, _ = fourier_conjugation(q, n)
    minv_t = gf_inv(m, q).T % q
    relabel = ((vecs @ minv_t.T) % q) @ powers
    return float(np.max(np.abs(u @ f - f[:, relabel])))


# ---------------------------------------------------------------------------
# collision statistics


@dataclass(frozen=True)
class CollisionTestResult:
    q: int
    n: int
    k: int
    rate: float
    trials: int
    exact: bool
    bound: float
    ci_low: float | None
    ci_high: float | None
    consistent: bool


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z_99) -> tuple:
    """99% score interval for a binomial proportion."""
    if trials <= 0:
        raise ValidationError("trials must be positive")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials
                         + z * z / (4 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def collision_test(q: int, n: int, k: int, x1, x2, *, seed: int = 0,
                   trials: int = 20000,
                   exhaustive_limit: int = EXHAUSTIVE_FAMILY_LIMIT) -> CollisionTestResult:
    """Collision rate of the hash pair (x1, x2) over the Toeplitz family.

    Exhaustive when the family size q^(n-1) fits the limit, Monte Carlo with
    a Wilson 99% interval otherwise.  The two-universal bound is q^-k.
    """
    require_prime(q)
    x1 = np.asarray(x1, dtype=np.int64) % q
    x2 = np.asarray(x2, dtype=np.int64) % q
    if x1.shape != (n,) or x2.shape != (n,):
        raise ValidationError("inputs must be length-n vectors")
    diff = (x1 - x2) % q
    if not diff.any():
        raise ValidationError("inputs are equal; collision rate is trivially 1")
    bound = float(q) ** (-k)
    n_diag = toeplitz_diagonal_count(n, k)
    family = q ** n_diag
    if family <= exhaustive_limit:
        t_enum = enumerate_toeplitz_family(n, k, q)
        hits = _kernels.collision_count_for_diff(t_enum, q, n, k, diff)
        rate = hits / family
        return CollisionTestResult(q, n, k, rate, family, True, bound,
                                   None, None, rate <= bound + 1e-12)
    rng = philox_generator(seed, stream=1)
    t_sample = field_uniform(rng, q, (trials, n_diag))
    hits = _kernels.collision_count_for_diff(t_sample, q, n, k, diff)
    rate = hits / trials
    lo, hi = wilson_interval(hits, trials)
    return CollisionTestResult(q, n, k, rate, trials, False, bound,
                               lo, hi, lo <= bound + 1e-12)


def exhaustive_max_collision_rate(q: int, n: int, k: int,
                                  exhaustive_limit: int = EXHAUSTIVE_FAMILY_LIMIT) -> float:
    """max over nonzero differences of the family collision rate."""
    require_prime(q)
    family = q ** toeplitz_diagonal_count(n, k)
    if family > exhaustive_limit:
        raise ValidationError(
            f"family size {family} exceeds exhaustive limit {exhaustive_limit}")
    t_enum = enumerate_toeplitz_family(n, k, q)
    worst = _kernels.max_collision_count(t_enum, q, n, k)
    return worst / family
