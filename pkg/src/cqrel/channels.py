"""Classical-quantum channels and classical-quantum joint states.

A channel maps each input symbol ``x`` in ``{0, ..., q-1}`` to a density
operator on a fixed output space.  A CQState is a channel together with a
prior: the joint operator ``sum_x P(x) |x><x| (x) phi_x`` is block diagonal in
the classical index, and every entropic quantity downstream exploits that
block structure instead of assembling the dense joint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import (
    OperatorError,
    cluster_count,
    eigh_psd,
    require_density,
    require_hermitian,
    vn_entropy,
)

DENSE_JOINT_LIMIT = 2 ** 14


class ValidationError(OperatorError):
    """Raised when a channel or state fails its structural checks."""


class GuardError(RuntimeError):
    """Raised when an exact computation would exceed the size guard."""


@dataclass(frozen=True)
class CQChannel:
    """Finite-alphabet channel with quantum outputs.

    ``outputs[x]`` is the density operator produced by input symbol ``x``.
    """

    outputs: tuple
    dim_b: int = field(init=False)

    def __post_init__(self):
        outs = tuple(np.asarray(m, dtype=complex) for m in self.outputs)
        if not outs:
            raise ValidationError("channel needs at least one input symbol")
        d = outs[0].shape[0]
        outs = tuple(require_density(m) for m in outs)
        for m in outs:
            if m.shape[0] != d:
                raise ValidationError("output dimensions disagree")
        object.__setattr__(self, "outputs", outs)
        object.__setattr__(self, "dim_b", d)

    @property
    def alphabet_size(self) -> int:
        return len(self.outputs)

    def with_prior(self, prior=None) -> "CQState":
        return CQState(prior if prior is not None
                       else np.full(self.alphabet_size, 1.0 / self.alphabet_size),
                       self.outputs)


@dataclass(frozen=True)
class CQState:
    """Joint state of a classical register and a quantum system.

    ``prior`` is a probability vector over the classical alphabet and
    ``conditionals[x]`` the output state given symbol ``x``.
    """

    prior: np.ndarray
    conditionals: tuple

    def __post_init__(self):
        p = np.asarray(self.prior, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError("prior must be a nonempty vector")
        if np.any(p < -1e-12):
            raise ValidationError("prior has negative entries")
        if abs(p.sum() - 1.0) > 1e-8:
            raise ValidationError(f"prior sums to {p.sum()!r}")
        p = np.clip(p, 0.0, None)
        conds = tuple(require_density(np.asarray(m, dtype=complex))
                      for m in self.conditionals)
        if len(conds) != p.size:
            raise ValidationError("prior length and conditional count disagree")
        d = conds[0].shape[0]
        for m in conds:
            if m.shape[0] != d:
                raise ValidationError("conditional dimensions disagree")
        object.__setattr__(self, "prior", p)
        object.__setattr__(self, "conditionals", conds)

    @property
    def alphabet_size(self) -> int:
        return int(self.prior.size)

    @property
    def dim_b(self) -> int:
        return self.conditionals[0].shape[0]

    @property
    def joint_dim(self) -> int:
        return self.alphabet_size * self.dim_b

    def weighted_blocks(self):
        """The blocks ``P(x) phi_x`` of the joint operator."""
        return [self.prior[x] * self.conditionals[x]
                for x in range(self.alphabet_size)]

    def average(self) -> np.ndarray:
        """Marginal on the quantum system, ``sum_x P(x) phi_x``."""
        out = np.zeros((self.dim_b, self.dim_b), dtype=complex)
        for x in range(self.alphabet_size):
            if self.prior[x] > 0:
                out += self.prior[x] * self.conditionals[x]
        return out

    def joint(self, limit: int = DENSE_JOINT_LIMIT) -> np.ndarray:
        """Dense block-diagonal joint operator (guarded by total dimension)."""
        dim = self.joint_dim
        if dim > limit:
            raise GuardError(f"joint dimension {dim} exceeds guard {limit}")
        out = np.zeros((dim, dim), dtype=complex)
        d = self.dim_b
        for x in range(self.alphabet_size):
            if self.prior[x] > 0:
                out[x * d:(x + 1) * d, x * d:(x + 1) * d] = \
                    self.prior[x] * self.conditionals[x]
        return out

    def spectrum(self) -> np.ndarray:
        """All joint eigenvalues, computed block by block."""
        vals = []
        d = self.dim_b
        for x in range(self.alphabet_size):
            if self.prior[x] > 0:
                w, _ = eigh_psd(self.prior[x] * self.conditionals[x])
                vals.append(w)
            else:
                vals.append(np.zeros(d))
        return np.concatenate(vals)

    def spectrum_count(self, cluster_tol: float = 1e-9) -> int:
        return cluster_count(self.spectrum(), cluster_tol)

    def channel(self) -> CQChannel:
        return CQChannel(self.conditionals)


def classical_channel(transition: np.ndarray) -> CQChannel:
    """Embed a row-stochastic matrix as a channel with diagonal outputs."""
    t = np.asarray(transition, dtype=float)
    if t.ndim != 2:
        raise ValidationError("transition matrix must be 2-d")
    outs = [np.diag(row.astype(complex)) for row in t]
    return CQChannel(tuple(outs))


def bsc_channel(p: float) -> CQChannel:
    """Binary symmetric channel embedded as commuting qubit outputs."""
    if not 0.0 <= p <= 0.5:
        raise ValidationError(f"flip probability {p} outside [0, 1/2]")
    return classical_channel(np.array([[1 - p, p], [p, 1 - p]]))


def pure_pair_channel(c: float) -> CQChannel:
    """Two pure qubit outputs with real overlap ``c``."""
    if not 0.0 <= c <= 1.0:
        raise ValidationError(f"overlap {c} outside [0, 1]")
    v0 = np.array([1.0, 0.0])
    v1 = np.array([c, np.sqrt(max(1.0 - c * c, 0.0))])
    return CQChannel((np.outer(v0, v0).astype(complex),
                      np.outer(v1, v1).astype(complex)))


def depolarized_output_channel(p: float) -> CQChannel:
    """Orthogonal pure outputs mixed with white noise of weight ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"noise weight {p} outside [0, 1]")
    eye = np.eye(2, dtype=complex) / 2
    out0 = (1 - p) * np.diag([1.0, 0.0]).astype(complex) + p * eye
    out1 = (1 - p) * np.diag([0.0, 1.0]).astype(complex) + p * eye
    return CQChannel((out0, out1))


def random_cq_channel(rng: np.random.Generator, alphabet: int, dim_b: int,
                      rank: int | None = None) -> CQChannel:
    from .operators import random_density
    return CQChannel(tuple(random_density(rng, dim_b, rank)
                           for _ in range(alphabet)))


def holevo_information(channel: CQChannel, prior: np.ndarray) -> float:
    """Mutual information between input and output in bits."""
    p = np.asarray(prior, dtype=float)
    avg = sum(p[x] * channel.outputs[x] for x in range(channel.alphabet_size))
    val = vn_entropy(avg)
    for x in range(channel.alphabet_size):
        if p[x] > 0:
            val -= p[x] * vn_entropy(channel.outputs[x])
    return float(val)
