"""Dual-state constructions for conjugate-basis entropy trade-offs.

A bipartite density operator on A (x) C is purified into B and the A system
is copied onto a fresh register A' in the computational basis, giving a pure
state psi on A (x) A' (x) B (x) C.  Measuring A in the computational basis
(keeping B) or in the Fourier basis (keeping A'C) produces two
classical-quantum states whose Renyi conditional entropies add up to
log2(d_A) exactly, order against dual order.  This module builds the state,
extracts both measured marginals, evaluates the trade-off residuals, checks
the conjugate-basis uncertainty inequality for arbitrary tripartite states,
and implements the recovery channel that inverts the Fourier-basis pinch on
copy-invariant operators.

Everything is base-2: entropies in bits, the trade-off target is log2(d_A).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channels import CQState
from .codes import fourier_matrix
from .entropies import (
    guessing_probability,
    petz_h_up,
    sandwiched_h_down,
    sandwiched_h_up,
)
from .operators import (
    OperatorError,
    partial_trace,
    pinch_factor,
    purify,
    random_density,
    require_density,
)

MUB_TOL = 1e-10
MARGINAL_TOL = 1e-8
PROJECTOR_TOL = 1e-10
KRAUS_TOL = 1e-12


def _conjugate_basis(d: int, fourier: np.ndarray | None) -> np.ndarray:
    """Return a validated conjugate basis (columns), default the DFT."""
    f = fourier_matrix(d) if fourier is None else np.asarray(fourier, dtype=complex)
    if f.shape != (d, d):
        raise OperatorError(f"conjugate basis shape {f.shape}, expected {(d, d)}")
    if np.max(np.abs(f.conj().T @ f - np.eye(d))) > MUB_TOL:
        raise OperatorError("conjugate basis is not unitary")
    dev = np.max(np.abs(np.abs(f) ** 2 - 1.0 / d))
    if dev > MUB_TOL:
        raise OperatorError(
            f"basis is not mutually unbiased with the computational one "
            f"(overlap deviation {dev:.3e})")
    return f


@dataclass(frozen=True)
class DualStateBundle:
    """Pure state on A (x) A' (x) B (x) C with A copied onto A'.

    ``psi`` is stored as a 4-axis tensor indexed (a, a', b, c).  The copy
    structure means psi is supported on the a == a' diagonal, equivalently
    it is invariant under the projector onto span{|z>|z>}.
    """

    d_a: int
    d_b: int
    d_c: int
    psi: np.ndarray
    fourier: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return self.psi.reshape(-1)

    @cached_property
    def copy_projector(self) -> np.ndarray:
        """Projector onto span{|z>|z>} of A (x) A'."""
        d = self.d_a
        p = np.zeros((d * d, d * d), dtype=complex)
        idx = np.arange(d) * d + np.arange(d)
        p[idx, idx] = 1.0
        return p

    @cached_property
    def copy_unitary(self) -> np.ndarray:
        """Permutation sending |z>|z'> to |z>|z' + z mod d_a>."""
        d = self.d_a
        u = np.zeros((d * d, d * d))
        for z in range(d):
            for zp in range(d):
                u[z * d + (zp + z) % d, z * d + zp] = 1.0
        return u

    def projector_residual(self) -> float:
        """Max-norm violation of the copy-diagonal support property."""
        off = self.psi.copy()
        idx = np.arange(self.d_a)
        off[idx, idx] = 0.0
        return float(np.max(np.abs(off)))


def bundle_from_purification(vec_abc: np.ndarray,
                             fourier: np.ndarray | None = None) -> DualStateBundle:
    """Copy the first axis of a normalized pure tripartite vector onto A'.

    ``vec_abc`` has shape (d_a, d_b, d_c).  The returned bundle holds
    psi[z, z, b, c] = vec_abc[z, b, c] with all off-diagonal A,A' entries
    zero, which is exactly the action of the computational-basis copy
    unitary on vec (x) |0>.
    """
    vec = np.asarray(vec_abc, dtype=complex)
    if vec.ndim != 3:
        raise OperatorError(f"expected a 3-axis tensor, got shape {vec.shape}")
    d_a, d_b, d_c = vec.shape
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > 1e-10:
        raise OperatorError(f"purification is not normalized (norm {norm:.3e})")
    f = _conjugate_basis(d_a, fourier)
    psi = np.zeros((d_a, d_a, d_b, d_c), dtype=complex)
    idx = np.arange(d_a)
    psi[idx, idx] = vec
    return DualStateBundle(d_a=d_a, d_b=d_b, d_c=d_c, psi=psi, fourier=f)


def build_dual_state(rho_ac: np.ndarray, dims,
                     fourier: np.ndarray | None = None) -> DualStateBundle:
    """Purify rho_AC into B, copy A in the computational basis, validate.

    The B dimension is the rank of rho_AC.  The construction guarantees two
    identities that are re-checked numerically here: the bundle is supported
    on the copy diagonal, and its A,C marginal equals the computational-basis
    pinch of rho_AC on the A factor.
    """
    d_a, d_c = (int(x) for x in dims)
    rho_ac = np.asarray(rho_ac, dtype=complex)
    if rho_ac.shape != (d_a * d_c, d_a * d_c):
        raise OperatorError(
            f"rho shape {rho_ac.shape} does not match dims {(d_a, d_c)}")
    require_density(rho_ac)
    vec = purify(rho_ac, trim=True).reshape(d_a, d_c, -1)
    vec = np.transpose(vec, (0, 2, 1))  # (A, B=purifier, C)
    bundle = bundle_from_purification(vec, fourier)

    if bundle.projector_residual() > PROJECTOR_TOL:
        raise OperatorError("bundle lost the copy-diagonal support property")
    marg = np.einsum("zwbc,vwbe->zcve", bundle.psi, bundle.psi.conj())
    marg = marg.reshape(d_a * d_c, d_a * d_c)
    pinched = pinch_factor(rho_ac, (d_a, d_c), 0)
    if np.max(np.abs(marg - pinched)) > MARGINAL_TOL:
        raise OperatorError("bundle A,C marginal does not match the pinched input")
    return bundle


def _blocks_to_cq(blocks: np.ndarray) -> CQState:
    """Assemble a CQState from unnormalized measurement blocks."""
    m, d = blocks.shape[0], blocks.shape[1]
    prior = np.maximum(np.einsum("zii->z", blocks).real, 0.0)
    prior = prior / prior.sum()
    conds = []
    for z in range(m):
        p = prior[z]
        if p > 1e-14:
            b = blocks[z] / np.trace(blocks[z]).real
            conds.append(0.5 * (b + b.conj().T))
        else:
            conds.append(np.eye(d, dtype=complex) / d)
    return CQState(prior, tuple(conds))


def z_side_state(bundle: DualStateBundle) -> CQState:
    """Computational-basis measurement of A with side system B."""
    blocks = np.einsum("zwbc,zwdc->zbd", bundle.psi, bundle.psi.conj())
    return _blocks_to_cq(blocks)


def x_side_state(bundle: DualStateBundle) -> CQState:
    """Fourier-basis measurement of A with side systems A' (x) C."""
    psit = np.einsum("zx,zabc->xabc", bundle.fourier.conj(), bundle.psi)
    blocks = np.einsum("xabc,xdbe->xacde", psit, psit.conj())
    d_side = bundle.d_a * bundle.d_c
    return _blocks_to_cq(blocks.reshape(bundle.d_a, d_side, d_side))


def duality_check(bundle: DualStateBundle, alpha: float, which: str) -> float:
    """Residual |H(Z_A|B) + H_dual(X_A|A'C) - log2 d_A| on a bundle.

    ``which`` selects the entropy pairing:
      * ``petz_up_sand_down`` -- sigma-optimized Petz order alpha against
        marginal-anchored sandwiched order 1/alpha; valid for alpha in
        (0, inf),
      * ``sand_up_pair``      -- sigma-optimized sandwiched order alpha
        against order alpha/(2 alpha - 1); valid for alpha in [1/2, inf],
        with the alpha = 1/2 and alpha = inf endpoints evaluated through
        the guessing-probability closed form.
    """
    z_st = z_side_state(bundle)
    x_st = x_side_state(bundle)
    log_d = math.log2(bundle.d_a)
    if which == "petz_up_sand_down":
        if not (0 < alpha < math.inf):
            raise ValueError(f"alpha must be finite positive, got {alpha}")
        lhs = petz_h_up(z_st, alpha) + sandwiched_h_down(x_st, 1.0 / alpha)
    elif which == "sand_up_pair":
        if not alpha >= 0.5:
            raise ValueError(f"alpha must be >= 1/2, got {alpha}")
        if alpha == 0.5:
            dual = math.inf
        elif math.isinf(alpha):
            dual = 0.5
        else:
            dual = alpha / (2.0 * alpha - 1.0)
        # the inner maximizations only need to land well inside the 1e-5
        # residual gate; 1e-7 keeps slow boundary-spectrum instances cheap
        lhs = (sandwiched_h_up(z_st, alpha, value_tol=1e-7)
               + sandwiched_h_up(x_st, dual, value_tol=1e-7))
    else:
        raise ValueError(f"unknown pairing {which!r}")
    return float(abs(lhs - log_d))


def uncertainty_check(rho_abc: np.ndarray, dims, alpha: float,
                      fourier: np.ndarray | None = None) -> float:
    """Slack of the conjugate-measurement uncertainty inequality.

    For an arbitrary (not necessarily copy-structured) tripartite state on
    A (x) B (x) C, measuring A in the computational basis with side B and in
    the Fourier basis with side C obeys

        H_petz_up(Z_A|B, alpha) + H_sand_down(X_A|C, 1/alpha) >= log2 d_A.

    Returns LHS - log2 d_A; accepts a density operator or a pure vector.
    """
    d_a, d_b, d_c = (int(x) for x in dims)
    rho = np.asarray(rho_abc, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if rho.shape != (d_a * d_b * d_c,) * 2:
        raise OperatorError(f"state shape {rho.shape} does not match dims {dims}")
    f = _conjugate_basis(d_a, fourier)

    rho_ab = partial_trace(rho, (d_a, d_b, d_c), (0, 1))
    tz = rho_ab.reshape(d_a, d_b, d_a, d_b)
    z_blocks = np.stack([tz[z, :, z, :] for z in range(d_a)])

    rho_ac = partial_trace(rho, (d_a, d_b, d_c), (0, 2))
    rot = np.kron(f.conj().T, np.eye(d_c))
    rx = (rot @ rho_ac @ rot.conj().T).reshape(d_a, d_c, d_a, d_c)
    x_blocks = np.stack([rx[x, :, x, :] for x in range(d_a)])

    lhs = (petz_h_up(_blocks_to_cq(z_blocks), alpha)
           + sandwiched_h_down(_blocks_to_cq(x_blocks), 1.0 / alpha))
    return float(lhs - math.log2(d_a))


def recovery_channel(d_a: int,
                     fourier: np.ndarray | None = None) -> list[np.ndarray]:
    """Kraus operators on A (x) A' that undo the Fourier pinch of A.

    One operator per Fourier label x:

        K(x) = sqrt(d_a) * sum_z <z|x~> |z><x~|_A (x) |z><z|_A'.

    The list satisfies sum_x K(x)^dag K(x) = I, each K(x) absorbs the
    Fourier-basis pinch projector of A (K(x) applied after the projector
    onto x' is delta_{xx'} K(x)), and K(x) maps the copy projector to
    (1/sqrt(d_a)) times itself -- which is what makes the channel restore
    copy-invariant operators after the pinch.
    """
    f = _conjugate_basis(int(d_a), fourier)
    d = int(d_a)
    kraus = []
    root_d = math.sqrt(d)
    for x in range(d):
        k = np.zeros((d * d, d * d), dtype=complex)
        for z in range(d):
            a_part = np.zeros((d, d), dtype=complex)
            a_part[z, :] = f[:, x].conj()
            ap_part = np.zeros((d, d), dtype=complex)
            ap_part[z, z] = 1.0
            k += f[z, x] * np.kron(a_part, ap_part)
        kraus.append(root_d * k)
    comp = sum(k.conj().T @ k for k in kraus)
    if np.max(np.abs(comp - np.eye(d * d))) > KRAUS_TOL:
        raise OperatorError("recovery Kraus operators are not trace preserving")
    return kraus


def apply_kraus(kraus: list[np.ndarray], op: np.ndarray,
                ancilla_dim: int = 1) -> np.ndarray:
    """Apply sum_x (K_x (x) I) op (K_x (x) I)^dag."""
    if ancilla_dim > 1:
        eye = np.eye(ancilla_dim)
        kraus = [np.kron(k, eye) for k in kraus]
    out = np.zeros_like(np.asarray(op, dtype=complex))
    for k in kraus:
        out += k @ op @ k.conj().T
    return out


def verify_recovery_identity(theta: np.ndarray, sigma: CQState, d_a: int,
                          d_b: int,
                          fourier: np.ndarray | None = None) -> tuple[float, float]:
    """Check the two recovery identities; returns their max-norm residuals.

    ``theta`` is an operator on A (x) A' (x) B invariant under the copy
    projector of A,A'; ``sigma`` is a classical-quantum state on A' (x) B
    (classical on A' in the computational basis).  The identities:

      1. pinching A in the Fourier basis and then applying the recovery
         channel restores theta;
      2. pinching A in the Fourier basis of the copy-projected operator
         Pi (I_A (x) sigma) Pi yields (I_A / d_a) (x) sigma.
    """
    d_a, d_b = int(d_a), int(d_b)
    dims3 = (d_a, d_a, d_b)
    theta = np.asarray(theta, dtype=complex)
    if theta.shape != (d_a * d_a * d_b,) * 2:
        raise OperatorError(
            f"theta shape {theta.shape} does not match dims {dims3}")
    if sigma.alphabet_size != d_a or sigma.dim_b != d_b:
        raise OperatorError("sigma dimensions do not match (d_a, d_b)")
    f = _conjugate_basis(d_a, fourier)

    idx = np.arange(d_a) * d_a + np.arange(d_a)
    pi = np.zeros((d_a * d_a, d_a * d_a), dtype=complex)
    pi[idx, idx] = 1.0
    pi3 = np.kron(pi, np.eye(d_b))
    if np.max(np.abs(pi3 @ theta @ pi3 - theta)) > PROJECTOR_TOL:
        raise OperatorError("theta is not invariant under the copy projector")

    kraus = recovery_channel(d_a, f)
    pinched = pinch_factor(theta, dims3, 0, basis=f)
    restored = apply_kraus(kraus, pinched, ancilla_dim=d_b)
    res_restore = float(np.max(np.abs(restored - theta)))

    sigma_dense = sigma.joint()
    projected = pi3 @ np.kron(np.eye(d_a), sigma_dense) @ pi3
    px = pinch_factor(projected, dims3, 0, basis=f)
    target = np.kron(np.eye(d_a) / d_a, sigma_dense)
    res_project = float(np.max(np.abs(px - target)))
    return res_restore, res_project


def pguess_fidelity_check(bundle: DualStateBundle) -> float:
    """Residual of the guessing/fidelity identity on a bundle.

    The optimal probability of guessing the computational-basis value of A
    from B equals the squared fidelity between the Fourier-pinched A,A',C
    marginal and the closest product (I_A/d_a) (x) sigma.  The left side is
    evaluated with the semidefinite guessing solver, the right side through
    the sigma-optimized sandwiched entropy of order 1/2, which is the
    fidelity maximization in disguise.
    """
    lhs = guessing_probability(z_side_state(bundle))
    h_half = sandwiched_h_up(x_side_state(bundle), 0.5)
    rhs = 2.0 ** (h_half - math.log2(bundle.d_a))
    return float(abs(lhs - rhs))


def random_bundle(rng: np.random.Generator, d_a: int, d_c: int,
                  rank: int | None = None,
                  fourier: np.ndarray | None = None) -> DualStateBundle:
    """Bundle built from a random density operator on A (x) C."""
    rho = random_density(rng, d_a * d_c, rank=rank)
    return build_dual_state(rho, (d_a, d_c), fourier)


def compression_dual_state(state: CQState) -> CQState:
    """Map a classical source with quantum side information to its dual.

    Given a classical-quantum state (Z with side system B), purify the joint
    block-diagonal operator, copy the classical register, and measure it in
    the Fourier basis: the outcome is uniform on d_Z values and the leftover
    side systems A' (x) C carry exactly the randomness-extraction problem
    whose converse exponent mirrors the compression converse exponent,

        E_pa(r) = E_dc_sp(log2 d_Z - r).

    The returned CQState is that extraction instance.
    """
    d_a = state.alphabet_size
    d_b = state.dim_b
    vec = purify(state.joint(), trim=True).reshape(d_a, d_b, -1)
    bundle = bundle_from_purification(vec)
    return x_side_state(bundle)


@dataclass(frozen=True)
class DualityReport:
    """One verification outcome in the JSON report schema."""

    check: str
    instance_seed: int
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance

    def as_dict(self) -> dict:
        return {"check": self.check, "instance_seed": self.instance_seed,
                "residual": self.residual, "tolerance": self.tolerance,
                "pass": self.passed}


CLOSED_FORM_TOL = 1e-6
OPTIMIZER_TOL = 1e-5
DEFAULT_ALPHAS = (0.6, 0.75, 1.0, 1.5, 2.0, 4.0)


def duality_suite(n_bundles: int = 10, seed: int = 0,
                  alphas=DEFAULT_ALPHAS) -> list[DualityReport]:
    """Run the trade-off, guessing, and recovery checks on random bundles.

    Bundle i uses seed ``seed + i`` with d_a alternating over {2, 3} and
    d_c over {1, 2, 3}.  Returns one report per check instance.
    """
    reports = []
    for i in range(n_bundles):
        inst_seed = seed + i
        rng = np.random.default_rng(inst_seed)
        d_a = (2, 3)[i % 2]
        d_c = (1, 2, 3)[i % 3]
        bundle = random_bundle(rng, d_a, d_c)
        reports.append(DualityReport(
            "copy_projector_invariance", inst_seed,
            bundle.projector_residual(), PROJECTOR_TOL))
        for alpha in alphas:
            reports.append(DualityReport(
                f"tradeoff_petz_up_sand_down_alpha_{alpha:g}", inst_seed,
                duality_check(bundle, alpha, "petz_up_sand_down"),
                CLOSED_FORM_TOL))
            reports.append(DualityReport(
                f"tradeoff_sand_up_pair_alpha_{alpha:g}", inst_seed,
                duality_check(bundle, alpha, "sand_up_pair"),
                OPTIMIZER_TOL))
        reports.append(DualityReport(
            "guessing_fidelity_identity", inst_seed,
            pguess_fidelity_check(bundle), OPTIMIZER_TOL))
        theta = bundle.copy_projector / d_a
        theta3 = np.kron(theta, np.eye(2) / 2)
        sigma = CQState(np.full(d_a, 1.0 / d_a),
                        tuple(random_density(rng, 2) for _ in range(d_a)))
        res1, res2 = verify_recovery_identity(theta3, sigma, d_a, 2)
        reports.append(DualityReport(
            "recovery_restores_pinched_operator", inst_seed, res1, 1e-10))
        reports.append(DualityReport(
            "projected_pinch_is_product", inst_seed, res2, 1e-10))
    return reports
