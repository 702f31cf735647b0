"""Relative entropies, conditional Renyi entropies, and optimal guessing.

Three divergence families are implemented on PSD matrices (not necessarily
normalized): the standard relative entropy, the Petz family and the
sandwiched family, all in bits.  On top of them sit three conditional
entropies of a bipartite state rho_AB:

* ``petz_h_up``      -- Petz divergence minimized over sigma_B, which has the
                        closed form -(a/(a-1)) log2 tr[(tr_A rho^a)^(1/a)],
* ``sandwiched_h_down`` -- sandwiched divergence at sigma_B = rho_B,
* ``sandwiched_h_up``   -- sandwiched divergence minimized over sigma_B, by
                        damped fixed-point iteration (no closed form).

Inputs are either a dense bipartite operator with ``dims=(d_A, d_B)`` or a
:class:`~cqrel.channels.CQState`; the CQ path works block by block and never
assembles the joint matrix.  ``alpha = math.inf`` is supported on CQ states
only, through the optimal guessing probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import CQState
from .operators import (
    OperatorError,
    eigh_psd,
    partial_trace,
    psd_power,
    require_hermitian,
    trace_norm,
    vn_entropy,
)

SUPPORT_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    Carries the best primal value (and dual bound where available) reached.
    """

    def __init__(self, message: str, value: float, dual: float | None = None):
        super().__init__(message)
        self.value = value
        self.dual = dual


@dataclass(frozen=True)
class DivergenceOrder:
    """Order parameter plus family tag for a relative entropy.

    ``variant`` is one of ``petz``, ``sandwiched``, ``umegaki``; ``alpha`` may
    be ``math.inf`` for the sandwiched family.  ``umegaki`` ignores alpha.
    """

    alpha: float
    variant: str = "sandwiched"

    def __post_init__(self):
        if self.variant not in ("petz", "sandwiched", "umegaki"):
            raise ValueError(f"unknown divergence variant {self.variant!r}")
        if self.variant != "umegaki":
            if not (self.alpha > 0):
                raise ValueError(f"alpha must be positive, got {self.alpha}")
            if math.isinf(self.alpha) and self.variant == "petz":
                raise ValueError("alpha = inf is only supported sandwiched")


def _support_violation(rho: np.ndarray, sigma: np.ndarray) -> bool:
    """True when rho has mass outside the support of sigma."""
    ws, vs = eigh_psd(sigma)
    kernel = vs[:, ws == 0]
    if kernel.shape[1] == 0:
        return False
    mass = float(np.real(np.trace(kernel.conj().T @ rho @ kernel)))
    return mass > SUPPORT_TOL * max(1.0, float(np.real(np.trace(rho))))


def umegaki_relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """tr[rho (log2 rho - log2 sigma)], +inf outside the support of sigma."""
    rho = require_hermitian(rho)
    sigma = require_hermitian(sigma)
    if _support_violation(rho, sigma):
        return math.inf
    wr, vr = eigh_psd(rho)
    ws, vs = eigh_psd(sigma)
    pos_r = wr > 0
    term1 = float(np.sum(wr[pos_r] * np.log2(wr[pos_r])))
    # tr[rho log2 sigma] via sigma's eigenbasis, support only
    overlap = np.abs(vs.conj().T @ rho @ vs).diagonal().real
    pos_s = ws > 0
    term2 = float(np.sum(overlap[pos_s] * np.log2(ws[pos_s])))
    return term1 - term2


def petz_divergence(rho: np.ndarray, sigma: np.ndarray, alpha: float) -> float:
    """(1/(a-1)) log2 tr[rho^a sigma^(1-a)], powers taken on supports."""
    if alpha == 1:
        raise ValueError("alpha = 1 is the standard relative entropy; "
                         "use umegaki_relative_entropy")
    if not (0 < alpha < math.inf):
        raise ValueError(f"alpha must be finite and positive, got {alpha}")
    rho = require_hermitian(rho)
    sigma = require_hermitian(sigma)
    if alpha > 1 and _support_violation(rho, sigma):
        return math.inf
    wr, vr = eigh_psd(rho)
    ws, vs = eigh_psd(sigma)
    ov = np.abs(vr.conj().T @ vs) ** 2
    pr = wr > 0
    ps = ws > 0
    q = float(np.einsum("i,j,ij->", wr[pr] ** alpha, ws[ps] ** (1 - alpha),
                        ov[np.ix_(pr, ps)]))
    if q <= 0:
        return math.inf
    return float(np.log2(q) / (alpha - 1))


def sandwiched_divergence(rho: np.ndarray, sigma: np.ndarray, alpha: float) -> float:
    """(1/(a-1)) log2 tr[(sigma^((1-a)/2a) rho sigma^((1-a)/2a))^a]."""
    if alpha == 1:
        raise ValueError("alpha = 1 is the standard relative entropy; "
                         "use umegaki_relative_entropy")
    if not (0 < alpha):
        raise ValueError(f"alpha must be positive, got {alpha}")
    rho = require_hermitian(rho)
    sigma = require_hermitian(sigma)
    if math.isinf(alpha):
        return _sandwiched_max_divergence(rho, sigma)
    if alpha > 1 and _support_violation(rho, sigma):
        return math.inf
    k = psd_power(sigma, (1 - alpha) / (2 * alpha))
    w, _ = eigh_psd(k @ rho @ k, tol=1e-8)
    q = float(np.sum(w[w > 0] ** alpha))
    if q <= 0:
        return math.inf
    return float(np.log2(q) / (alpha - 1))


def _sandwiched_max_divergence(rho: np.ndarray, sigma: np.ndarray) -> float:
    """log2 of the smallest t with rho <= t sigma (+inf when none exists)."""
    if _support_violation(rho, sigma):
        return math.inf
    k = psd_power(sigma, -0.5)
    w = np.linalg.eigvalsh(k @ rho @ k)
    top = float(w[-1]) if w.size else 0.0
    if top <= 0:
        return -math.inf
    return float(np.log2(top))


def divergence(rho: np.ndarray, sigma: np.ndarray, order: DivergenceOrder) -> float:
    """Dispatch on a :class:`DivergenceOrder`."""
    if order.variant == "umegaki" or order.alpha == 1:
        return umegaki_relative_entropy(rho, sigma)
    if order.variant == "petz":
        return petz_divergence(rho, sigma, order.alpha)
    return sandwiched_divergence(rho, sigma, order.alpha)


# ---------------------------------------------------------------------------
# input plumbing for the conditional entropies


def _coerce_bipartite(state, dims):
    """Normalize input to (kind, payload) where kind is 'cq' or 'dense'."""
    if isinstance(state, CQState):
        return "cq", state
    rho = require_hermitian(state)
    if dims is None:
        raise ValueError("dims=(d_A, d_B) is required for dense bipartite input")
    d_a, d_b = int(dims[0]), int(dims[1])
    if rho.shape[0] != d_a * d_b:
        raise OperatorError(
            f"operator dim {rho.shape[0]} does not factor as {d_a}x{d_b}")
    return "dense", (rho, d_a, d_b)


def conditional_vn_entropy(state, dims=None) -> float:
    """H(A|B) = H(AB) - H(B) in bits."""
    kind, payload = _coerce_bipartite(state, dims)
    if kind == "cq":
        st = payload
        h_joint = 0.0
        for x in range(st.alphabet_size):
            p = st.prior[x]
            if p > 0:
                h_joint += -p * np.log2(p) + p * vn_entropy(st.conditionals[x])
        return float(h_joint - vn_entropy(st.average()))
    rho, d_a, d_b = payload
    rho_b = partial_trace(rho, (d_a, d_b), keep=(1,))
    return float(vn_entropy(rho) - vn_entropy(rho_b))


def _power_trace_sum(blocks, alpha):
    """sum over blocks of tr[block^alpha] together with sum of block^alpha."""
    acc = None
    total = 0.0
    for b in blocks:
        w, v = eigh_psd(b, tol=1e-8)
        pw = np.zeros_like(w)
        pos = w > 0
        pw[pos] = w[pos] ** alpha
        total += float(pw.sum())
        m = (v * pw) @ v.conj().T
        acc = m if acc is None else acc + m
    return total, acc


def petz_h_up(state, alpha: float, dims=None) -> float:
    """Conditional Renyi entropy maximized over sigma_B, Petz family.

    Closed form: -(a/(a-1)) log2 tr[(tr_A rho_AB^a)^(1/a)].  At alpha = 1 this
    is the conditional von Neumann entropy.
    """
    if not (0 < alpha < math.inf):
        raise ValueError(f"alpha must be finite and positive, got {alpha}")
    if alpha == 1:
        return conditional_vn_entropy(state, dims)
    kind, payload = _coerce_bipartite(state, dims)
    if kind == "cq":
        st = payload
        _, theta = _power_trace_sum(
            [st.prior[x] * st.conditionals[x]
             for x in range(st.alphabet_size) if st.prior[x] > 0], alpha)
    else:
        rho, d_a, d_b = payload
        rho_a = psd_power(rho, alpha)
        theta = partial_trace(rho_a, (d_a, d_b), keep=(1,))
    w, _ = eigh_psd(theta, tol=1e-8)
    t = float(np.sum(w[w > 0] ** (1.0 / alpha)))
    return float(-(alpha / (alpha - 1)) * np.log2(t))


def _sandwich_blocks(state_kind, payload, sigma_b):
    """Blocks of (I (x) K) rho (I (x) K) with K = given matrix on B."""
    if state_kind == "cq":
        st = payload
        return [sigma_b @ (st.prior[x] * st.conditionals[x]) @ sigma_b
                for x in range(st.alphabet_size) if st.prior[x] > 0]
    rho, d_a, d_b = payload
    kk = np.kron(np.eye(d_a, dtype=complex), sigma_b)
    return [kk @ rho @ kk]


def _marginal_b(state_kind, payload):
    if state_kind == "cq":
        return payload.average()
    rho, d_a, d_b = payload
    return partial_trace(rho, (d_a, d_b), keep=(1,))


def sandwiched_h_down(state, alpha: float, dims=None) -> float:
    """Conditional Renyi entropy at sigma_B = rho_B, sandwiched family."""
    if not (0 < alpha):
        raise ValueError(f"alpha must be positive, got {alpha}")
    if alpha == 1:
        return conditional_vn_entropy(state, dims)
    kind, payload = _coerce_bipartite(state, dims)
    if math.isinf(alpha):
        if kind != "cq":
            raise TypeError("alpha = inf needs a CQState input")
        return _cq_h_inf_down(payload)
    rho_b = _marginal_b(kind, payload)
    k = psd_power(rho_b, (1 - alpha) / (2 * alpha))
    blocks = _sandwich_blocks(kind, payload, k)
    q = 0.0
    for b in blocks:
        w, _ = eigh_psd(b, tol=1e-8)
        q += float(np.sum(w[w > 0] ** alpha))
    return float(np.log2(q) / (1 - alpha))


def _cq_h_inf_down(st: CQState) -> float:
    """-D_max-style endpoint at sigma_B = rho_B for a CQ state."""
    k = psd_power(st.average(), -0.5)
    top = 0.0
    for x in range(st.alphabet_size):
        if st.prior[x] > 0:
            w = np.linalg.eigvalsh(k @ (st.prior[x] * st.conditionals[x]) @ k)
            top = max(top, float(w[-1]))
    return float(-np.log2(top))


def sandwiched_h_up(state, alpha: float, dims=None, *,
                    value_tol: float = 1e-9, max_iter: int = 60000) -> float:
    """Conditional Renyi entropy maximized over sigma_B, sandwiched family.

    No closed form is known, so the maximizer is found by fixed-point
    iteration sigma <- normalize(tr_A[(K rho K)^a]), K = I (x)
    sigma^((1-a)/2a), damped and run from both rho_B and the maximally
    mixed start (the best converged value wins -- the map can have spurious
    rank-deficient fixed points).  The damping factor is min(1/2, 1/a):
    linearizing the map at the optimum gives local contraction
    |1 - damping * a|, so a fixed 1/2 stops contracting at a = 4 while 1/a
    keeps the factor at 0.  Every iterate's value is a valid lower bound;
    the best value seen is returned.

    Two orders bypass the fixed point: ``alpha = 0.5`` runs an alternating
    fidelity ascent (the optimum there often has rank-deficient sigma,
    which the fixed-point map cannot move through), and ``alpha =
    math.inf`` uses the guessing-probability closed form and requires a
    CQState.
    """
    if not (alpha >= 0.5):
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    if alpha == 1:
        return conditional_vn_entropy(state, dims)
    kind, payload = _coerce_bipartite(state, dims)
    if math.isinf(alpha):
        if kind != "cq":
            raise TypeError("alpha = inf needs a CQState input "
                            "(guessing-probability endpoint)")
        return float(-np.log2(guessing_probability(payload)))

    if alpha == 0.5:
        return _h_up_half(kind, payload, value_tol, max_iter)

    d_b = payload.dim_b if kind == "cq" else payload[2]
    rho_b = _marginal_b(kind, payload)
    rho_b = rho_b / np.real(np.trace(rho_b))
    starts = [rho_b, np.eye(d_b, dtype=complex) / d_b]

    exponent = (1 - alpha) / (2 * alpha)
    eta = min(0.5, 1.0 / alpha)
    if kind == "cq":
        weighted = np.stack(
            [payload.prior[x] * np.asarray(payload.conditionals[x],
                                           dtype=complex)
             for x in range(payload.alphabet_size) if payload.prior[x] > 0])
    else:
        eye_a = np.eye(payload[1], dtype=complex)
    best = -math.inf
    any_converged = False
    for sigma in starts:
        converged = False
        prev = None
        diff_prev = None
        hits = 0
        for _ in range(max_iter):
            k = psd_power(sigma, exponent)
            if kind == "cq":
                blocks = k @ weighted @ k
            else:
                kk = np.kron(eye_a, k)
                blocks = (kk @ payload[0] @ kk)[None]
            blocks = 0.5 * (blocks + np.conj(np.swapaxes(blocks, -1, -2)))
            w, v = np.linalg.eigh(blocks)
            w = np.where(w < 1e-12 * np.clip(w[..., -1:], 0.0, None),
                         0.0, w)
            pw = w ** alpha
            q = float(pw.sum())
            if kind == "cq":
                t_acc = np.einsum("mik,mk,mjk->ij", v, pw, np.conj(v))
            else:
                ba = (v[0] * pw[0]) @ v[0].conj().T
                t_acc = partial_trace(ba, (payload[1], d_b), keep=(1,))
            value = float(np.log2(q) / (1 - alpha))
            if value > best:
                best = value
            if prev is not None:
                diff = value - prev
                # The damped iteration converges linearly, so the remaining
                # gap is about diff * r / (1 - r); stop only once that
                # projection (not the raw step) is inside tolerance.  At the
                # numerical floor the value just wiggles by roundoff.
                floor = 1e-14 * max(1.0, abs(value))
                if abs(diff) <= floor:
                    hits += 1
                elif diff_prev is not None and diff_prev > 0 and diff > 0:
                    r = min(diff / diff_prev, 0.99995)
                    remaining = diff * r / (1.0 - r)
                    hits = hits + 1 if remaining < 0.5 * value_tol else 0
                elif abs(diff) < 0.25 * value_tol:
                    hits += 1
                else:
                    hits = 0
                if hits >= 2:
                    converged = True
                    break
                diff_prev = diff
            prev = value
            t_acc = 0.5 * (t_acc + t_acc.conj().T)
            tr = float(np.real(np.trace(t_acc)))
            if tr <= 0:
                break
            sigma = (1.0 - eta) * sigma + eta * (t_acc / tr)
        any_converged = any_converged or converged
    if not any_converged:
        raise ConvergenceError(
            f"sigma_B fixed point did not reach {value_tol} in {max_iter} "
            f"iterations (best value {best:.12g})", best)
    return best


def _h_up_half(kind, payload, value_tol: float, max_iter: int) -> float:
    """Order-1/2 sigma optimization by alternating fidelity ascent.

    The order-1/2 objective is 2 log2 of the fidelity to the closest
    I (x) sigma, and its maximizer is often a boundary (rank-deficient)
    sigma, where the generic damped fixed point stalls: rank deficiency is
    absorbing for that map.  Alternating between the optimal Uhlmann
    rotation (a polar/SVD step at fixed sigma) and the optimal sqrt(sigma)
    (positive part of the rotated accumulant at fixed rotation) is monotone
    nondecreasing, moves freely through rank changes, and in practice
    converges in tens of iterations to machine precision.
    """
    if kind == "cq":
        st = payload
        d_b = st.dim_b
        roots = [psd_power(p * c, 0.5)
                 for p, c in zip(st.prior, st.conditionals)]

        def step(sq):
            h = np.zeros((d_b, d_b), dtype=complex)
            val = 0.0
            for r in roots:
                w_l, s_vals, v_t = np.linalg.svd(r @ sq)
                val += float(s_vals.sum())
                h += (v_t.conj().T) @ (w_l.conj().T) @ r
            return val, h
    else:
        rho, d_a, d_b = payload
        root = psd_power(rho, 0.5)

        def step(sq):
            w_l, s_vals, v_t = np.linalg.svd(root @ np.kron(np.eye(d_a), sq))
            val = float(s_vals.sum())
            u_root = (v_t.conj().T) @ (w_l.conj().T) @ root
            h = partial_trace(u_root, (d_a, d_b), keep=(1,))
            return val, h

    sq = np.eye(d_b, dtype=complex) / math.sqrt(d_b)
    prev = None
    hits = 0
    for _ in range(max_iter):
        val, h = step(sq)
        if prev is not None:
            hits = hits + 1 if val - prev < 0.25 * value_tol else 0
            if hits >= 2:
                return 2.0 * math.log2(val)
        prev = val
        h = 0.5 * (h + h.conj().T)
        w, v = np.linalg.eigh(h)
        pos = np.maximum(w, 0.0)
        norm = math.sqrt(float(np.sum(pos ** 2)))
        if norm <= 0.0:
            break
        sq = (v * (pos / norm)) @ v.conj().T
    best = 2.0 * math.log2(prev) if prev and prev > 0 else -math.inf
    raise ConvergenceError(
        f"fidelity ascent did not reach {value_tol} in {max_iter} "
        f"iterations (best value {best:.12g})", best)


# ---------------------------------------------------------------------------
# optimal guessing


@dataclass(frozen=True)
class GuessingResult:
    value: float
    dual_value: float
    gap: float
    iterations: int
    method: str


def _ensemble_blocks(state) -> list:
    if isinstance(state, CQState):
        return [state.prior[x] * state.conditionals[x]
                for x in range(state.alphabet_size) if state.prior[x] > 0]
    # accept a raw list of weighted PSD blocks
    return [require_hermitian(b) for b in state]


def guessing_probability_detail(state, gap_tol: float = 1e-9,
                                max_iter: int = 5000) -> GuessingResult:
    """Optimal probability of guessing the classical index from B.

    Two-element ensembles use the exact binary formula
    1/2 (1 + || A_0 - A_1 ||_1); larger ensembles run a measurement ascent
    from the pretty-good measurement with a dual certificate, stopping once
    the primal-dual gap is at most ``gap_tol``.
    """
    blocks = _ensemble_blocks(state)
    m = len(blocks)
    if m == 0:
        raise ValueError("empty ensemble")
    if m == 1:
        return GuessingResult(1.0, 1.0, 0.0, 0, "trivial")
    if m == 2:
        v = 0.5 * (float(np.real(np.trace(blocks[0] + blocks[1])))
                   + trace_norm(blocks[0] - blocks[1]))
        return GuessingResult(v, v, 0.0, 0, "helstrom")

    d = blocks[0].shape[0]
    eye = np.eye(d, dtype=complex)
    s = sum(blocks)
    s_mh = psd_power(s, -0.5)
    povm = [s_mh @ b @ s_mh for b in blocks]
    _complete(povm, eye)

    best_primal = -math.inf
    best_dual = math.inf
    for it in range(1, max_iter + 1):
        primal = float(sum(np.real(np.trace(b @ lam))
                           for b, lam in zip(blocks, povm)))
        best_primal = max(best_primal, primal)
        y = sum(0.5 * (b @ lam + lam @ b) for b, lam in zip(blocks, povm))
        y = 0.5 * (y + y.conj().T)
        mu = max(float(np.linalg.eigvalsh(b - y)[-1]) for b in blocks)
        dual = float(np.real(np.trace(y))) + max(mu, 0.0) * d
        best_dual = min(best_dual, dual)
        if best_dual - best_primal <= gap_tol:
            return GuessingResult(best_primal, best_dual,
                                  best_dual - best_primal, it, "ascent")
        g = sum(b @ lam @ b for b, lam in zip(blocks, povm))
        g = 0.5 * (g + g.conj().T)
        g_mh = psd_power(g, -0.5, zero_tol=1e-14)
        povm = [g_mh @ b @ lam @ b @ g_mh for b, lam in zip(blocks, povm)]
        povm = [0.5 * (lam + lam.conj().T) for lam in povm]
        _complete(povm, eye)
    raise ConvergenceError(
        f"measurement ascent gap {best_dual - best_primal:.3e} above "
        f"{gap_tol} after {max_iter} iterations",
        best_primal, best_dual)


def _complete(povm: list, eye: np.ndarray) -> None:
    """Distribute the deficit I - sum(povm) uniformly to keep completeness."""
    m = len(povm)
    rem = eye - sum(povm)
    rem = 0.5 * (rem + rem.conj().T)
    for i in range(m):
        povm[i] = povm[i] + rem / m


def guessing_probability(state, gap_tol: float = 1e-9,
                         max_iter: int = 5000) -> float:
    return guessing_probability_detail(state, gap_tol, max_iter).value


# ---------------------------------------------------------------------------
# block-diagonal (CQ) comparisons against product targets


def cq_divergence_to_product(state: CQState, sigma_b: np.ndarray,
                             classical_weight: float | None = None) -> float:
    """D(rho_XB || w * 1_X (x) sigma_B) block by block, base two.

    ``classical_weight`` defaults to uniform 1/|X|; the target's classical
    part is w on every symbol (so w = 1/|X| compares against the maximally
    mixed register).
    """
    m = state.alphabet_size
    w_cl = 1.0 / m if classical_weight is None else float(classical_weight)
    sigma_b = require_hermitian(sigma_b)
    ws, vs = eigh_psd(sigma_b)
    pos = ws > 0
    log_sigma = (vs[:, pos] * np.log2(ws[pos] * w_cl)) @ vs[:, pos].conj().T
    total = 0.0
    for x in range(m):
        p = state.prior[x]
        if p <= 0:
            continue
        block = p * state.conditionals[x]
        if _support_violation(block, sigma_b):
            return math.inf
        wb, vb = eigh_psd(block)
        posb = wb > 0
        total += float(np.sum(wb[posb] * np.log2(wb[posb])))
        total -= float(np.real(np.trace(block @ log_sigma)))
    return total


def cq_fidelity_to_product(state: CQState, sigma_b: np.ndarray,
                           classical_weight: float | None = None) -> float:
    """Root fidelity F(rho_XB, w * 1_X (x) sigma_B), block by block."""
    from .operators import fidelity
    m = state.alphabet_size
    w_cl = 1.0 / m if classical_weight is None else float(classical_weight)
    total = 0.0
    for x in range(m):
        p = state.prior[x]
        if p <= 0:
            continue
        total += fidelity(p * state.conditionals[x], w_cl * sigma_b)
    return float(total)
