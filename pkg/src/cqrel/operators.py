"""Dense operator primitives shared by every higher layer.

All operators are plain complex ndarrays.  Conventions used throughout the
package:

* logarithms are base two,
* eigenvalues below ``zero_tol * lambda_max`` are treated as exact zeros,
* powers and logarithms act on the support only (``0**t == 0``, including
  negative ``t``, and ``0 * log 0 == 0``),
* composite systems are row-major tensor products, factor 0 leftmost.
"""

from __future__ import annotations

import math

import numpy as np

ZERO_TOL = 1e-12
HERM_TOL = 1e-10
CLUSTER_TOL = 1e-9


class OperatorError(ValueError):
    """Raised when an operator violates a structural precondition."""


def require_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> np.ndarray:
    """Return ``a`` as a complex array after checking conjugate symmetry."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise OperatorError(f"expected a square matrix, got shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if dev > tol * scale:
        raise OperatorError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return 0.5 * (a + a.conj().T)


def require_density(rho: np.ndarray, tol: float = HERM_TOL,
                    trace_tol: float = 1e-8) -> np.ndarray:
    """Validate a density operator: Hermitian, PSD, unit trace."""
    rho = require_hermitian(rho, tol)
    w = np.linalg.eigvalsh(rho)
    scale = max(1.0, float(w[-1]) if w.size else 1.0)
    if w.size and w[0] < -tol * scale:
        raise OperatorError(f"matrix has negative eigenvalue {w[0]:.3e}")
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > trace_tol:
        raise OperatorError(f"trace is {tr!r}, expected 1")
    return rho


def eigh_psd(a: np.ndarray, zero_tol: float = ZERO_TOL,
             tol: float = HERM_TOL):
    """Eigendecomposition of a PSD matrix with small eigenvalues clamped to 0.

    Returns ``(w, v)`` with ``w`` ascending; entries below
    ``zero_tol * max(w)`` (and tiny negatives within ``-tol * scale``) are set
    to exactly zero.  Genuinely negative spectra raise.
    """
    a = require_hermitian(a, tol)
    w, v = np.linalg.eigh(a)
    top = float(w[-1]) if w.size else 0.0
    scale = max(1.0, abs(top))
    if w.size and w[0] < -tol * scale:
        raise OperatorError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    w = w.copy()
    w[w < zero_tol * max(top, 0.0)] = 0.0
    w[w < 0.0] = 0.0
    return w, v


def spectral_transform(a: np.ndarray, f, zero_tol: float = ZERO_TOL) -> np.ndarray:
    """Apply a scalar function to a PSD matrix through its eigenbasis.

    ``f`` is evaluated on the clamped eigenvalues, so whatever value ``f``
    assigns at 0 is what the kernel of ``a`` receives.  For the support-only
    power/log conventions use :func:`psd_power` / :func:`matrix_log2`.
    """
    w, v = eigh_psd(a, zero_tol)
    fw = np.array([float(f(x)) for x in w])
    return (v * fw) @ v.conj().T


def psd_power(a: np.ndarray, t: float, zero_tol: float = ZERO_TOL) -> np.ndarray:
    """``a ** t`` on the support of ``a`` (``0 ** t == 0``, any real ``t``)."""
    w, v = eigh_psd(a, zero_tol)
    fw = np.zeros_like(w)
    pos = w > 0
    fw[pos] = w[pos] ** t
    return (v * fw) @ v.conj().T


def matrix_log2(a: np.ndarray, zero_tol: float = ZERO_TOL) -> np.ndarray:
    """Base-two logarithm on the support of ``a`` (kernel maps to 0)."""
    w, v = eigh_psd(a, zero_tol)
    fw = np.zeros_like(w)
    pos = w > 0
    fw[pos] = np.log2(w[pos])
    return (v * fw) @ v.conj().T


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def kron_all(*ops: np.ndarray) -> np.ndarray:
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values."""
    return float(np.sum(np.linalg.svd(np.asarray(a, dtype=complex),
                                      compute_uv=False)))


def partial_trace(a: np.ndarray, dims, keep) -> np.ndarray:
    """Trace out all factors not listed in ``keep``.

    ``dims`` gives the factor dimensions left to right; ``keep`` is an
    iterable of factor indices.  Kept factors stay in their original relative
    order.
    """
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    keep = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= n for i in keep):
        raise OperatorError(f"keep indices {keep} out of range for {n} factors")
    total = int(np.prod(dims))
    a = np.asarray(a, dtype=complex)
    if a.shape != (total, total):
        raise OperatorError(f"operator shape {a.shape} does not match dims {dims}")
    t = a.reshape(dims + dims)
    # einsum with integer subscripts: traced factors share row/col index.
    row = list(range(n))
    col = [i if i not in keep else n + i for i in range(n)]
    out_sub = [i for i in keep] + [n + i for i in keep]
    out = np.einsum(t, row + col, out_sub)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return out.reshape(d_keep, d_keep)


def permute_vector(v: np.ndarray, dims, order) -> np.ndarray:
    """Reorder tensor factors of a state vector."""
    dims = tuple(int(d) for d in dims)
    v = np.asarray(v, dtype=complex).reshape(dims)
    return np.transpose(v, tuple(order)).reshape(-1)


def permute_operator(a: np.ndarray, dims, order) -> np.ndarray:
    """Reorder tensor factors of an operator."""
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    order = tuple(int(i) for i in order)
    t = np.asarray(a, dtype=complex).reshape(dims + dims)
    perm = order + tuple(n + i for i in order)
    d = int(np.prod(dims))
    return np.transpose(t, perm).reshape(d, d)


def embed_factor(op: np.ndarray, dims, axis: int) -> np.ndarray:
    """``I (x) ... (x) op (x) ... (x) I`` with ``op`` at position ``axis``."""
    dims = tuple(int(d) for d in dims)
    mats = [np.eye(d, dtype=complex) for d in dims]
    mats[axis] = np.asarray(op, dtype=complex)
    return kron_all(*mats)


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Root fidelity ``|| sqrt(rho) sqrt(sigma) ||_1``.

    Accepts subnormalized PSD operators; for unit-trace inputs the value lies
    in [0, 1] up to roundoff.
    """
    a = psd_power(rho, 0.5) @ psd_power(sigma, 0.5)
    val = float(np.sum(np.linalg.svd(a, compute_uv=False)))
    return max(val, 0.0)


def purify(rho: np.ndarray, zero_tol: float = ZERO_TOL,
           trim: bool = False) -> np.ndarray:
    """Canonical purification ``sum_i sqrt(l_i) |e_i>|i>``.

    Eigenvalues are taken in descending order; each eigenvector's phase is
    fixed so its first nonzero amplitude is real positive, making the output
    deterministic.  With ``trim`` the ancilla dimension is the rank of ``rho``
    (at least 1) instead of ``dim``.
    """
    w, v = eigh_psd(rho, zero_tol)
    order = np.argsort(w)[::-1]
    w = w[order]
    v = v[:, order]
    d = rho.shape[0]
    for j in range(d):
        col = v[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            v[:, j] = col / ph
    r = d
    if trim:
        r = max(int(np.count_nonzero(w > 0)), 1)
    psi = (v[:, :r] * np.sqrt(w[:r])[None, :]).reshape(d * r)
    return psi


def pinch(a: np.ndarray, basis: np.ndarray | None = None) -> np.ndarray:
    """Project onto the diagonal in an orthonormal basis (default computational).

    ``basis`` holds the basis vectors as columns and must be unitary.
    """
    a = np.asarray(a, dtype=complex)
    d = a.shape[0]
    if basis is None:
        return np.diag(np.diag(a).copy())
    u = np.asarray(basis, dtype=complex)
    if u.shape != (d, d):
        raise OperatorError(f"basis shape {u.shape} does not match dim {d}")
    if np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-10:
        raise OperatorError("pinching basis is not orthonormal")
    diag = np.diag(u.conj().T @ a @ u).copy()
    return (u * diag) @ u.conj().T


def pinch_factor(a: np.ndarray, dims, axis: int,
                 basis: np.ndarray | None = None) -> np.ndarray:
    """Pinch one tensor factor of a multipartite operator."""
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    d_ax = dims[axis]
    a = np.asarray(a, dtype=complex)
    if basis is not None:
        u = np.asarray(basis, dtype=complex)
        if np.max(np.abs(u.conj().T @ u - np.eye(d_ax))) > 1e-10:
            raise OperatorError("pinching basis is not orthonormal")
        rot = embed_factor(u.conj().T, dims, axis)
        a = rot @ a @ rot.conj().T
    t = a.reshape(dims + dims)
    t = np.moveaxis(t, (axis, n + axis), (0, 1))
    out = np.zeros_like(t)
    for z in range(d_ax):
        out[z, z] = t[z, z]
    out = np.moveaxis(out, (0, 1), (axis, n + axis))
    d = int(np.prod(dims))
    out = out.reshape(d, d)
    if basis is not None:
        rot = embed_factor(u, dims, axis)
        out = rot @ out @ rot.conj().T
    return out


def spectrum_count(a: np.ndarray, cluster_tol: float = CLUSTER_TOL) -> int:
    """Number of distinct eigenvalue clusters (absolute-gap clustering).

    Zero counts as an eigenvalue when present.  Neighbouring eigenvalues
    closer than ``cluster_tol`` merge into one cluster.
    """
    a = require_hermitian(a)
    w = np.sort(np.linalg.eigvalsh(a))
    return cluster_count(w, cluster_tol)


def cluster_count(values: np.ndarray, cluster_tol: float = CLUSTER_TOL) -> int:
    """Cluster a 1-d array of reals by absolute gaps and count the clusters."""
    w = np.sort(np.asarray(values, dtype=float))
    if w.size == 0:
        return 0
    return int(1 + np.count_nonzero(np.diff(w) > cluster_tol))


def vn_entropy(rho: np.ndarray) -> float:
    """von Neumann entropy in bits."""
    w, _ = eigh_psd(rho)
    pos = w[w > 0]
    return float(-np.sum(pos * np.log2(pos)))


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Wishart-style random density operator (full rank by default)."""
    r = dim if rank is None else int(rank)
    g = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
    m = g @ g.conj().T
    return m / np.real(np.trace(m))


def random_pure_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)
