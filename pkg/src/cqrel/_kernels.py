"""Integer kernels over prime fields, with numba and pure-numpy twins.

The only genuinely hot loops in the package live here: exhaustive collision
scans over the full Toeplitz family (up to ~1e4 matrices times ~1e4
difference vectors).  Each kernel has a numba ``@njit`` implementation and a
vectorized numpy fallback; ``CQREL_BACKEND=numba`` or ``=numpy`` forces one,
otherwise numba is used when importable.
"""

from __future__ import annotations

import os

import numpy as np


def _resolve_backend() -> str:
    choice = os.environ.get("CQREL_BACKEND", "").strip().lower()
    if choice in ("numba", "numpy"):
        if choice == "numba":
            import numba  # noqa: F401  -- fail loudly if forced but absent
        return choice
    if choice:
        raise ValueError(f"CQREL_BACKEND must be 'numba' or 'numpy', got {choice!r}")
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        return "numpy"


BACKEND = _resolve_backend()


def enumerate_vectors(q: int, length: int) -> np.ndarray:
    """All of F_q^length as an (q**length, length) int64 array, row-major.

    Row index in base q reads off the digits, most significant first.
    """
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*[np.arange(q, dtype=np.int64)] * length, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def _toeplitz_products(t_enum: np.ndarray, u: np.ndarray, q: int, k: int) -> np.ndarray:
    """(T u) mod q for every diagonal vector (rows of t_enum), vectorized.

    ``T[i, j] = t[(k-1) - i + j]``; with tail u of length n-k the i-th output
    coordinate is ``sum_j t[(k-1) - i + j] u[j]``.
    """
    nm1 = t_enum.shape[1]
    nk = u.shape[0]
    m = np.zeros((nm1, k), dtype=np.int64)
    for i in range(k):
        for j in range(nk):
            m[(k - 1) - i + j, i] = u[j]
    return (t_enum @ m) % q


def _max_collision_count_numpy(t_enum: np.ndarray, q: int, n: int, k: int) -> int:
    tails = enumerate_vectors(q, n - k)
    powers = q ** np.arange(k - 1, -1, -1, dtype=np.int64)
    worst = 0
    for u in tails:
        if not u.any():
            continue
        v = _toeplitz_products(t_enum, u, q, k)
        codes = v @ powers
        counts = np.bincount(codes, minlength=q ** k)
        worst = max(worst, int(counts.max()))
    return worst


def _collision_count_for_diff_numpy(t_enum: np.ndarray, q: int, n: int, k: int,
                                    diff: np.ndarray) -> int:
    head = np.asarray(diff[:k], dtype=np.int64) % q
    u = np.asarray(diff[k:], dtype=np.int64) % q
    if not u.any():
        return t_enum.shape[0] if not head.any() else 0
    v = _toeplitz_products(t_enum, u, q, k)
    hits = np.all((v + head[None, :]) % q == 0, axis=1)
    return int(np.count_nonzero(hits))


_max_collision_count_numba = None
_collision_count_for_diff_numba = None

if BACKEND == "numba":
    import numba

    @numba.njit(cache=True)
    def _max_collision_count_numba_impl(t_enum, q, n, k):  # pragma: no cover
        n_t = t_enum.shape[0]
        nk = n - k
        n_u = q ** nk
        qk = q ** k
        counts = np.zeros(qk, dtype=np.int64)
        u = np.zeros(nk, dtype=np.int64)
        worst = 0
        for ui in range(1, n_u):  # ui = 0 is the all-zero tail
            rem = ui
            for j in range(nk - 1, -1, -1):
                u[j] = rem % q
                rem //= q
            counts[:] = 0
            for ti in range(n_t):
                code = 0
                for i in range(k):
                    acc = 0
                    base = (k - 1) - i
                    for j in range(nk):
                        acc += t_enum[ti, base + j] * u[j]
                    code = code * q + (acc % q)
                counts[code] += 1
            for c in range(qk):
                if counts[c] > worst:
                    worst = counts[c]
        return worst

    @numba.njit(cache=True)
    def _collision_count_for_diff_numba_impl(t_enum, q, n, k, diff):  # pragma: no cover
        n_t = t_enum.shape[0]
        nk = n - k
        any_u = False
        for j in range(nk):
            if diff[k + j] % q != 0:
                any_u = True
                break
        if not any_u:
            for i in range(k):
                if diff[i] % q != 0:
                    return 0
            return n_t
        hits = 0
        for ti in range(n_t):
            ok = True
            for i in range(k):
                acc = diff[i] % q
                base = (k - 1) - i
                for j in range(nk):
                    acc += t_enum[ti, base + j] * (diff[k + j] % q)
                if acc % q != 0:
                    ok = False
                    break
            if ok:
                hits += 1
        return hits

    _max_collision_count_numba = _max_collision_count_numba_impl
    _collision_count_for_diff_numba = _collision_count_for_diff_numba_impl


def max_collision_count(t_enum: np.ndarray, q: int, n: int, k: int) -> int:
    """max over nonzero differences d of #{T : [I|T] d = 0}.

    ``t_enum`` holds one diagonal vector per row (length n-1).
    """
    t_enum = np.ascontiguousarray(t_enum, dtype=np.int64)
    if BACKEND == "numba":
        return int(_max_collision_count_numba(t_enum, q, n, k))
    return _max_collision_count_numpy(t_enum, q, n, k)


def collision_count_for_diff(t_enum: np.ndarray, q: int, n: int, k: int,
                             diff: np.ndarray) -> int:
    """#{T : [I|T] d = 0} for one difference vector d of length n."""
    t_enum = np.ascontiguousarray(t_enum, dtype=np.int64)
    diff = np.ascontiguousarray(diff, dtype=np.int64)
    if BACKEND == "numba":
        return int(_collision_count_for_diff_numba(t_enum, q, n, k, diff))
    return _collision_count_for_diff_numpy(t_enum, q, n, k, diff)
