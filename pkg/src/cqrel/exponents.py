"""Error-exponent bounds for channel coding, data compression, and hashing.

The auxiliary function at the center of everything is

    e0(s, P, W) = -log2 tr[ (sum_x P(x) phi_x^(1/(1+s)))^(1+s) ],

whose identity with the Petz conditional entropy of the joint channel state,

    e0(s, P, W) = s * (log2 |X| - petz_h_up(alpha = 1/(1+s))),

is exposed as a residual check.  Channel-coding bounds maximize
``e0 - s R`` over s (random coding on [0, 1], sphere packing on [0, s_max]);
compression and privacy-amplification bounds maximize conditional-entropy
differences over the order parameter.  All optimizers are deterministic:
fixed coarse grids plus golden-section refinement, with divergence at the
search cap reported instead of hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import CQChannel, CQState, holevo_information
from .entropies import petz_h_up, sandwiched_h_down
from .operators import eigh_psd, psd_power, spectrum_count

S_MAX = 64.0
ALPHA_MAX = 64.0
ALPHA_MIN = 1.0 / 64.0
LN2 = math.log(2.0)


@dataclass(frozen=True)
class ExponentReport:
    """One evaluated bound at one rate."""

    rate: float
    value: float
    bound_kind: str
    optimizer_s: float | None = None
    optimizer_alpha: float | None = None
    optimizer_p: tuple | None = None
    vacuous: bool = False
    divergent: bool = False
    raw_value: float | None = None
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {
            "rate": self.rate,
            "value": self.value,
            "bound_kind": self.bound_kind,
            "vacuous": self.vacuous,
            "divergent": self.divergent,
        }
        if self.optimizer_s is not None:
            d["optimizer_s"] = self.optimizer_s
        if self.optimizer_alpha is not None:
            d["optimizer_alpha"] = self.optimizer_alpha
        if self.optimizer_p is not None:
            d["optimizer_p"] = list(self.optimizer_p)
        if self.raw_value is not None:
            d["raw_value"] = self.raw_value
        if self.metadata:
            d["metadata"] = dict(self.metadata)
        return d


GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def maximize_scalar(f, grid, refine_iters: int = 32):
    """Deterministic 1-d maximization: coarse grid, then golden section.

    Returns ``(x_best, f_best, at_lower, at_upper)`` where the flags say the
    coarse maximum sat on the first/last grid point.  The returned value is
    the best over every point evaluated, so it never falls below the grid
    maximum.
    """
    grid = np.asarray(grid, dtype=float)
    vals = np.array([f(x) for x in grid])
    i = int(np.argmax(vals))
    x_best, f_best = float(grid[i]), float(vals[i])
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    if b > a:
        x1 = b - GOLDEN * (b - a)
        x2 = a + GOLDEN * (b - a)
        f1, f2 = f(x1), f(x2)
        for _ in range(refine_iters):
            if f1 >= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - GOLDEN * (b - a)
                f1 = f(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + GOLDEN * (b - a)
                f2 = f(x2)
            for x, fv in ((x1, f1), (x2, f2)):
                if fv > f_best:
                    x_best, f_best = float(x), float(fv)
    return x_best, f_best, i == 0, i == len(grid) - 1


def e0(s: float, prior, channel: CQChannel) -> float:
    """Gallager auxiliary function in bits, s >= 0."""
    if s < 0:
        raise ValueError(f"s must be nonnegative, got {s}")
    if s == 0:
        return 0.0
    p = np.asarray(prior, dtype=float)
    if p.size != channel.alphabet_size:
        raise ValueError("prior length does not match channel alphabet")
    acc = np.zeros((channel.dim_b, channel.dim_b), dtype=complex)
    for x in range(channel.alphabet_size):
        if p[x] > 0:
            acc += p[x] * psd_power(channel.outputs[x], 1.0 / (1.0 + s))
    w, _ = eigh_psd(acc, tol=1e-8)
    q = float(np.sum(w[w > 0] ** (1.0 + s)))
    return float(-np.log2(q))


def e0_entropy_identity_residual(s: float, channel: CQChannel) -> float:
    """| e0 - s (log2 |X| - petz_h_up at alpha = 1/(1+s)) | at uniform prior.

    The identity ties the auxiliary function to the Petz conditional entropy
    of the uniform-prior joint state; it is specific to the uniform prior
    (the shaping construction exists to reduce everything else to it).
    """
    if s <= 0:
        raise ValueError(f"identity needs s > 0, got {s}")
    m = channel.alphabet_size
    prior = np.full(m, 1.0 / m)
    state = CQState(prior, channel.outputs)
    alpha = 1.0 / (1.0 + s)
    lhs = e0(s, prior, channel)
    rhs = s * (math.log2(m) - petz_h_up(state, alpha))
    return abs(lhs - rhs)


def _simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = int(np.max(np.nonzero(cond)[0])) + 1
    theta = css[rho - 1] / rho
    return np.clip(v - theta, 0.0, None)


def e0_max_over_p(s: float, channel: CQChannel, *, tol: float = 1e-9,
                  max_iter: int = 400) -> tuple:
    """max over priors of e0, by projected gradient ascent with multistart.

    Returns ``(value, prior)``.  Deterministic: fixed start set (uniform,
    softened vertices, two fixed pseudo-random interior points).
    """
    m = channel.alphabet_size
    if s < 0:
        raise ValueError(f"s must be nonnegative, got {s}")
    if s == 0:
        return 0.0, np.full(m, 1.0 / m)
    mats = [psd_power(phi, 1.0 / (1.0 + s)) for phi in channel.outputs]

    if m == 2:
        # one free parameter; the scalar maximizer is cheaper and exact enough
        def f(t):
            acc = t * mats[0] + (1.0 - t) * mats[1]
            w, _ = eigh_psd(acc, tol=1e-8)
            return float(-np.log2(np.sum(w[w > 0] ** (1.0 + s))))

        t_star, val, _, _ = maximize_scalar(f, np.linspace(0.0, 1.0, 41))
        return val, np.array([t_star, 1.0 - t_star])

    def val_grad(p):
        acc = np.zeros_like(mats[0])
        for x in range(m):
            if p[x] > 0:
                acc += p[x] * mats[x]
        w, v = eigh_psd(acc, tol=1e-8)
        pw = np.zeros_like(w)
        pos = w > 0
        pw[pos] = w[pos] ** (1.0 + s)
        q = float(pw.sum())
        ws = np.zeros_like(w)
        ws[pos] = w[pos] ** s
        a_s = (v * ws) @ v.conj().T
        grad = np.array([-(1.0 + s) * float(np.real(np.trace(a_s @ mats[x])))
                         / (q * LN2) for x in range(m)])
        return float(-np.log2(q)), grad

    starts = [np.full(m, 1.0 / m)]
    for x in range(m):
        v = np.full(m, 0.05 / max(m - 1, 1))
        v[x] = 0.95
        starts.append(v / v.sum())
    starts.append(np.random.default_rng(12345).dirichlet(np.ones(m)))

    best_val, best_p = -math.inf, starts[0]
    for p in starts:
        p = p.copy()
        val, grad = val_grad(p)
        for _ in range(max_iter):
            step = 0.5
            improved = False
            while step > 1e-13:
                cand = _simplex_project(p + step * grad)
                cval, cgrad = val_grad(cand)
                if cval > val + 1e-15:
                    p, val, grad = cand, cval, cgrad
                    improved = True
                    break
                step *= 0.5
            if not improved:
                break
        if val > best_val:
            best_val, best_p = val, p
    return best_val, best_p


class E0MaxCache:
    """Memoized max-over-prior e0 evaluations for one channel."""

    def __init__(self, channel: CQChannel):
        self.channel = channel
        self._store: dict = {}

    def __call__(self, s: float) -> float:
        return self.entry(s)[0]

    def entry(self, s: float) -> tuple:
        key = round(float(s), 12)
        if key not in self._store:
            self._store[key] = e0_max_over_p(key, self.channel)
        return self._store[key]


def random_coding_bound(channel: CQChannel, rate: float,
                        cache: E0MaxCache | None = None) -> ExponentReport:
    """Achievability exponent sup over s in [0, 1] of max_P e0 - s R.

    Nonnegative by construction (s = 0 gives 0); flagged vacuous when the
    rate exceeds the mutual information at the optimizing prior.
    """
    cache = cache or E0MaxCache(channel)
    grid = np.linspace(0.0, 1.0, 41)
    s_star, val, _, _ = maximize_scalar(lambda s: cache(s) - s * rate, grid)
    raw = val
    value = max(val, 0.0)
    _, p_star = cache.entry(s_star)
    # capacity estimate at the e0-optimal prior; for s* = 0 (prior carries no
    # information there) use the optimizer of the smallest positive grid s.
    p_cap = p_star if s_star > 0 else cache.entry(float(grid[1]))[1]
    cap = holevo_information(channel, p_cap)
    vac = rate > cap + 1e-12
    return ExponentReport(rate=rate, value=value, bound_kind="random_coding",
                          optimizer_s=s_star, optimizer_p=tuple(p_star),
                          vacuous=vac, raw_value=raw,
                          metadata={"capacity_estimate": cap})


def sphere_packing_bound(channel: CQChannel, rate: float,
                         cache: E0MaxCache | None = None,
                         s_max: float = S_MAX) -> ExponentReport:
    """Converse exponent sup over s >= 0, capped at s_max with a flag.

    When the maximizer sits at the cap and is still improving the true
    supremum may be infinite (rate below the zero-error/ cutoff region), so
    the value is +inf with ``divergent=True``.
    """
    cache = cache or E0MaxCache(channel)
    grid = np.unique(np.concatenate([np.linspace(0.0, 1.0, 41),
                                     np.geomspace(1.0, s_max, 33)]))
    f = lambda s: cache(s) - s * rate
    s_star, val, _, at_upper = maximize_scalar(f, grid)
    _, p_star = cache.entry(s_star)
    if at_upper and f(s_max) > f(0.25 * s_max):
        return ExponentReport(rate=rate, value=math.inf,
                              bound_kind="sphere_packing", optimizer_s=s_max,
                              optimizer_p=tuple(p_star), divergent=True,
                              raw_value=math.inf,
                              metadata={"s_cap": s_max,
                                        "value_at_cap": max(val, 0.0)})
    return ExponentReport(rate=rate, value=max(val, 0.0),
                          bound_kind="sphere_packing", optimizer_s=s_star,
                          optimizer_p=tuple(p_star), raw_value=val,
                          metadata={"s_cap": s_max})


def affine_code_bound(channel_hat: CQChannel, code_size: int, s: float,
                      spec_count: int) -> float:
    """One-shot achievability for a random affine-coset code, in bits.

    Lower-bounds -log2 of the optimal-decoder error of the best family
    member: e0(s, uniform, W_hat) - s log2 |C| - s log2 nu - log2(1/s), with
    nu the number of distinct joint-state eigenvalues.
    """
    if not (0 < s <= 1):
        raise ValueError(f"s must be in (0, 1], got {s}")
    if code_size < 1 or spec_count < 1:
        raise ValueError("code_size and spec_count must be positive")
    m = channel_hat.alphabet_size
    uniform = np.full(m, 1.0 / m)
    return float(e0(s, uniform, channel_hat) - s * math.log2(code_size)
                 - s * math.log2(spec_count) - math.log2(1.0 / s))


def syndrome_source_bound(h_up_value: float, q: int, n: int, k: int,
                          spec_count: int, s: float) -> float:
    """Equivalent form of the affine bound for syndrome compression.

    ``h_up_value`` is petz_h_up of the n-fold source at alpha = 1/(1+s);
    the code size is q^(n-k) cosets' complement q^k... stated directly:
    s (n-k) log2 q - s h_up - s log2 nu - log2(1/s).
    """
    if not (0 < s <= 1):
        raise ValueError(f"s must be in (0, 1], got {s}")
    return float(s * (n - k) * math.log2(q) - s * h_up_value
                 - s * math.log2(spec_count) - math.log2(1.0 / s))


def _memoized(fn):
    store: dict = {}

    def wrapped(x: float) -> float:
        key = round(float(x), 12)
        if key not in store:
            store[key] = fn(key)
        return store[key]

    return wrapped


def dc_exponent_bounds(state: CQState, rate: float, mode: str, *,
                       n: int | None = None, k_const: float | None = None,
                       alpha_min: float = ALPHA_MIN) -> ExponentReport:
    """Compression-with-side-information exponents at coset rate ``rate``.

    ``mode``:
      * ``lower``      -- achievability, max over alpha in [1/2, 1] of
                          ((1-a)/a)(R - petz_h_up(a)),
      * ``sp``         -- converse, sup over alpha in (0, 1] with the search
                          floored at ``alpha_min`` and a divergence flag,
      * ``sp_refined`` -- ``sp`` plus the finite-n polylog slack
                          (1/2)(1 + |dE/dR|) log2(n)/n + K/n; requires ``n``
                          and ``k_const`` explicitly (no silent defaults),
                          and the constant is only meaningful for large n.
    """
    h = _memoized(lambda a: petz_h_up(state, a))

    def f(a: float) -> float:
        if a == 1.0:
            return 0.0
        return (1.0 - a) / a * (rate - h(a))

    if mode == "lower":
        grid = np.linspace(0.5, 1.0, 501)
        a_star, val, _, _ = maximize_scalar(f, grid)
        return ExponentReport(rate=rate, value=max(val, 0.0),
                              bound_kind="dc_lower", optimizer_alpha=a_star,
                              raw_value=val)
    if mode in ("sp", "sp_refined"):
        grid = np.geomspace(alpha_min, 1.0, 257)
        a_star, val, at_lower, _ = maximize_scalar(f, grid)
        divergent = bool(at_lower and f(alpha_min) > f(min(2 * alpha_min, 1.0)))
        value = math.inf if divergent else max(val, 0.0)
        meta = {"alpha_floor": alpha_min}
        if divergent:
            meta["value_at_cap"] = max(val, 0.0)
        rep = ExponentReport(rate=rate, value=value, bound_kind="dc_sp",
                             optimizer_alpha=a_star, divergent=divergent,
                             raw_value=(math.inf if divergent else val),
                             metadata=meta)
        if mode == "sp":
            return rep
        if n is None or k_const is None:
            raise ValueError("sp_refined needs explicit n and k_const")
        if divergent:
            value_ref = math.inf
            slope = math.inf
        else:
            delta = 1e-4
            up = dc_exponent_bounds(state, rate + delta, "sp",
                                    alpha_min=alpha_min).value
            dn = dc_exponent_bounds(state, rate - delta, "sp",
                                    alpha_min=alpha_min).value
            slope = (up - dn) / (2 * delta)
            value_ref = (value + 0.5 * (1.0 + abs(slope)) * math.log2(n) / n
                         + k_const / n)
        return ExponentReport(rate=rate, value=value_ref, bound_kind="dc_sp",
                              optimizer_alpha=a_star, divergent=divergent,
                              raw_value=value,
                              metadata={"alpha_floor": alpha_min, "n": n,
                                        "k_const": k_const,
                                        "rate_slope": slope,
                                        "note": "finite-n constant valid for large n"})
    raise ValueError(f"unknown mode {mode!r}")


def pa_exponent_bounds(state: CQState, rate: float, mode: str, *,
                       n: int | None = None, k_const: float | None = None,
                       alpha_max: float = ALPHA_MAX) -> ExponentReport:
    """Privacy-amplification exponents at extraction rate ``rate``.

    ``mode``:
      * ``asymptotic`` -- sup over alpha in [1, alpha_max] of
                          (a - 1)(sandwiched_h_down(a) - R), with a
                          divergence flag at the cap,
      * ``refined``    -- (1/2) E + (1/4)(1 + |dE/dr|) log2(n)/n + K/n;
                          requires ``n`` and ``k_const`` explicitly, constant
                          meaningful for large n only.
    """
    h = _memoized(lambda a: sandwiched_h_down(state, a))

    def g(a: float) -> float:
        if a == 1.0:
            return 0.0
        return (a - 1.0) * (h(a) - rate)

    grid = np.geomspace(1.0, alpha_max, 257)
    a_star, val, _, at_upper = maximize_scalar(g, grid)
    divergent = bool(at_upper and g(alpha_max) > g(alpha_max / 2))
    value = math.inf if divergent else max(val, 0.0)
    if mode == "asymptotic":
        meta = {"alpha_cap": alpha_max}
        if divergent:
            meta["value_at_cap"] = max(val, 0.0)
        return ExponentReport(rate=rate, value=value, bound_kind="pa_upper",
                              optimizer_alpha=a_star, divergent=divergent,
                              raw_value=(math.inf if divergent else val),
                              metadata=meta)
    if mode == "refined":
        if n is None or k_const is None:
            raise ValueError("refined needs explicit n and k_const")
        if divergent:
            value_ref = math.inf
            slope = math.inf
        else:
            delta = 1e-4
            up = pa_exponent_bounds(state, rate + delta, "asymptotic",
                                    alpha_max=alpha_max).value
            dn = pa_exponent_bounds(state, rate - delta, "asymptotic",
                                    alpha_max=alpha_max).value
            slope = (up - dn) / (2 * delta)
            value_ref = (0.5 * value
                         + 0.25 * (1.0 + abs(slope)) * math.log2(n) / n
                         + k_const / n)
        return ExponentReport(rate=rate, value=value_ref, bound_kind="pa_upper",
                              optimizer_alpha=a_star, divergent=divergent,
                              raw_value=value,
                              metadata={"alpha_cap": alpha_max, "n": n,
                                        "k_const": k_const,
                                        "rate_slope": slope,
                                        "note": "finite-n constant valid for large n"})
    raise ValueError(f"unknown mode {mode!r}")


def hayashi_pa_bound(state: CQState, hash_range: int, s: float) -> float:
    """Average-over-family leakage bound for two-universal hashing.

    Bounds the family-average of D(rho_hatX E || uniform (x) rho_E) by
    (1/s) nu^s M^s 2^(-s h) with nu the number of distinct eigenvalues of
    rho_E, M the hash range size, and h = sandwiched_h_down at 1 + s.
    """
    if not (0 < s <= 1):
        raise ValueError(f"s must be in (0, 1], got {s}")
    if hash_range < 1:
        raise ValueError("hash_range must be positive")
    nu = spectrum_count(state.average())
    h = sandwiched_h_down(state, 1.0 + s)
    return float((1.0 / s) * (nu ** s) * (hash_range ** s) * 2.0 ** (-s * h))
