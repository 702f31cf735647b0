"""Command-line surface: channels in, exponent curves and verdicts out.

Subcommands
-----------
``exponents``  reliability-function curves (lower/upper) over a rate grid
``verify``     conjugate-pair duality suite plus entropy/bound invariants
``simulate``   exhaustive affine-code achievability certificates
``pa``         hashing-leakage experiments against the average-case bound
``dc``         compressed-source decoding against the achievability exponent

Exit codes: 0 all checks passed, 1 an assertion failed, 2 parse/usage
error, 3 channel-spec validation error, 4 size-guard violation, 5 I/O
failure.  Identical arguments and seed produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .channels import (
    CQChannel,
    CQState,
    GuardError,
    ValidationError,
    bsc_channel,
    depolarized_output_channel,
    pure_pair_channel,
)
from .codes import exhaustive_max_collision_rate, modified_toeplitz
from .duality import duality_suite
from .entropies import (
    petz_h_up,
    sandwiched_divergence,
    sandwiched_h_down,
    sandwiched_h_up,
    umegaki_relative_entropy,
)
from .exponents import E0MaxCache, random_coding_bound, sphere_packing_bound
from .operators import random_density, require_density
from .simulator import (
    certify_affine_achievability,
    compression_experiment,
    extraction_experiment,
)

__all__ = [
    "EXIT_OK",
    "EXIT_ASSERTION",
    "EXIT_PARSE",
    "EXIT_VALIDATION",
    "EXIT_GUARD",
    "EXIT_IO",
    "SpecParseError",
    "SpecValidationError",
    "parse_channel_spec",
    "channel_spec_dict",
    "format_records_csv",
    "format_records_json",
    "emit_results",
    "main",
]

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_GUARD = 4
EXIT_IO = 5

SPEC_FORMAT_VERSION = 1

CSV_COLUMNS = ("R", "E_lower", "E_upper", "s_lower", "s_upper", "vacuous_flag")


class SpecParseError(Exception):
    """Channel-spec file or generator string is structurally malformed."""


class SpecValidationError(Exception):
    """Channel-spec parsed but a matrix or prior fails validation."""


# ---------------------------------------------------------------------------
# channel ingestion


def _generator_channel(name: str, arg: str) -> CQChannel:
    try:
        value = float(arg)
    except ValueError as exc:
        raise SpecParseError(f"generator {name}: bad parameter {arg!r}") from exc
    try:
        if name == "bsc":
            return bsc_channel(value)
        if name == "pure2":
            return pure_pair_channel(value)
        if name == "depol-out":
            return depolarized_output_channel(value)
    except ValidationError as exc:
        raise SpecValidationError(f"{name}: {exc}") from exc
    raise SpecParseError(f"unknown generator {name!r}")


GENERATOR_NAMES = ("bsc", "pure2", "depol-out")


def _matrix_from_pairs(entry, dim: int, index: int) -> np.ndarray:
    arr = np.asarray(entry, dtype=float)
    if arr.shape != (dim, dim, 2):
        raise SpecParseError(
            f"state {index}: expected shape ({dim}, {dim}, 2) of [re, im] "
            f"pairs, got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _load_spec_file(path: str) -> tuple[CQChannel, np.ndarray | None]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SpecParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SpecParseError(f"{path}: top level must be an object")
    for key in ("format_version", "alphabet", "dim_B", "states"):
        if key not in doc:
            raise SpecParseError(f"{path}: missing key {key!r}")
    if doc["format_version"] != SPEC_FORMAT_VERSION:
        raise SpecParseError(
            f"{path}: format_version {doc['format_version']!r}, "
            f"expected {SPEC_FORMAT_VERSION}")
    alphabet = doc["alphabet"]
    size = alphabet if isinstance(alphabet, int) else len(alphabet)
    dim = doc["dim_B"]
    if not isinstance(dim, int) or dim < 1:
        raise SpecParseError(f"{path}: dim_B must be a positive integer")
    states = doc["states"]
    if not isinstance(states, list) or len(states) != size:
        raise SpecParseError(
            f"{path}: states must list {size} matrices, got "
            f"{len(states) if isinstance(states, list) else type(states).__name__}")
    mats = []
    for i, entry in enumerate(states):
        m = _matrix_from_pairs(entry, dim, i)
        try:
            mats.append(require_density(m))
        except Exception as exc:
            raise SpecValidationError(f"state {i}: {exc}") from exc
    prior = None
    if doc.get("prior") is not None:
        prior = np.asarray(doc["prior"], dtype=float)
        if prior.shape != (size,):
            raise SpecParseError(f"{path}: prior must have length {size}")
        if np.any(prior < -1e-12) or abs(prior.sum() - 1.0) > 1e-8:
            raise SpecValidationError(
                f"prior: entries {prior.tolist()} must be nonnegative and sum to 1")
        prior = np.clip(prior, 0.0, None)
        prior = prior / prior.sum()
    return CQChannel(tuple(mats)), prior


def parse_channel_spec(spec: str) -> CQChannel:
    """Channel from a generator string (``bsc:p``, ...) or a JSON file."""
    head, sep, tail = spec.partition(":")
    if sep and head in GENERATOR_NAMES:
        return _generator_channel(head, tail)
    return _load_spec_file(spec)[0]


def channel_spec_dict(channel: CQChannel, prior=None) -> dict:
    """JSON-ready document that ``parse_channel_spec`` accepts back."""
    states = [np.stack([m.real, m.imag], axis=-1).tolist()
              for m in channel.outputs]
    doc = {
        "format_version": SPEC_FORMAT_VERSION,
        "alphabet": channel.alphabet_size,
        "dim_B": channel.dim_b,
        "states": states,
    }
    if prior is not None:
        doc["prior"] = [float(p) for p in prior]
    return doc


def _source_from_args(args) -> CQState:
    head, sep, tail = args.channel.partition(":")
    if sep and head in GENERATOR_NAMES:
        channel, prior = _generator_channel(head, tail), None
    else:
        channel, prior = _load_spec_file(args.channel)
    if getattr(args, "prior", None):
        parts = args.prior.split(",")
        try:
            prior = np.array([float(x) for x in parts])
        except ValueError as exc:
            raise SpecParseError(f"--prior: bad value in {args.prior!r}") from exc
        if prior.shape != (channel.alphabet_size,):
            raise SpecParseError(
                f"--prior needs {channel.alphabet_size} entries, got {len(parts)}")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-8:
            raise SpecValidationError(f"--prior {args.prior!r} is not a distribution")
        prior = prior / prior.sum()
    return channel.with_prior(prior)


# ---------------------------------------------------------------------------
# result emission


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def format_records_csv(records) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for rec in records:
        lines.append(",".join(_fmt(rec[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def format_records_json(records) -> str:
    out = []
    for rec in records:
        row = {c: rec[c] for c in CSV_COLUMNS}
        row["vacuous_flag"] = int(row["vacuous_flag"])
        for extra in ("lower", "upper"):
            if extra in rec:
                row[extra] = rec[extra]
        out.append(row)
    return json.dumps(out, indent=2) + "\n"


def emit_results(records, fmt: str, path: str | None) -> None:
    """Write exponent-curve records as CSV or JSON; '-'/None means stdout."""
    records = list(records)
    if not records:
        raise SpecParseError("no records to emit")
    if fmt == "csv":
        text = format_records_csv(records)
    elif fmt == "json":
        text = format_records_json(records)
    else:
        raise SpecParseError(f"unknown format {fmt!r}")
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _parse_rates(text: str) -> list:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise SpecParseError(f"--rates {text!r}: expected start:stop:step")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError as exc:
            raise SpecParseError(f"--rates {text!r}: bad number") from exc
        if step <= 0 or stop < start:
            raise SpecParseError(f"--rates {text!r}: need step > 0, stop >= start")
        count = int(round((stop - start) / step))
        rates = [round(start + i * step, 12) for i in range(count + 1)]
        return [r for r in rates if r <= stop + 1e-12]
    try:
        rates = [float(p) for p in text.split(",") if p]
    except ValueError as exc:
        raise SpecParseError(f"--rates {text!r}: bad number") from exc
    if not rates:
        raise SpecParseError("--rates is empty")
    return rates


def run_exponents(args) -> int:
    channel = parse_channel_spec(args.channel)
    rates = _parse_rates(args.rates)
    cache = E0MaxCache(channel)
    records = []
    for rate in rates:
        lower = random_coding_bound(channel, rate, cache)
        upper = sphere_packing_bound(channel, rate, cache)
        records.append({
            "R": rate,
            "E_lower": lower.value,
            "E_upper": upper.value,
            "s_lower": lower.optimizer_s if lower.optimizer_s is not None else math.nan,
            "s_upper": upper.optimizer_s if upper.optimizer_s is not None else math.nan,
            "vacuous_flag": bool(lower.vacuous or upper.vacuous or upper.divergent),
            "lower": lower.as_dict(),
            "upper": upper.as_dict(),
        })
    emit_results(records, args.format, args.output)
    return EXIT_OK


def _verify_entropy_orderings(seed: int, out) -> int:
    rng = np.random.default_rng(seed + 1)
    failures = 0
    alphas = (0.6, 0.8, 1.5, 2.0, 3.0)
    for case in range(6):
        prior = rng.dirichlet(np.ones(3))
        st = CQState(prior, tuple(random_density(rng, 2) for _ in range(3)))
        for alpha in alphas:
            up_petz = petz_h_up(st, alpha)
            up_sand = sandwiched_h_up(st, alpha)
            down_sand = sandwiched_h_down(st, alpha)
            ok = (up_petz <= up_sand + 1e-9) and (down_sand <= up_sand + 1e-9)
            if not ok:
                failures += 1
                out.append(f"entropy-ordering case={case} alpha={alpha}: FAIL "
                           f"(petz_up={up_petz:.9f} sand_up={up_sand:.9f} "
                           f"sand_down={down_sand:.9f})")
        rho = random_density(rng, 3)
        sigma = random_density(rng, 3)
        values = [sandwiched_divergence(rho, sigma, a)
                  for a in (0.55, 0.8, 0.95, 1.05, 1.6, 2.4)]
        values.insert(3, umegaki_relative_entropy(rho, sigma))
        if any(b < a - 1e-9 for a, b in zip(values, values[1:])):
            failures += 1
            out.append(f"divergence-monotonicity case={case}: FAIL {values}")
    out.append(f"entropy orderings: {6 * len(alphas)} cases, "
               f"{failures} failed")
    return failures


def _verify_bound_ordering(seed: int, out) -> int:
    rng = np.random.default_rng(seed + 2)
    failures = 0
    for case in range(3):
        channel = CQChannel(tuple(random_density(rng, 2) for _ in range(2)))
        cache = E0MaxCache(channel)
        for rate in (0.05, 0.2, 0.5):
            lower = random_coding_bound(channel, rate, cache)
            upper = sphere_packing_bound(channel, rate, cache)
            if lower.value > upper.value + 1e-9:
                failures += 1
                out.append(f"bound-ordering case={case} R={rate}: FAIL "
                           f"({lower.value:.9f} > {upper.value:.9f})")
    out.append(f"bound ordering: 9 rate points, {failures} failed")
    return failures


def _verify_collisions(out) -> int:
    failures = 0
    for q, n, k in ((2, 3, 1), (2, 3, 2), (3, 2, 1), (5, 2, 1)):
        rate = exhaustive_max_collision_rate(q, n, k)
        if rate > q ** (-k) + 1e-15:
            failures += 1
            out.append(f"collision q={q} n={n} k={k}: FAIL rate={rate}")
    out.append("collision bounds: 4 families, "
               f"{failures} failed")
    return failures


def run_verify(args) -> int:
    out: list = []
    reports = duality_suite(n_bundles=args.bundles, seed=args.seed)
    n_fail = sum(0 if r.passed else 1 for r in reports)
    worst = max(r.residual for r in reports)
    out.append(f"duality suite: {len(reports)} checks, {n_fail} failed, "
               f"worst residual {worst:.3e}")
    n_fail += _verify_entropy_orderings(args.seed, out)
    n_fail += _verify_bound_ordering(args.seed, out)
    n_fail += _verify_collisions(out)
    verdict = "PASS" if n_fail == 0 else "FAIL"
    out.append(f"verify: {verdict}")
    print("\n".join(out))
    return EXIT_OK if n_fail == 0 else EXIT_ASSERTION


def run_simulate(args) -> int:
    channel = parse_channel_spec(args.channel)
    cert = certify_affine_achievability(
        channel, args.n, args.m, seed=args.seed)
    doc = cert.as_dict()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    print(f"family size {cert.family_size} "
          f"({'exhaustive' if cert.exhaustive else f'sampled {cert.evaluated}'})")
    print(f"best code error {_fmt(cert.observed_error)} "
          f"exponent {_fmt(cert.observed_exponent)}")
    print(f"bound best {_fmt(cert.bound_best)} gap {_fmt(cert.gap)}")
    print(f"certificate: {'PASS' if cert.passed else 'FAIL'}")
    return EXIT_OK if cert.passed else EXIT_ASSERTION


def run_pa(args) -> int:
    source = _source_from_args(args)
    res = extraction_experiment(source, args.n, args.k, seed=args.seed,
                                trials=args.trials)
    print(f"family size {res.family_size} "
          f"({'exhaustive' if res.exhaustive else f'sampled {res.evaluated}'})")
    print(f"mean divergence {_fmt(res.mean_divergence)} "
          f"mean purified distance {_fmt(res.mean_purified_distance)}")
    if res.ci_half_width is not None:
        print(f"99% CI half-width {_fmt(res.ci_half_width)}")
    if res.infinite_count:
        print(f"infinite divergences: {res.infinite_count} (excluded)")
    worst = min(b - res.mean_divergence for b in res.hayashi_bounds)
    print(f"tightest bound margin {_fmt(worst)}")
    print(f"average-case bound: {'PASS' if res.satisfied else 'FAIL'}")
    return EXIT_OK if res.satisfied else EXIT_ASSERTION


def run_dc(args) -> int:
    source = _source_from_args(args)
    system = modified_toeplitz(args.n, args.k, source.alphabet_size, args.seed)
    res = compression_experiment(source, system)
    print(f"rate {_fmt(res.rate_bits)} bits/symbol, error {_fmt(res.error)}")
    print(f"per-copy exponent {_fmt(res.exponent)} "
          f"bound {_fmt(res.bound_value)} slack {_fmt(res.slack)}")
    if res.converse_region:
        print("rate below conditional entropy: converse region, "
              "no achievability comparison")
    if args.output:
        row = {"n": res.n, "R": res.rate_bits, "P_error": res.error,
               "bound": res.bound_value, "gap": res.slack}
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(row.keys()) + "\n")
            fh.write(",".join(_fmt(v) for v in row.values()) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqrel",
        description="Reliability-function bounds and coding experiments "
                    "for classical-quantum channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="bound curves over a rate grid")
    p.add_argument("--channel", required=True,
                   help="generator (bsc:p, pure2:c, depol-out:p) or JSON path")
    p.add_argument("--rates", required=True,
                   help="start:stop:step or comma-separated list, in bits")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default=None, help="path, default stdout")
    p.set_defaults(fn=run_exponents)

    p = sub.add_parser("verify", help="duality and invariant suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bundles", type=int, default=12,
                   help="random duality instances to draw")
    p.set_defaults(fn=run_verify)

    p = sub.add_parser("simulate", help="affine-code achievability certificate")
    p.add_argument("--channel", required=True)
    p.add_argument("--n", type=int, required=True, help="block length")
    p.add_argument("--m", type=int, required=True, help="message symbols")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="JSON certificate path")
    p.set_defaults(fn=run_simulate)

    p = sub.add_parser("pa", help="hashing-leakage experiment")
    p.add_argument("--channel", required=True,
                   help="source: conditional states; prior via file or --prior")
    p.add_argument("--prior", default=None, help="comma-separated distribution")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True, help="output symbols")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=200,
                   help="sample size when the family is too large to enumerate")
    p.set_defaults(fn=run_pa)

    p = sub.add_parser("dc", help="compressed-source decoding experiment")
    p.add_argument("--channel", required=True)
    p.add_argument("--prior", default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True,
                   help="message symbols kept (syndrome length n-k)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="CSV row path")
    p.set_defaults(fn=run_dc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0,) else 0
    try:
        return args.fn(args)
    except SpecParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SpecValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except GuardError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
