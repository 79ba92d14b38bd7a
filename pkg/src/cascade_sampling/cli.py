"""Command-line front end: sample, verify, bench, stat, compare-precision.

Input streams are one record per line, either CSV `id,weight` or JSON lines
(auto-detected from the first non-blank byte), `-` for standard input.
Results go to standard output as a single JSON document; diagnostics and
human-readable summaries go to standard error.  Every run's metadata includes
the seed actually used, so any output can be replayed exactly.

Exit codes: 0 ok, 1 verification/test divergence, 2 malformed input,
3 invalid configuration, 4 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import gc
import json
import math
import os
import random
import secrets
import sys
import time

from .baselines import ExponentMethodSampler, WithReplacementSampler
from .cascade import CascadeSampler
from .core import (
    BudgetExceeded,
    InvalidConfig,
    InvalidK,
    SamplingError,
    StreamValidator,
    TooFewElements,
    WeightedElement,
    WeightMode,
    derive_seed,
)
from .oracle import analytic_swor, distributions_equal, enumerate_cascade
from .stats import gof_test, precision_experiment

EXIT_OK = 0
EXIT_DIVERGENCE = 1
EXIT_BAD_INPUT = 2
EXIT_BAD_CONFIG = 3
EXIT_BUDGET = 4

SEED_ENV_VAR = "CASCADE_SEED"

# upfront cap on the estimated branch count of one full `verify` run
VERIFY_BRANCH_CAP = 5_000_000


class StreamFormatError(SamplingError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _parse_weight_literal(text: str, mode: WeightMode):
    text = text.strip()
    if mode is WeightMode.EXACT_INTEGER:
        try:
            return int(text)
        except ValueError:
            raise ValueError(f"integer mode requires an integer weight, got {text!r}")
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"not a number: {text!r}")


def _check_id_token(eid: str):
    if not eid:
        raise ValueError("empty id")
    if any(c.isspace() for c in eid) or "," in eid:
        raise ValueError(f"id may not contain whitespace or commas: {eid!r}")


def read_stream(path: str, mode: WeightMode):
    """Parse and validate a stream file; returns (elements, total_weight, n)."""
    handle = sys.stdin if path == "-" else open(path, "r", encoding="utf-8")
    validator = StreamValidator(mode)
    elements = []
    fmt = None
    try:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            if fmt is None:
                fmt = "jsonl" if line.startswith("{") else "csv"
            try:
                if fmt == "jsonl":
                    record = json.loads(line)
                    if not isinstance(record, dict) or "id" not in record or "weight" not in record:
                        raise ValueError('expected an object with "id" and "weight"')
                    eid = record["id"]
                    if not isinstance(eid, str):
                        raise ValueError(f"id must be a string, got {eid!r}")
                    _check_id_token(eid)
                    weight = record["weight"]
                    if isinstance(weight, bool) or not isinstance(weight, (int, float)):
                        raise ValueError(f"weight must be a number, got {weight!r}")
                    if mode is WeightMode.EXACT_INTEGER and not isinstance(weight, int):
                        raise ValueError(f"integer mode requires an integer weight, got {weight!r}")
                else:
                    parts = line.split(",")
                    if len(parts) != 2:
                        raise ValueError(f"expected 'id,weight', got {line!r}")
                    eid = parts[0].strip()
                    _check_id_token(eid)
                    weight = _parse_weight_literal(parts[1], mode)
                elements.append(validator.validate(eid, weight))
            except (ValueError, SamplingError) as exc:
                raise StreamFormatError(line_no, str(exc)) from exc
    finally:
        if handle is not sys.stdin:
            handle.close()
    return elements, validator.weight_total, validator.elements_seen


def parse_inline_stream(spec: str, mode: WeightMode):
    """Parse an inline stream spec like "a:1,b:2,c:3"."""
    validator = StreamValidator(mode)
    elements = []
    for i, token in enumerate(spec.split(","), start=1):
        token = token.strip()
        try:
            if ":" not in token:
                raise ValueError(f"expected 'id:weight', got {token!r}")
            eid, _, wtext = token.partition(":")
            _check_id_token(eid)
            elements.append(validator.validate(eid, _parse_weight_literal(wtext, mode)))
        except (ValueError, SamplingError) as exc:
            raise StreamFormatError(i, str(exc)) from exc
    return elements, validator.weight_total, validator.elements_seen


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InvalidConfig(f"{SEED_ENV_VAR} must be an integer, got {env!r}")
    return secrets.randbits(64)


def _mode(args) -> WeightMode:
    return WeightMode.EXACT_INTEGER if args.mode == "int" else WeightMode.FLOAT64


def _emit(doc: dict):
    print(json.dumps(doc, indent=2))


# ----------------------------------------------------------------- sample


def cmd_sample(args) -> int:
    seed = _resolve_seed(args)
    mode = _mode(args)
    if args.k < 1:
        raise InvalidK(f"k must be >= 1, got {args.k}")
    if args.mantissa_bits is not None and args.algorithm != "exponent":
        raise InvalidConfig("--mantissa-bits is only valid with --algorithm exponent")

    elements, total_weight, n = read_stream(args.input, mode)

    if args.algorithm == "cascade":
        sampler = CascadeSampler(args.k, mode, seed)
    elif args.algorithm == "wr":
        sampler = WithReplacementSampler(args.k, mode, seed)
    else:
        sampler = ExponentMethodSampler(args.k, seed, args.mantissa_bits)
    for e in elements:
        sampler.feed(e)
    sample = sampler.sample()

    if args.algorithm != "wr" and args.k > n:
        print(
            f"warning: k={args.k} exceeds stream size n={n}; "
            f"returning all {n} elements in sampled order",
            file=sys.stderr,
        )
    _emit(
        {
            "algorithm": args.algorithm,
            "mode": mode.value,
            "k": args.k,
            "seed": seed,
            "n": n,
            "total_weight": total_weight,
            "sample": [
                {"rank": rank, "id": e.id, "weight": e.weight}
                for rank, e in enumerate(sample, start=1)
            ],
        }
    )
    return EXIT_OK


# ----------------------------------------------------------------- verify


def _verify_branch_estimate(max_n: int, max_k: int, assignments: int, orders: int) -> int:
    per_point = 0
    for k in range(1, max_k + 1):
        kk = min(k, max_n)
        per_point += max_n * math.perm(max_n, kk) * (2**kk)
    return per_point * assignments * orders


def cmd_verify(args) -> int:
    if args.max_n < 1 or args.max_k < 1 or args.max_weight < 1 or args.assignments < 1:
        raise InvalidConfig("verify bounds must all be >= 1")
    estimate = _verify_branch_estimate(args.max_n, args.max_k, args.assignments, args.orders)
    if estimate > VERIFY_BRANCH_CAP:
        raise BudgetExceeded(
            f"estimated {estimate} enumeration branches exceeds the cap of {VERIFY_BRANCH_CAP}; "
            "lower --max-n/--max-k/--assignments"
        )

    seed = _resolve_seed(args)
    rng = random.Random(derive_seed(seed, 0x5EED))
    bias = 1 if args.sabotage else 0

    records = []
    failures = 0
    first_divergence = None
    for a in range(args.assignments):
        n = rng.randint(1, args.max_n)
        weights = [(f"e{i}", rng.randint(1, args.max_weight)) for i in range(n)]
        for order_idx in range(args.orders):
            stream = list(weights)
            if order_idx:
                rng.shuffle(stream)
            tested_ks = set()
            for k in range(1, args.max_k + 1):
                kk = min(k, n)
                if kk in tested_ks:
                    continue
                tested_ks.add(kk)
                enumerated = enumerate_cascade(stream, kk, denominator_bias=bias)
                analytic = analytic_swor(weights, kk)
                ok, divergence = distributions_equal(enumerated, analytic)
                record = {
                    "n": n,
                    "k": kk,
                    "weights": {eid: w for eid, w in weights},
                    "order": order_idx,
                    "ok": ok,
                }
                if not ok:
                    failures += 1
                    detail = {
                        "tuple": list(divergence[0]),
                        "enumerated": str(divergence[1]),
                        "analytic": str(divergence[2]),
                    }
                    record["divergence"] = detail
                    if first_divergence is None:
                        first_divergence = detail
                records.append(record)

    _emit(
        {
            "seed": seed,
            "points": len(records),
            "failures": failures,
            "first_divergence": first_divergence,
            "records": records,
        }
    )
    if failures:
        print(
            f"verify: FAILED at {failures}/{len(records)} lattice points; "
            f"first divergent tuple: {first_divergence['tuple']} "
            f"(enumerated {first_divergence['enumerated']}, analytic {first_divergence['analytic']})",
            file=sys.stderr,
        )
        return EXIT_DIVERGENCE
    print(f"verify: all {len(records)} lattice points agree exactly", file=sys.stderr)
    return EXIT_OK


# ----------------------------------------------------------------- bench


def _bench_elements(n: int, dist: str, mode: WeightMode, seed: int):
    rng = random.Random(derive_seed(seed, 0xBE7C))
    elements = []
    for i in range(n):
        if dist == "uniform":
            w = rng.randint(1, 1 << 20)
        elif dist == "zipf":
            w = max(1, 10**6 // (i + 1))
        else:  # one-dominant
            w = 10**9 if i == 0 else 1
        if mode is WeightMode.FLOAT64:
            w = float(w)
        elements.append(WeightedElement(i, w))
    return elements


def cmd_bench(args) -> int:
    if args.n < 0:
        raise InvalidConfig(f"n must be >= 0, got {args.n}")
    try:
        k_list = [int(tok) for tok in args.k_list.split(",") if tok.strip()]
    except ValueError:
        raise InvalidConfig(f"bad k list: {args.k_list!r}")
    if not k_list or any(k < 1 for k in k_list):
        raise InvalidConfig(f"k values must be >= 1: {args.k_list!r}")
    seed = _resolve_seed(args)
    mode = _mode(args)

    rows = []
    if args.n > 0:
        elements = _bench_elements(args.n, args.distribution, mode, seed)
        prev = None
        for k in k_list:
            sampler = CascadeSampler(k, mode, derive_seed(seed, k))
            gc_was_enabled = gc.isenabled()
            gc.disable()
            start = time.perf_counter()
            feed = sampler.feed
            for e in elements:
                feed(e)
            elapsed = time.perf_counter() - start
            if gc_was_enabled:
                gc.enable()
            state_bytes = sampler.state_size_bytes()
            row = {
                "k": k,
                "seconds": elapsed,
                "ns_per_element": elapsed / args.n * 1e9,
                "state_bytes": state_bytes,
                "time_ratio_vs_prev": (elapsed / prev["seconds"]) if prev else None,
                "state_ratio_vs_prev": (state_bytes / prev["state_bytes"]) if prev else None,
            }
            rows.append(row)
            prev = row

    _emit(
        {
            "n": args.n,
            "mode": mode.value,
            "distribution": args.distribution,
            "seed": seed,
            "rows": rows,
        }
    )
    for row in rows:
        ratio = f"{row['time_ratio_vs_prev']:.2f}" if row["time_ratio_vs_prev"] else "-"
        print(
            f"bench: k={row['k']:>4}  {row['seconds']:.3f}s  "
            f"{row['ns_per_element']:.0f} ns/elem  {row['state_bytes']} B  x{ratio}",
            file=sys.stderr,
        )
    return EXIT_OK


# ----------------------------------------------------------------- stat


def _stat_stream(args, mode: WeightMode):
    if args.stream and args.input:
        raise InvalidConfig("give either --stream or --input, not both")
    if args.stream:
        return parse_inline_stream(args.stream, mode)
    if args.input:
        return read_stream(args.input, mode)
    raise InvalidConfig("one of --stream or --input is required")


def cmd_stat(args) -> int:
    seed = _resolve_seed(args)
    mode = _mode(args)
    elements, _, _ = _stat_stream(args, mode)
    report = gof_test(
        args.algorithm,
        elements,
        args.k,
        args.trials,
        seed,
        significance=args.significance,
        mode=mode,
        mantissa_bits=args.mantissa_bits,
    )
    doc = report.to_dict()
    doc["seed"] = seed
    _emit(doc)
    verdict = "pass" if report.passed else "FAIL"
    print(
        f"stat: {args.algorithm} k={args.k} trials={args.trials} "
        f"chi2={report.chi_square:.3f} df={report.df} p={report.p_value:.2e} "
        f"tv={report.tv_distance:.2e} -> {verdict}",
        file=sys.stderr,
    )
    return EXIT_OK if report.passed else EXIT_DIVERGENCE


def cmd_compare_precision(args) -> int:
    seed = _resolve_seed(args)
    elements, _, _ = _stat_stream(args, WeightMode.EXACT_INTEGER)
    try:
        bits_list = [int(tok) for tok in args.bits.split(",") if tok.strip()]
    except ValueError:
        raise InvalidConfig(f"bad bits list: {args.bits!r}")
    if not bits_list or any(b < 1 for b in bits_list):
        raise InvalidConfig(f"bits values must be >= 1: {args.bits!r}")
    report = precision_experiment(elements, args.k, bits_list, args.trials, seed)
    doc = report.to_dict()
    doc["seed"] = seed
    _emit(doc)
    print(
        f"compare-precision: noise floor tv={report.noise.mean:.2e} "
        f"(threshold {report.threshold:.2e}); exact-integer chain tv={report.cascade_tv:.2e}"
        f" [{'ok' if report.cascade_within_threshold else 'ABOVE THRESHOLD'}]",
        file=sys.stderr,
    )
    for row in report.rows:
        flag = "exceeds" if row.exceeds_threshold else "within noise"
        print(
            f"compare-precision: exponent @ {row.mantissa_bits:>2} bits  "
            f"tv={row.tv_distance:.2e}  ({flag})",
            file=sys.stderr,
        )
    return EXIT_OK


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascade",
        description="Streaming weighted sampling without replacement, with verification tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV_VAR} or system entropy)")
        p.add_argument("--mode", choices=["int", "float"], default="int", help="weight arithmetic mode")

    p = sub.add_parser("sample", help="sample k elements from a stream")
    p.add_argument("input", help="CSV or JSON-lines file, or - for stdin")
    p.add_argument("--k", type=int, required=True, help="sample size")
    p.add_argument(
        "--algorithm",
        choices=["cascade", "wr", "exponent"],
        default="cascade",
        help="cascade: without replacement; wr: with replacement; exponent: key-based without replacement",
    )
    p.add_argument("--mantissa-bits", type=int, default=None, help="key precision (exponent only)")
    add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="exact enumeration check of the chain sampler")
    p.add_argument("--max-n", type=int, default=6)
    p.add_argument("--max-k", type=int, default=3)
    p.add_argument("--max-weight", type=int, default=5)
    p.add_argument("--assignments", type=int, default=200, help="number of random weight assignments")
    p.add_argument("--orders", type=int, default=2, help="stream orders per assignment")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--sabotage", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time the chain sampler across k")
    p.add_argument("--n", type=int, required=True, help="synthetic stream length")
    p.add_argument("--k-list", default="1,2,4,8,16")
    p.add_argument(
        "--distribution", choices=["uniform", "zipf", "one-dominant"], default="uniform"
    )
    add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stat", help="Monte-Carlo goodness-of-fit test")
    p.add_argument("--algorithm", choices=["cascade", "wr", "exponent", "oversample"], default="cascade")
    p.add_argument("--stream", default=None, help='inline stream, e.g. "a:1,b:2,c:3"')
    p.add_argument("--input", default=None, help="stream file, or - for stdin")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--significance", type=float, default=0.001)
    p.add_argument("--mantissa-bits", type=int, default=None)
    add_common(p)
    p.set_defaults(func=cmd_stat)

    p = sub.add_parser("compare-precision", help="key-precision sweep vs the exact-integer chain")
    p.add_argument("--stream", default=None, help='inline stream, e.g. "a:1099511627776,b:1,c:1"')
    p.add_argument("--input", default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--bits", default="8,16,24,53", help="mantissa widths to sweep")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_compare_precision)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StreamFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvalidK, TooFewElements, InvalidConfig) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except SamplingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
