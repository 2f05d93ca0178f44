"""Command-line front end: build, verify, simulate, sweep, compare, montecarlo.

Exit status is 0 on success, 1 when a build or verification fails and 2 for
invalid parameters.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .fieldlin import MERSENNE31
from .model import ParamError, SystemParams, compare, cost_report, validate
from .scheme import BuildFailure, SchemeError, SplitTooLarge, build_scheme, load_scheme
from .sim import (
    DecodeFailure,
    SimConfig,
    grid,
    run_repetition_scheme,
    run_simulation,
    sweep,
    sweep_csv,
)
from .verify import monte_carlo_failure, null_space_report, verify_all_active_sets, verify_end_to_end

EXIT_OK, EXIT_FAIL, EXIT_PARAMS = 0, 1, 2


def _frac(x) -> str | None:
    return None if x is None else f"{x.numerator}/{x.denominator}"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _params(args) -> SystemParams:
    doc = {}
    if args.config:
        doc.update(json.loads(Path(args.config).read_text()))
    for key in ("K", "N", "Nr", "Kc", "m", "q"):
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    if args.seed is None and "seed" in doc:
        args.seed = int(doc["seed"])
    if args.seed is None:
        args.seed = 0
    missing = [k for k in ("K", "N", "Nr", "Kc", "m") if k not in doc]
    if missing:
        raise ParamError(f"missing parameters: {', '.join(missing)}")
    p = SystemParams.from_dict(doc)
    validate(p)
    return p


def _range(text: str | None) -> list[int] | None:
    """'lo:hi' inclusive; 'lo:hi' with hi < lo is empty; a bare integer is one value."""
    if text is None:
        return None
    if ":" in text:
        lo, hi = (int(x) for x in text.split(":", 1))
        return list(range(lo, hi + 1))
    return [int(x) for x in text.split(",") if x]


def _scheme_from(args):
    if getattr(args, "scheme", None):
        return load_scheme(args.scheme)
    return build_scheme(_params(args), seed=args.seed, certify=False)


def cmd_build(args) -> int:
    p = _params(args)
    scheme = build_scheme(p, seed=args.seed, certify=not args.no_certify)
    text = json.dumps(scheme.to_dict())
    summary = (f"mode {scheme.mode.value}\nd {scheme.d}\n"
               f"symbols per worker per sub-message {scheme.rows_per_worker}\n"
               f"cost {_frac(scheme.normalized_cost())}\nattempts {scheme.attempts}\n")
    if args.out:
        Path(args.out).write_text(text)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(text + "\n")
        sys.stderr.write(summary)
    return EXIT_OK


def cmd_verify(args) -> int:
    scheme = _scheme_from(args)
    report = verify_all_active_sets(scheme, structural=True, seed=args.seed or 0)
    doc = report.to_dict()
    spaces = null_space_report(scheme)
    doc["null_space_ranks"] = list(spaces.ranks)
    doc["null_space_dims"] = list(spaces.null_dims)
    if args.trials:
        doc["end_to_end"] = verify_end_to_end(scheme, args.trials, seed=args.seed or 0)
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    ok = report.ok and doc.get("end_to_end", True)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    stragglers = frozenset(_range(args.stragglers) or ())
    if args.repetition:
        p = _params(args)
        report = run_repetition_scheme(p, stragglers, seed=args.seed, ell=args.ell)
    else:
        scheme = _scheme_from(args)
        report = run_simulation(SimConfig(scheme, stragglers, args.ell, args.seed or 0, args.frames))
    _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK if report.decode_exact else EXIT_FAIL


def cmd_sweep(args) -> int:
    kcs, ms = _range(args.Kc_range), _range(args.m_range)
    if kcs == [] or ms == []:
        _emit(sweep_csv([]), args.out)
        return EXIT_OK
    base_doc = {}
    if args.config:
        base_doc.update(json.loads(Path(args.config).read_text()))
    for key in ("K", "N", "Nr", "Kc", "m", "q"):
        if getattr(args, key) is not None:
            base_doc[key] = getattr(args, key)
    base_doc.setdefault("Kc", (kcs or [1])[0])
    base_doc.setdefault("m", (ms or [1])[0])
    args.seed = args.seed if args.seed is not None else int(base_doc.get("seed", 0))
    base = SystemParams.from_dict(base_doc)
    points = grid(base, kcs, ms)
    for p in points:
        validate(p)
    rows = sweep(points, seed=args.seed, verify=args.verify)
    _emit(sweep_csv(rows), args.out)
    if args.verify and not all(r["verified"] for r in rows):
        return EXIT_FAIL
    return EXIT_OK


def cmd_compare(args) -> int:
    p = _params(args)
    rep = cost_report(p)
    cmp_ = compare(p)
    doc = {
        "params": str(p),
        "regime": rep.regime.value,
        "r_ach": _frac(rep.r_ach),
        "r_converse": _frac(rep.r_converse_cyc),
        "r_rep": _frac(rep.r_rep),
        "r_benchmark": _frac(rep.r_benchmark),
        "ratio_ach_over_rep": _frac(cmp_.ratio_ach_over_rep),
        "ratio_ach_over_converse": _frac(cmp_.ratio_ach_over_converse),
        "order_optimality_factor": cmp_.order_optimality_factor,
        "verdict": cmp_.verdict,
    }
    if rep.r_rep is None:
        doc["note"] = f"repetition assignment undefined: N-Nr+m={p.N - p.Nr + p.m} does not divide N={p.N}"
    if args.json:
        text = json.dumps(doc, indent=2) + "\n"
    else:
        width = max(len(k) for k in doc)
        text = "".join(f"{k:<{width}}  {'-' if v is None else v}\n" for k, v in doc.items())
    _emit(text, args.out)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    p = _params(args)
    report = monte_carlo_failure(p, args.trials, seed=args.seed)
    _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cyclicia", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(sp, needs_params=True):
        for key in ("K", "N", "Nr", "Kc", "m"):
            sp.add_argument(f"--{key}", type=int)
        sp.add_argument("--q", type=int, help=f"prime modulus (default {MERSENNE31})")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--config", help="JSON file with K, N, Nr, Kc, m, q, seed")
        sp.add_argument("--out", help="output path (default stdout)")
        return sp

    sp = common(sub.add_parser("build", help="build and certify a scheme, dump it as JSON"))
    sp.add_argument("--no-certify", action="store_true")
    sp.set_defaults(func=cmd_build)

    sp = common(sub.add_parser("verify", help="check every active set of a scheme"))
    sp.add_argument("--scheme", help="scheme JSON from build (otherwise built from params)")
    sp.add_argument("--trials", type=int, default=0, help="extra end-to-end decode trials")
    sp.set_defaults(func=cmd_verify)

    sp = common(sub.add_parser("simulate", help="run one straggler simulation"))
    sp.add_argument("--scheme")
    sp.add_argument("--stragglers", help="comma list or lo:hi of straggling workers")
    sp.add_argument("--ell", type=int, default=1, help="symbols per sub-message")
    sp.add_argument("--frames", help="write every received transmission to this file")
    sp.add_argument("--repetition", action="store_true", help="use the repetition assignment scheme")
    sp.set_defaults(func=cmd_simulate)

    sp = common(sub.add_parser("sweep", help="cost table over a Kc or m range, as CSV"))
    sp.add_argument("--Kc-range", dest="Kc_range", help="lo:hi inclusive")
    sp.add_argument("--m-range", dest="m_range", help="lo:hi inclusive")
    sp.add_argument("--verify", action="store_true", help="certify and decode every point")
    sp.set_defaults(func=cmd_sweep)

    sp = common(sub.add_parser("compare", help="closed-form costs and optimality verdict"))
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_compare)

    sp = common(sub.add_parser("montecarlo", help="estimate the build failure rate"))
    sp.add_argument("--trials", type=int, default=100)
    sp.set_defaults(func=cmd_montecarlo)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ParamError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_PARAMS
    except SplitTooLarge as exc:
        sys.stderr.write(f"error: SplitTooLarge: {exc}\n")
        return EXIT_PARAMS
    except (BuildFailure, DecodeFailure, SchemeError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARAMS


if __name__ == "__main__":
    raise SystemExit(main())
