"""Command-line front end: Lie-algebra suites, seed curves, hypothesis checks and Selmer campaigns.

Every report is canonical JSON (sorted keys, integers as decimal strings) so
that two runs with the same arguments produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import sympy

from . import __version__
from .adjoint_modl import PreconditionError, verify_no_section_expansion, verify_reg_surjectivity
from .chevalley import ChevalleyAlgebra, nilpotency_index
from .curve_forge import SearchExhausted, forge_seed_curve, validate_hodge_cocharacter, verify_certificate
from .principal_sl2 import (
    adjoint_eigenvalue_field_check,
    build_principal_triple,
    decompose_adjoint,
    eigenvalue_bound_holds,
    sym_minimal_field_check,
)
from .root_data import (
    E8_EXCLUDED_PRIMES,
    EXCEPTIONAL,
    SUPPORTED,
    admissibility_report,
    admissible_prime_floor,
    build_root_system,
    first_admissible_prime,
    hypothesis3_bound,
    inadmissibility_reasons,
    is_admissible,
)
from .selmer_ledger import MAX_TOTAL_DIM, run_exhaustive_f2, run_random

SCHEMA_VERSION = "1"
OUTPUT_ENV = "EXMONO_OUTPUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CommandConfig:
    subcommand: str
    group: str | None = None
    ell: int | None = None
    seed: int = 0
    sample_bound: int = 1000
    output: str | None = None

    def __post_init__(self):
        if self.group is not None and self.group not in SUPPORTED:
            raise UsageError(f"unsupported group {self.group!r}; choose from {', '.join(SUPPORTED)}")
        if self.ell is not None and not sympy.isprime(self.ell):
            raise UsageError(f"ell={self.ell} is not prime")


# -- serialisation ------------------------------------------------------------------


def canonical(obj):
    """Integers become decimal strings; containers are walked; tuples become lists."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, float):
        raise TypeError("floats are not allowed in canonical output")
    return obj


def dumps(report: dict) -> str:
    body = dict(report)
    body["schema_version"] = SCHEMA_VERSION
    return json.dumps(canonical(body), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def _output_dir() -> Path | None:
    d = os.environ.get(OUTPUT_ENV)
    return Path(d) if d else None


def emit(report: dict, output: str | None, default_name: str | None = None) -> Path | None:
    """Write the report to ``output``, else to $EXMONO_OUTPUT_DIR/default_name, else stdout."""
    text = dumps(report)
    path = None
    if output:
        path = Path(output)
    elif default_name and _output_dir() is not None:
        path = _output_dir() / default_name
    if path is None:
        sys.stdout.write(text)
        return None
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}", file=sys.stderr)
    return path


# -- subcommands ------------------------------------------------------------------


def _system(group: str):
    if group not in EXCEPTIONAL:
        raise UsageError(f"group {group!r} is not an exceptional type ({', '.join(EXCEPTIONAL)})")
    return build_root_system(group)


def run_verify_lie(group: str, trials: int = 20, seed: int = 0, dump_brackets: str | None = None) -> dict:
    system = _system(group)
    h = system.coxeter_number
    ell = first_admissible_prime(system)
    alg = ChevalleyAlgebra(system)
    checks: dict[str, dict] = {}

    failures = alg.jacobi_failures()
    checks["jacobi"] = {"ok": not failures and alg.is_antisymmetric(), "failures": [list(f) for f in failures]}
    checks["chain_lengths"] = {"ok": not alg.chain_length_mismatches()}

    triple = build_principal_triple(alg)
    checks["principal_triple"] = {"ok": triple.relations_hold(), "r": list(triple.r)}

    dec = decompose_adjoint(triple)
    dec_ell = decompose_adjoint(triple, ell=ell)
    checks["exponents"] = {
        "ok": (
            dec.total_dimension == alg.dim
            and len(dec.exponents) == system.rank
            and max(dec.exponents) == h - 1
            and dec.exponents == dec_ell.exponents
        ),
        "exponents": list(dec.exponents),
        "string_lengths": list(dec.string_lengths),
    }

    theta_index = nilpotency_index(alg.ad_matrix(alg.highest_root_vector()))
    x_index = nilpotency_index(alg.ad_matrix(triple.X))
    checks["nilpotency"] = {
        "ok": theta_index == 3 and x_index == 2 * h - 1,
        "ad_x_theta": theta_index,
        "ad_x_principal": x_index,
    }

    reg = verify_reg_surjectivity(alg, ell)
    checks["reg"] = {"ok": reg.passed, **reg.to_dict()}

    theta = verify_no_section_expansion(alg, ell, trials=trials, variant="theta", seed=seed)
    checks["no_section_theta"] = {"ok": theta.passed, **theta.to_dict()}
    principal = verify_no_section_expansion(alg, ell, trials=trials, variant="principal", seed=seed, check_orders=False)
    checks["no_section_principal"] = {"ok": principal.passed, **principal.to_dict()}

    if dump_brackets:
        Path(dump_brackets).write_text(alg.dump_bracket_table())

    return {
        "command": "verify-lie",
        "group": group,
        "dim": alg.dim,
        "rank": system.rank,
        "h": h,
        "floor_prime": ell,
        "trials": trials,
        "seed": seed,
        "checks": checks,
        "passed": all(c["ok"] for c in checks.values()),
    }


def _inadmissible_message(system, ell: int) -> str:
    return f"ell={ell} is not admissible for {system.type_label}: " + "; ".join(inadmissibility_reasons(system, ell))


def run_seed_curve(group: str, ell: int, seed: int = 0, trace: int | None = None, sample_bound: int = 1000) -> dict:
    system = _system(group)
    if not is_admissible(system, ell):
        raise UsageError(_inadmissible_message(system, ell))
    result = forge_seed_curve(group, ell, seed=seed, trace=trace, sample_bound=sample_bound)
    cert = result.certificate
    # independent re-verification from the global equation alone
    again = verify_certificate(cert.equation, ell, cert.p0, cert.p1, cert.a_ell, type_label=group)
    return {
        "command": "seed-curve",
        "seed": seed,
        "sample_bound": sample_bound,
        "certificate": cert.to_dict(),
        "trace_curve": result.trace_curve.to_dict(),
        "reductions_match": result.reductions_ok,
        "reverified": again.accepted,
        "failures": cert.failures(),
        "passed": cert.accepted and again.accepted and result.reductions_ok,
    }


def run_check_hypotheses(group: str, ell: int | None = None, r_values=None) -> dict:
    system = _system(group)
    h = system.coxeter_number
    ell = first_admissible_prime(system) if ell is None else ell
    admissibility = admissibility_report(system, ell)
    top = 2 * (h - 1)
    fields = {}
    for f in (2, 3):
        fields[str(f)] = {
            "adjoint_moved": adjoint_eigenvalue_field_check(system, ell, f),
            "sym_top_moved": sym_minimal_field_check(top, ell, f),
            "eigenvalue_bound": eigenvalue_bound_holds(ell, f),
        }
    hodge = None if r_values is None else validate_hodge_cocharacter(system, ell, r_values)
    passed = all(admissibility.values()) and all(v["adjoint_moved"] for v in fields.values())
    if hodge is not None:
        passed = passed and hodge
    return {
        "command": "check-hypotheses",
        "group": group,
        "ell": ell,
        "h": h,
        "center_order": system.sc_center_order,
        "bounds": {
            "four_h_minus_1": 4 * h - 1,
            "floor_prime": admissible_prime_floor(system),
            "hypothesis3": hypothesis3_bound(system),
            "first_admissible": first_admissible_prime(system),
            "excluded": sorted(E8_EXCLUDED_PRIMES) if group == "E8" else [],
        },
        "admissibility": admissibility,
        "field_checks": fields,
        "hodge_cocharacter": {"r_values": list(r_values) if r_values else None, "ok": hodge},
        "passed": passed,
    }


def run_selmer_sim(p: int, dims: int, trials: int = 500, seed: int = 0, exhaustive: bool = False) -> dict:
    if p not in (2, 3, 5):
        raise UsageError(f"field size {p} must be 2, 3 or 5")
    if dims > MAX_TOTAL_DIM or dims < 4 or dims % 2:
        raise UsageError(f"dims={dims} refused: must be even, between 4 and {MAX_TOTAL_DIM}")
    if exhaustive:
        if p != 2 or dims > 8:
            raise UsageError("exhaustive mode needs field size 2 and dims <= 8")
        report = run_exhaustive_f2(dims)
    else:
        report = run_random(p, dims, trials, seed)
    out = report.to_dict()
    out.update({"command": "selmer-sim", "seed": seed, "trials": trials if not exhaustive else None})
    return out


# -- argument parsing --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exmono", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, group=True):
        if group:
            p.add_argument("--group", required=True, help="root system type, e.g. G2 or E8")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", help=f"output file (default: ${OUTPUT_ENV}/<name> or stdout)")

    p = sub.add_parser("verify-lie", help="Chevalley basis, principal sl2, nilpotency, (REG) and no-section suites")
    common(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--dump-brackets", metavar="PATH", help="also write the bracket table as text")

    p = sub.add_parser("seed-curve", help="forge and certify a seed elliptic curve")
    common(p)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--trace", type=int, help="override the trace a_ell")
    p.add_argument("--sample-bound", type=int, default=1000)

    p = sub.add_parser("check-hypotheses", help="admissibility bounds and field-of-definition checks")
    common(p)
    p.add_argument("--ell", type=int)
    p.add_argument("--r-values", type=int, nargs="+", help="Hodge cocharacter values to validate")

    p = sub.add_parser("selmer-sim", help="Selmer ledger property campaign")
    common(p, group=False)
    p.add_argument("--field", type=int, default=2, help="field size: 2, 3 or 5")
    p.add_argument("--dims", type=int, default=8, help="total local dimension")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--exhaustive", action="store_true")
    return parser


def _dispatch(args) -> tuple[dict, str]:
    cfg = CommandConfig(
        args.subcommand,
        getattr(args, "group", None),
        getattr(args, "ell", None),
        args.seed,
        getattr(args, "sample_bound", 1000),
        args.output,
    )
    if cfg.subcommand == "verify-lie":
        rep = run_verify_lie(cfg.group, args.trials, cfg.seed, args.dump_brackets)
        return rep, f"verify_lie_{cfg.group}.json"
    if cfg.subcommand == "seed-curve":
        rep = run_seed_curve(cfg.group, cfg.ell, cfg.seed, args.trace, cfg.sample_bound)
        return rep, f"seed_{cfg.group}_{cfg.ell}_{cfg.seed}.json"
    if cfg.subcommand == "check-hypotheses":
        rep = run_check_hypotheses(cfg.group, cfg.ell, args.r_values)
        return rep, f"hypotheses_{cfg.group}_{rep['ell']}.json"
    mode = "exhaustive" if args.exhaustive else f"random_{args.trials}_{cfg.seed}"
    rep = run_selmer_sim(args.field, args.dims, args.trials, cfg.seed, args.exhaustive)
    return rep, f"selmer_{args.field}_{args.dims}_{mode}.json"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report, name = _dispatch(args)
    except (UsageError, PreconditionError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SearchExhausted as exc:
        print(f"search budget exhausted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    emit(report, args.output, name)
    if args.subcommand == "selmer-sim" and report["counterexamples"]:
        dump = _output_dir() or Path(".")
        path = dump / name.replace(".json", "_counterexamples.json")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps({"counterexamples": report["counterexamples"]}))
        print(f"counterexamples written to {path}", file=sys.stderr)
    failing = [k for k, v in report.get("checks", {}).items() if not v.get("ok")]
    for k in failing:
        print(f"FAILED check: {k}", file=sys.stderr)
    if args.subcommand == "seed-curve":
        for k in report["failures"]:
            print(f"FAILED check: {k}", file=sys.stderr)
    print(f"{args.subcommand}: {'pass' if report['passed'] else 'FAIL'} ({time.perf_counter() - start:.1f}s)", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
