"""Command-line front end.

Every command prints one record, as a JSON object (default) or a CSV
header plus row, with the fields ``command``, ``inputs``, ``result``,
``diagnostics`` and ``wall_time``.  Exit codes: 0 success, 2 spec or input
error, 3 numerical failure (including degree overflow), 4 failed verdict.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from .errors import DegreeOverflow, MissingSampler, NumericalError, SpecError
from .genmat import ProcessSpec, commutator_probe, generator_matrix
from .magnus import GATE, METHODS, gate_subintervals, magnus_terms, norm_integral, transition_matrix
from .mc import SCHEMES, SimConfig, estimate_moments
from .polyalg import as_multi_index, enumerate_basis, unit_index
from .processes import BUILTINS, builtin, check_point, parse_spec
from .validation import moment_indices, run_validation

EXIT_OK, EXIT_SPEC, EXIT_NUMERIC, EXIT_VERDICT = 0, 2, 3, 4


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise SpecError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise SpecError(f"expected comma-separated integers, got {text!r}") from None


def _params(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise SpecError(f"--param expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _load(args) -> tuple[ProcessSpec, tuple[float, float, tuple[float, ...]]]:
    if (args.spec is None) == (args.builtin is None):
        raise SpecError("give exactly one of a spec file or --builtin NAME")
    if args.builtin is not None:
        params = _params(args.param)
        spec = builtin(args.builtin, params)
        return spec, check_point(args.builtin, params)
    if args.param:
        raise SpecError("--param only applies to --builtin")
    try:
        text = sys.stdin.read() if args.spec == "-" else open(args.spec, encoding="utf-8").read()
    except OSError as exc:
        raise SpecError(f"cannot read spec file: {exc}") from None
    spec = parse_spec(text)
    return spec, (0.0, spec.T, (0.0,) * spec.d)


def _times(args, spec, default):
    s = default[0] if args.s is None else args.s
    t = default[1] if args.t is None else args.t
    x = default[2] if getattr(args, "x", None) is None else tuple(_floats(args.x))
    if len(x) != spec.d:
        raise SpecError(f"--x needs {spec.d} values, got {len(x)}")
    return s, t, x


def _matrix(a) -> list[list[float]]:
    return (np.asarray(a, dtype=float) + 0.0).tolist()


def _transition_diag(res) -> dict:
    return {
        "method": res.method,
        "subintervals": res.subintervals,
        "norm_integral": res.norm_integral,
        "residual": res.residual,
        "error_estimate": res.error_estimate,
        "commutator_norm": res.commutator_norm,
    }


def cmd_moment(args, spec, default):
    s, t, x = _times(args, spec, default)
    k = as_multi_index(_ints(args.k), spec.d) if args.k else unit_index(spec.d, 0)
    if sum(k) > spec.m:
        raise SpecError(f"|k| = {sum(k)} exceeds m = {spec.m}")
    res = transition_matrix(spec, s, t, max(sum(k), 1), args.method, tol=args.tol)
    basis = enumerate_basis(spec.d, max(sum(k), 1))
    value = float((basis.monomials(np.array(x)) @ res.matrix)[basis.index(k)])
    inputs = {"s": s, "t": t, "x": list(x), "k": list(k)}
    return inputs, {"moment": value}, _transition_diag(res)


def cmd_matrix(args, spec, default):
    k = args.kdeg if args.kdeg is not None else spec.m
    t = default[1] if args.t is None else args.t
    H = generator_matrix(spec, t, k)
    basis = enumerate_basis(spec.d, k)
    inputs = {"t": t, "k": k}
    result = {"basis": [[int(v) for v in e] for e in basis.exponents], "generator": _matrix(H)}
    diag = {}
    if args.s is not None:
        res = transition_matrix(spec, args.s, t, k, args.method, tol=args.tol)
        inputs["s"] = args.s
        result["transition"] = _matrix(res.matrix)
        diag = _transition_diag(res)
    return inputs, result, diag


def cmd_magnus(args, spec, default):
    k = args.kdeg if args.kdeg is not None else spec.m
    s = default[0] if args.s is None else args.s
    t = default[1] if args.t is None else args.t
    terms = magnus_terms(spec, s, t, k)
    report = commutator_probe(spec, s, t, k) if t > s else None
    result = {"omega1": _matrix(terms.omega1), "omega2": _matrix(terms.omega2), "omega3": _matrix(terms.omega3)}
    diag = {
        "panels": terms.panels,
        "commuting": None if report is None else bool(report.commuting),
        "commutator_norm": None if report is None else report.max_norm,
    }
    return {"s": s, "t": t, "k": k}, result, diag


def cmd_normcheck(args, spec, default):
    k = args.kdeg if args.kdeg is not None else spec.m
    s = default[0] if args.s is None else args.s
    t = default[1] if args.t is None else args.t
    total = norm_integral(spec, s, t, k)
    result = {
        "norm_integral": total,
        "gate": GATE,
        "verdict": "pass" if total < GATE else "fail",
        "recommended_subintervals": gate_subintervals(spec, s, t, k),
    }
    return {"s": s, "t": t, "k": k}, result, {}


def cmd_simulate(args, spec, default):
    s, t, x = _times(args, spec, default)
    kidxs = [as_multi_index(_ints(args.k), spec.d)] if args.k else moment_indices(spec.d, args.kmax)
    scheme = args.scheme or ("euler" if spec.state_space.kind == "R" else "euler-projected")
    cfg = SimConfig(args.paths, args.steps, args.seed, scheme)
    est = estimate_moments(spec, s, t, x, kidxs, cfg)
    result = {
        "moments": [{"k": list(k), "mean": e.mean, "stderr": e.stderr} for k, e in zip(kidxs, est)]
    }
    inputs = {"s": s, "t": t, "x": list(x), "paths": args.paths, "steps": args.steps, "seed": args.seed}
    return inputs, result, {"scheme": scheme, "simulation_time": est[0].elapsed}


def cmd_validate(args, spec, default):
    s, t, x = _times(args, spec, default)
    report = run_validation(spec, s, t, x, args.kmax, args.paths, args.steps, args.seed)
    result = {
        "moments": [
            {"k": list(r.k), **r.values, "mc_stderr": r.mc_stderr} for r in report.rows
        ],
        "verdicts": [{"name": v.name, "passed": v.passed, "detail": v.detail} for v in report.verdicts],
        "passed": report.passed,
    }
    inputs = {"s": s, "t": t, "x": list(x), "kmax": args.kmax, "paths": args.paths, "seed": args.seed}
    return inputs, result, {}


COMMANDS = {
    "moment": (cmd_moment, "conditional moment E[X_t^k | X_s = x]"),
    "matrix": (cmd_matrix, "generator matrix H_t (and P_{s,t} with --s)"),
    "magnus": (cmd_magnus, "first three Magnus terms on [s, t]"),
    "normcheck": (cmd_normcheck, "norm integral against the convergence gate"),
    "simulate": (cmd_simulate, "Monte Carlo moment estimates"),
    "validate": (cmd_validate, "cross-check all moment routes and invariants"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polymag", description="Moments of time-inhomogeneous polynomial processes.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("spec", nargs="?", help="spec document path ('-' for stdin)")
        p.add_argument("--builtin", choices=sorted(BUILTINS), help="catalog process")
        p.add_argument("--param", action="append", metavar="KEY=VALUE", help="builtin parameter (repeatable)")
        p.add_argument("--s", type=float, help="start time")
        p.add_argument("--t", type=float, help="end time")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        if name in ("moment", "simulate", "validate"):
            p.add_argument("--x", help="initial state, comma-separated")
        if name in ("moment", "simulate"):
            p.add_argument("--k", help="multi-index, comma-separated (e.g. 2,0,1)")
        if name in ("matrix", "magnus", "normcheck"):
            p.add_argument("--k", dest="kdeg", type=int, help="polynomial degree (default m)")
        if name in ("moment", "matrix"):
            p.add_argument("--method", choices=METHODS, default="auto")
            p.add_argument("--tol", type=float, default=1e-6, help="magnus3 accuracy target")
        if name in ("simulate", "validate"):
            p.add_argument("--paths", type=int, default=100_000)
            p.add_argument("--steps", type=int, default=500)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--kmax", type=int, default=2)
        if name == "simulate":
            p.add_argument("--scheme", choices=SCHEMES)
    return parser


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif isinstance(value, list):
        out[prefix] = json.dumps(value)
    else:
        out[prefix] = "" if value is None else value


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def render(record: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record, default=_jsonable)
    flat: dict = {}
    _flatten("", record, flat)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
    writer.writeheader()
    writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in flat.items()})
    return buf.getvalue().rstrip("\n")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        spec, default = _load(args)
        inputs, result, diag = COMMANDS[args.command][0](args, spec, default)
    except (SpecError, MissingSampler) as exc:
        print(f"polymag: spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (DegreeOverflow, NumericalError) as exc:
        print(f"polymag: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"polymag: invalid input: {exc}", file=sys.stderr)
        return EXIT_SPEC
    record = {
        "command": args.command,
        "spec": spec.name or args.spec,
        "inputs": inputs,
        "result": result,
        "diagnostics": diag,
        "wall_time": time.perf_counter() - start,
    }
    print(render(record, args.format))
    if args.command == "validate" and not result["passed"]:
        return EXIT_VERDICT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
