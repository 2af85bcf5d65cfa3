"""Command-line interface.

Exit codes: 0 success (or confluent), 1 usage or model error, 2 parse
error, 3 negative analysis result (not confluent, or inconclusive).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
import typing as t
from pathlib import Path

from . import __version__
from .analysis import OpenSystemError, check_confluence_direct, check_compositional
from .compose import IncompatibleError, compose_many
from .core import Automaton, ModelError, UnknownStateError
from .parse import ModelFile, ParseError, parse_model, serialize
from .reduction import DistinctNormalFormsError, NotClosedError, ZenoError, normal_form
from .sim.engine import POLICIES, write_trace
from .sim.estimate import (
    NondeterminismError,
    QueryError,
    SimConfig,
    check_order_independence,
    default_jobs,
    simulate,
)
from .wellformed import canonicalize, check

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_NEGATIVE = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_ERROR, details: dict | None = None) -> None:
        super().__init__(message)
        self.code = code
        self.details = details or {}


class Session:
    """One invocation: loaded inputs and the report under construction."""

    def __init__(self, command: str, fmt: str) -> None:
        self.command = command
        self.format = fmt
        self.inputs: list[dict] = []
        self.started = time.perf_counter()

    def load(self, path: str) -> ModelFile:
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise CliError(f"cannot read {path}: {exc.strerror}") from None
        self.inputs.append({"path": path, "sha256": hashlib.sha256(data).hexdigest()})
        try:
            return parse_model(data)
        except ParseError as exc:
            raise CliError(f"{path}:{exc}", EXIT_PARSE, {"line": exc.line, "column": exc.column})

    def report(self, result: dict, status: str = "ok") -> dict:
        return {
            "command": self.command,
            "tool": "iosa",
            "version": __version__,
            "status": status,
            "inputs": self.inputs,
            "result": result,
            "duration_s": round(time.perf_counter() - self.started, 6),
        }


def _components(model: ModelFile) -> list[Automaton]:
    comps = [canonicalize(a) for a in model.system_automata()]
    if not comps:
        raise CliError("the model has no automata")
    bad = [a.name for a in comps if not check(a).ok]
    if bad:
        raise CliError(f"not well-formed: {', '.join(bad)}; run 'iosa check' for details")
    return comps


def _system(comps: list[Automaton], full_product: bool = False) -> Automaton:
    try:
        return compose_many(comps, full_product=full_product)
    except IncompatibleError as exc:
        details = {"pair": list(exc.pair or ())}
        if exc.report is not None:
            details.update(exc.report.to_dict())
        raise CliError(str(exc), details=details) from None


# commands


def cmd_check(args, session: Session) -> tuple[int, dict, str]:
    model = session.load(args.model)
    reports = [check(a) for a in model.automata.values()]
    ok = all(r.ok for r in reports)
    lines = []
    for r in reports:
        lines.append(f"{r.automaton}: {r.verdict}")
        for v in r.violations:
            lines.append(f"  ({v.condition}) {v.state}: {v.message}")
    result: dict = {"automata": [r.to_dict() for r in reports]}
    if not ok:
        bad = ", ".join(r.automaton for r in reports if not r.ok)
        result["error"] = f"not well-formed: {bad}"
    return (EXIT_OK if ok else EXIT_ERROR), result, "\n".join(lines)


def cmd_compose(args, session: Session) -> tuple[int, dict, str]:
    model = session.load(args.model)
    system = _system(_components(model), args.full_product)
    text = serialize(system)
    result = {
        "name": system.name,
        "states": len(system.states),
        "transitions": len(system.transitions),
        "closed": system.is_closed,
    }
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        result["out"] = args.out
        return EXIT_OK, result, f"wrote {len(system.states)} states to {args.out}"
    # without --out the serialization itself is the output
    return EXIT_OK, result, text


def cmd_confluence(args, session: Session) -> tuple[int, dict, str]:
    model = session.load(args.model)
    comps = _components(model)
    if args.direct:
        system = _system(comps)
        if not system.is_closed:
            raise CliError(
                "the system is open; unmatched inputs: " + ", ".join(sorted(system.inputs))
            )
        verdict = check_confluence_direct(
            system,
            potentially_reachable_only=args.potentially_reachable_only,
            all_witnesses=args.all_witnesses,
        )
    else:
        try:
            verdict = check_compositional(comps, all_witnesses=args.all_witnesses)
        except OpenSystemError as exc:
            raise CliError(str(exc), details={"unmatched_inputs": exc.unmatched}) from None
    lines = [f"{verdict.method}: {verdict.status}"]
    for w in verdict.witnesses:
        where = f" in {w.component_name}" if w.component_name else ""
        line = f"  pair ({w.pair[0]}, {w.pair[1]}){where} at {w.state}"
        if w.cause is not None:
            line += "; common cause: " + (
                "initial" if w.cause.kind == "initial" else f"spontaneously enabled by {w.cause.action}"
            )
        lines.append(line)
    code = EXIT_OK if verdict.confluent else EXIT_NEGATIVE
    return code, verdict.to_dict(), "\n".join(lines)


def cmd_nf(args, session: Session) -> tuple[int, dict, str]:
    model = session.load(args.model)
    system = _system(_components(model))
    try:
        nf = normal_form(system, args.state, exhaustive=args.exhaustive)
    except UnknownStateError:
        raise CliError(f"unknown state {args.state!r} in {system.name}") from None
    except (NotClosedError, ZenoError) as exc:
        raise CliError(str(exc)) from None
    except DistinctNormalFormsError as exc:
        details = {"normal_forms": [exc.first.to_dict(), exc.second.to_dict()]}
        return EXIT_NEGATIVE, details, str(exc)
    return EXIT_OK, nf.to_dict(), str(nf)


def cmd_simulate(args, session: Session) -> tuple[int, dict, str]:
    model = session.load(args.model)
    if args.query not in model.queries:
        known = ", ".join(model.queries) or "none"
        raise CliError(f"unknown query {args.query!r}; the model defines: {known}")
    query = model.queries[args.query]
    system = _system(_components(model))
    config = SimConfig(
        replications=args.reps,
        seed=args.seed,
        confidence=args.confidence,
        policy=args.policy,
        jobs=args.jobs,
    )
    if args.compare_policies:
        cmp = check_order_independence(
            system,
            query,
            args.reps,
            args.seed,
            allow_nondeterminism=args.allow_nondeterminism,
            confidence=args.confidence,
            jobs=args.jobs,
        )
        result = {"query": query.text(), **cmp.to_dict()}
        verdict = "consistent" if cmp.consistent else "policy-dependent"
        text = (
            f"{cmp.first.policy}: {_fmt_estimate(cmp.first)}\n"
            f"{cmp.second.policy}: {_fmt_estimate(cmp.second)}\n"
            f"difference {cmp.difference:.6g}, tolerance {cmp.tolerance:.6g}: {verdict}"
        )
        return EXIT_OK, result, text
    est = simulate(system, query, config, allow_nondeterminism=args.allow_nondeterminism)
    if args.trace:
        _write_trace(system, query, config, args.trace)
    result = {"query": query.text(), "estimate": est.to_dict()}
    return EXIT_OK, result, f"{args.query}: {_fmt_estimate(est)}"


def _write_trace(system: Automaton, query, config: SimConfig, path: str) -> None:
    from .sim.engine import CompiledModel
    from .sim.estimate import compile_predicate, run_replication

    model = CompiledModel(system)
    predicate = compile_predicate(query.predicate, system)
    events = []
    run_replication(model, query, predicate, 0, config, sink=events.append)
    with open(path, "w", encoding="utf-8") as fh:
        write_trace(events, model.clocks, fh)


def _fmt_estimate(est) -> str:
    if math.isnan(est.point):
        return f"no occurrences in {est.replications} replications"
    return (
        f"{est.point:.6g} +/- {est.half_width:.3g} ({est.confidence:.0%} CI, "
        f"{est.samples}/{est.replications} replications)"
    )


COMMANDS: dict[str, t.Callable] = {
    "check": cmd_check,
    "compose": cmd_compose,
    "confluence": cmd_confluence,
    "nf": cmd_nf,
    "simulate": cmd_simulate,
}


class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1; exit 2 is reserved for model parse errors."""

    def error(self, message: str) -> t.NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="iosa", description="Model, compose, analyse and simulate IOSA networks."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("model", help="path to a .iosa model file")
    common.add_argument("--format", choices=("json", "text"), default="json")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("check", parents=[common], help="check well-formedness of every automaton")

    p = sub.add_parser("compose", parents=[common], help="compose the system block")
    p.add_argument("--out", help="write the composition here instead of standard output")
    p.add_argument("--full-product", action="store_true", help="keep unreachable states too")

    p = sub.add_parser("confluence", parents=[common], help="decide confluence of the system")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--direct", action="store_true", help="check the composed automaton")
    mode.add_argument(
        "--compositional", action="store_true", help="check the components only (default)"
    )
    p.add_argument(
        "--potentially-reachable-only",
        action="store_true",
        help="with --direct, only consider potentially reachable states",
    )
    p.add_argument("--all-witnesses", action="store_true")

    p = sub.add_parser("nf", parents=[common], help="normal form of a state of the system")
    p.add_argument("state", help="composite state id, e.g. s1|s3|s6")
    p.add_argument("--exhaustive", action="store_true", help="explore every reduction order")

    p = sub.add_parser("simulate", parents=[common], help="estimate a query by simulation")
    p.add_argument("query", help="name of a query declared in the model")
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--confidence", type=float, default=0.99)
    p.add_argument("--policy", choices=sorted(POLICIES), default="deterministic-sorted")
    p.add_argument(
        "--jobs", type=int, default=default_jobs(), help="worker processes (default $IOSA_JOBS or 1)"
    )
    p.add_argument("--allow-nondeterminism", action="store_true")
    p.add_argument(
        "--compare-policies",
        action="store_true",
        help="run under deterministic-sorted and reverse and compare",
    )
    p.add_argument("--trace", help="write the events of replication 0 as JSON lines")
    return parser


def main(argv: t.Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    session = Session(args.command, args.format)
    try:
        code, result, text = COMMANDS[args.command](args, session)
        status = {EXIT_OK: "ok", EXIT_NEGATIVE: "negative"}.get(code, "error")
    except CliError as exc:
        code, text, status = exc.code, f"error: {exc}", "error"
        result = {"error": str(exc), **exc.details}
    except (
        ModelError,
        NondeterminismError,
        QueryError,
        NotClosedError,
        ZenoError,
        ValueError,
    ) as exc:
        code, text, status = EXIT_ERROR, f"error: {exc}", "error"
        result = {"error": str(exc)}
    if args.format == "text":
        stream = sys.stdout if code in (EXIT_OK, EXIT_NEGATIVE) else sys.stderr
        stream.write(text if text.endswith("\n") else text + "\n")
    elif args.command == "compose" and code == EXIT_OK and not args.out:
        sys.stdout.write(text)
    else:
        json.dump(_clean(session.report(result, status)), sys.stdout, indent=2)
        sys.stdout.write("\n")
    return code


def _clean(obj):
    """Make ``obj`` strict JSON: sets become sorted lists, nan becomes null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


if __name__ == "__main__":
    sys.exit(main())
