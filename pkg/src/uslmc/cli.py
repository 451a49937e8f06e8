"""Command-line surface.

Commands: ``check``, ``translate``, ``convert-cgs``, ``gen-gamma``,
``validate``, ``prop2``.  ``check``, ``validate`` and ``prop2`` print one
JSON report object on stdout; ``translate`` and ``gen-gamma`` print formula
text and ``convert-cgs`` prints model JSON.  Exit codes: 0 true/success,
1 false/invalid, 2 usage or input errors, 3 oracle divergence.  Reports are
byte-identical across runs once the ``timing`` field is stripped.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from . import checker, formula, model, parser
from .strategy import UnboundVariableError

EXIT_TRUE = 0
EXIT_FALSE = 1
EXIT_ERROR = 2
EXIT_ORACLE = 3


def _fail(message: str) -> int:
    print(f"uslmc: error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _emit(report: dict) -> None:
    print(json.dumps(report, indent=2))


def _report_head(command: str, args: dict) -> dict:
    return {"tool": "uslmc", "version": __version__, "command": command, "arguments": args}


def cmd_check(ns) -> int:
    t0 = time.monotonic()
    try:
        m = model.load_model(ns.model)
        dialect = "sl" if ns.mode == "sl" else "usl"
        f = parser.load_formula(ns.formula, dialect)
    except FileNotFoundError as e:
        return _fail(str(e))
    except (model.ModelValidationError, parser.ParseError) as e:
        return _fail(str(e))

    params = checker.EvalParams(
        memory_bound=ns.memory,
        mode="sl_nats" if ns.mode == "sl" else "usl",
    )
    report = _report_head(
        "check",
        {
            "model": ns.model,
            "formula": ns.formula,
            "state": ns.state,
            "memory": ns.memory,
            "mode": ns.mode,
            "oracle": ns.oracle,
            "witness": ns.witness,
        },
    )
    try:
        verdict = checker.check_sentence(
            m,
            ns.state,
            f,
            params,
            oracle=ns.oracle,
            max_strategies=ns.max_strategies,
            max_seconds=ns.max_seconds,
        )
    except checker.BudgetExceeded as e:
        report["outcome"] = "budget-exceeded"
        report["reason"] = str(e)
        report["stats"] = e.stats
        report["timing"] = {"seconds": round(time.monotonic() - t0, 6)}
        _emit(report)
        return EXIT_ERROR
    except checker.OracleDivergence as e:
        report["outcome"] = "oracle-divergence"
        report["reason"] = str(e)
        report["timing"] = {"seconds": round(time.monotonic() - t0, 6)}
        _emit(report)
        return EXIT_ORACLE
    except (checker.CheckError, UnboundVariableError) as e:
        return _fail(str(e))

    report["outcome"] = "checked"
    report["truth"] = verdict.truth
    if ns.witness and verdict.witness is not None:
        report["witness"] = verdict.witness
    report["stats"] = verdict.stats
    report["timing"] = {"seconds": round(time.monotonic() - t0, 6)}
    if ns.verbose:
        word = "satisfied" if verdict.truth else "not satisfied"
        print(
            f"{ns.formula} is {word} at {ns.state} of {ns.model} "
            f"(mode {ns.mode}, memory {ns.memory})",
            file=sys.stderr,
        )
    _emit(report)
    return EXIT_TRUE if verdict.truth else EXIT_FALSE


def cmd_translate(ns) -> int:
    try:
        f = parser.load_formula(ns.formula, "sl")
    except FileNotFoundError as e:
        return _fail(str(e))
    except parser.ParseError as e:
        return _fail(str(e))
    vocab = None
    if ns.vocabulary:
        vocab = [v.strip() for v in ns.vocabulary.split(",") if v.strip()]
    try:
        out = formula.embed_sl(f, vocab)
    except ValueError as e:
        return _fail(str(e))
    print(parser.render_formula(out))
    return EXIT_TRUE


def cmd_convert_cgs(ns) -> int:
    try:
        with open(ns.cgs, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as e:
        return _fail(str(e))
    except json.JSONDecodeError as e:
        return _fail(f"malformed input: {e}")
    try:
        converted = model.convert_cgs(raw)
        m = model.validate(converted)
    except model.ModelValidationError as e:
        return _fail(str(e))
    sys.stdout.write(model.dump_model(m))
    return EXIT_TRUE


def cmd_gen_gamma(ns) -> int:
    if ns.depth < 0:
        return _fail("depth must be >= 0")
    print(parser.render_formula(formula.gen_gamma(ns.depth)))
    return EXIT_TRUE


def cmd_validate(ns) -> int:
    report = _report_head("validate", {"model": ns.model})
    try:
        with open(ns.model, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as e:
        return _fail(str(e))
    except json.JSONDecodeError as e:
        return _fail(f"malformed input: {e}")
    try:
        m = model.validate(raw)
    except model.ModelValidationError as e:
        report["valid"] = False
        report["errors"] = list(e.violations)
        report["warnings"] = []
        _emit(report)
        return EXIT_FALSE
    report["valid"] = True
    report["errors"] = []
    report["warnings"] = list(m.warnings)
    _emit(report)
    return EXIT_TRUE


def cmd_prop2(ns) -> int:
    t0 = time.monotonic()
    report = _report_head("prop2", {"trials": ns.trials, "seed": ns.seed})
    try:
        result = checker.property_suite_prop2(ns.seed, ns.trials)
    except ValueError as e:
        return _fail(str(e))
    report.update(result)
    report["timing"] = {"seconds": round(time.monotonic() - t0, 6)}
    _emit(report)
    return EXIT_TRUE if not result["violations"] else EXIT_FALSE


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="uslmc",
        description="Model checking with updatable strategies over alternating transition systems",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    chk = sub.add_parser("check", help="evaluate a sentence at a state")
    chk.add_argument("model")
    chk.add_argument("formula")
    chk.add_argument("--state", required=True)
    chk.add_argument("--memory", type=int, default=1, help="strategy memory bound (default 1)")
    chk.add_argument("--mode", choices=["usl", "sl"], default="usl")
    chk.add_argument("--oracle", action="store_true", help="re-verify path checks with the lasso oracle")
    chk.add_argument("--witness", action="store_true", help="include strategy witnesses in the report")
    chk.add_argument("--max-strategies", type=int, default=None)
    chk.add_argument("--max-seconds", type=float, default=None)
    chk.add_argument("--verbose", action="store_true")
    chk.set_defaults(func=cmd_check)

    tr = sub.add_parser("translate", help="rewrite a single-agent-binder formula into unbind/bind form")
    tr.add_argument("formula")
    tr.add_argument("--vocabulary", default=None, help="comma-separated variable list")
    tr.set_defaults(func=cmd_translate)

    cv = sub.add_parser("convert-cgs", help="convert an action-based game structure to a model")
    cv.add_argument("cgs")
    cv.set_defaults(func=cmd_convert_cgs)

    gg = sub.add_parser("gen-gamma", help="emit an iterated next-step-control formula")
    gg.add_argument("depth", type=int)
    gg.set_defaults(func=cmd_gen_gamma)

    va = sub.add_parser("validate", help="validate a model file")
    va.add_argument("model")
    va.set_defaults(func=cmd_validate)

    p2 = sub.add_parser("prop2", help="deterministic-model property suite")
    p2.add_argument("--trials", type=int, default=100)
    p2.add_argument("--seed", type=int, default=42)
    p2.set_defaults(func=cmd_prop2)

    return ap


def main(argv=None) -> int:
    ap = build_arg_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code not in (0, None) else 0
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
