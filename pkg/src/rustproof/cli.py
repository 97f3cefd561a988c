"""Command line entry points: batch verification, concrete runs, and the
local proof service."""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from typing import Optional, Sequence

from . import interp as it
from . import logic as lg
from . import objlang as ol
from .frontend import FrontendError, parse_rdl, parse_unit, normalize
from .prover import (Obligation, ProofState, ProverError, ReplayDivergence,
                     Settings, SourceMismatch, auto, fn_obligation,
                     rdl_obligation, replay, save_proof)

EXIT_CLOSED = 0
EXIT_OPEN = 1
EXIT_ERROR = 2


class CliError(Exception):
    pass


def _load_unit(text: str):
    unit = normalize(parse_unit(text))
    if unit.errors:
        for d in unit.errors[1:]:
            print(f"error: {d}", file=sys.stderr)
        raise CliError(str(unit.errors[0]))
    return unit


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rustproof",
                                description="deductive verifier for a small "
                                            "ownership-based language")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="prove the obligations of a source file")
    v.add_argument("file")
    v.add_argument("--fn", dest="fn_name", default=None,
                   help="verify only this function")
    v.add_argument("--auto", action="store_true",
                   help="run the automated strategy (default when no --replay)")
    v.add_argument("--max-steps", type=int, default=None)
    v.add_argument("--overflow", choices=("check", "ignore"), default="check")
    v.add_argument("--emit-proof", default=None, metavar="F")
    v.add_argument("--replay", default=None, metavar="F")
    v.add_argument("--domain", default="-8..8", metavar="LO..HI")
    v.add_argument("--diff-test", action="store_true",
                   help="search for concrete counterexamples as well")

    r = sub.add_parser("run", help="execute one function concretely")
    r.add_argument("file")
    r.add_argument("--fn", dest="fn_name", required=True)
    r.add_argument("--args", nargs="*", default=[],
                   help="JSON-encoded argument values")
    r.add_argument("--fuel", type=int, default=10**6)
    r.add_argument("--overflow", choices=("check", "ignore"), default="check")

    s = sub.add_parser("serve", help="start the local HTTP session service")
    s.add_argument("--port", type=int, default=None)
    return p


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _obligations(path: str, text: str, fn_name: Optional[str],
                 mode: str) -> tuple[list[Obligation], object]:
    if path.endswith(".rdl"):
        problem = parse_rdl(text)
        return [rdl_obligation(problem, mode)], problem
    unit = _load_unit(text)
    names = [f.name for f in unit.functions]
    if fn_name is not None:
        if fn_name not in names:
            raise CliError(f"no function named {fn_name} in {path}")
        names = [fn_name]
    if not names:
        raise CliError(f"{path} declares no functions")
    return [fn_obligation(unit, n, mode) for n in names], unit


def _print_verdict(ob: Obligation, proof: ProofState, steps: int) -> None:
    if proof.closed:
        print(f"{ob.name}: Closed ({steps} steps)")
        return
    goals = proof.open_goals()
    print(f"{ob.name}: Open ({len(goals)} open goal{'s' if len(goals) != 1 else ''})")
    for g in goals:
        n = proof.nodes[g]
        why = f"  [{n.reason}]" if n.reason else ""
        print(f"  goal {g}:{why} {lg.pretty_sequent(n.sequent)}")


def _parse_domain(spec: str) -> range:
    lo_s, _, hi_s = spec.partition("..")
    try:
        lo, hi = int(lo_s), int(hi_s)
    except ValueError:
        raise CliError(f"bad domain {spec!r}, expected LO..HI") from None
    if lo > hi:
        raise CliError(f"empty domain {spec!r}")
    return range(lo, hi + 1)


def _diff_test_fn(unit, fn, mode: str, dom: range) -> Optional[str]:
    """Counterexample search against a function contract; returns a report
    line when one is found."""
    skipped = [n for n, ty in fn.params if not isinstance(ty, ol.IntTy)]
    if skipped:
        print(f"  diff-test {fn.name}: skipped (non-integer params: "
              f"{', '.join(skipped)})")
        return None
    pre = fn.contract.pre if fn.contract else lg.Top()
    post = fn.contract.post if fn.contract else lg.Top()
    value = fn.body.value if fn.body.value is not None else ol.UNIT_LIT
    program = tuple(fn.body.stmts) + (ol.AssignStmt(ol.Var("res"), value),)
    domain = {lg.ProgVar(n, ty): [x for x in dom if ty.min <= x <= ty.max]
              for n, ty in fn.params}
    cex = it.counterexample_search(pre, program, post, "box", domain,
                                   bounds=(dom.start, dom.stop - 1),
                                   overflow=mode)
    if cex is None:
        print(f"  diff-test {fn.name}: no counterexample over "
              f"{dom.start}..{dom.stop - 1}")
        return None
    binding = {k: v.value for k, v in sorted(cex.vars.items())
               if isinstance(v, it.IntV)}
    return f"  diff-test {fn.name}: counterexample {binding}"


def _diff_test_rdl(problem, mode: str, dom: range) -> Optional[str]:
    names = sorted(problem.var_types)
    pools = []
    for n in names:
        ty = problem.var_types[n]
        if isinstance(ty, ol.IntTy):
            pools.append([it.IntV(x, ty) for x in dom if ty.min <= x <= ty.max])
        elif isinstance(ty, ol.BoolTy):
            pools.append([it.BoolV(False), it.BoolV(True)])
        else:
            print(f"  diff-test: skipped (variable {n} has no finite domain)")
            return None
    for combo in itertools.product(*pools):
        s = it.ConcreteState(dict(zip(names, combo)))
        try:
            ok = it.eval_formula(problem.formula, s,
                                 bounds=(dom.start, dom.stop - 1),
                                 overflow=mode)
        except it.EvalUndefined:
            continue
        if not ok:
            binding = {n: getattr(v, "value", v) for n, v in zip(names, combo)}
            return f"  diff-test: counterexample {binding}"
    print(f"  diff-test: no counterexample over {dom.start}..{dom.stop - 1}")
    return None


def _cmd_verify(args: argparse.Namespace) -> int:
    with open(args.file, encoding="utf-8") as fh:
        text = fh.read()
    obs, origin = _obligations(args.file, text, args.fn_name, args.overflow)

    proofs: dict[str, ProofState] = {}
    if args.replay:
        with open(args.replay, "rb") as fh:
            blob = fh.read()
        doc = json.loads(blob)
        docs = doc["proofs"] if "proofs" in doc else {obs[0].name: doc}
        for ob in obs:
            if ob.name not in docs:
                raise ProverError(f"replay file has no proof for {ob.name}")
            single = json.dumps(docs[ob.name], sort_keys=True,
                                separators=(",", ":")).encode()
            def make(settings, name=ob.name):
                mode = settings.get("mode", args.overflow)
                if args.file.endswith(".rdl"):
                    return rdl_obligation(origin, mode)
                return fn_obligation(origin, name, mode)
            proofs[ob.name] = replay(text, single, make)
            _print_verdict(ob, proofs[ob.name], proofs[ob.name].steps)
    else:
        for ob in obs:
            st = Settings(mode=args.overflow)
            if args.max_steps is not None:
                st.step_budget = args.max_steps
            proof = ProofState(ob.sequent, ob.ctx, st)
            res = auto(proof, args.max_steps)
            proofs[ob.name] = proof
            _print_verdict(ob, proof, res.steps)

    soundness_alarm = False
    if args.diff_test:
        dom = _parse_domain(args.domain)
        reports = []
        if args.file.endswith(".rdl"):
            line = _diff_test_rdl(origin, args.overflow, dom)
            if line:
                reports.append((obs[0].name, line))
        else:
            for fn in origin.functions:
                if args.fn_name and fn.name != args.fn_name:
                    continue
                line = _diff_test_fn(origin, fn, args.overflow, dom)
                if line:
                    reports.append((fn.name, line))
        for name, line in reports:
            print(line)
            if proofs[name].closed:
                print(f"  DISCREPANCY: {name} proved Closed but a concrete "
                      f"counterexample exists")
                soundness_alarm = True

    if args.emit_proof:
        if len(obs) == 1:
            payload = save_proof(proofs[obs[0].name], text)
        else:
            docs = {name: json.loads(save_proof(p, text))
                    for name, p in proofs.items()}
            payload = json.dumps({"proofs": docs}, sort_keys=True,
                                 separators=(",", ":")).encode()
        with open(args.emit_proof, "wb") as fh:
            fh.write(payload)

    if soundness_alarm:
        return EXIT_ERROR
    return EXIT_CLOSED if all(p.closed for p in proofs.values()) else EXIT_OPEN


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _value_json(v: it.Value):
    if isinstance(v, it.IntV):
        return v.value
    if isinstance(v, it.BoolV):
        return v.value
    if isinstance(v, it.UnitV):
        return None
    if isinstance(v, it.ArrayV):
        return [_value_json(x) for x in v.items]
    return repr(v)


def _cmd_run(args: argparse.Namespace) -> int:
    with open(args.file, encoding="utf-8") as fh:
        text = fh.read()
    unit = _load_unit(text)
    fns = {f.name: f for f in unit.functions}
    fn = fns.get(args.fn_name)
    if fn is None:
        raise CliError(f"no function named {args.fn_name}")
    if len(args.args) != len(fn.params):
        raise CliError(f"{fn.name} takes {len(fn.params)} arguments, "
                       f"got {len(args.args)}")
    vars_ = {}
    for raw, (name, ty) in zip(args.args, fn.params):
        vars_[name] = it.value_of(ty, json.loads(raw))
    state = it.ConcreteState(vars_)
    out = it.exec_block(fn.body, state, fuel=args.fuel,
                        overflow=args.overflow, fns=fns)
    if isinstance(out, it.Normal):
        doc = {"outcome": "normal", "value": _value_json(out.result),
               "state": {k: _value_json(v) for k, v in sorted(out.state.vars.items())}}
    elif isinstance(out, it.Panic):
        doc = {"outcome": "panic", "reason": out.reason}
    else:
        doc = {"outcome": "fuel-exhausted"}
    print(json.dumps(doc, sort_keys=True))
    return EXIT_CLOSED


# ---------------------------------------------------------------------------


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "serve":
            from .service import serve
            serve(args.port)
            return EXIT_CLOSED
    except (FrontendError, CliError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (SourceMismatch, ReplayDivergence) as exc:
        print(f"replay error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ProverError, it.InterpError, it.DomainTooLarge,
            OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
