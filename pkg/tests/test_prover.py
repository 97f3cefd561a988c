"""Proof trees, logical rules, arithmetic closing, persistence."""

import itertools
import json
import random

import pytest

from rustproof import logic as lg
from rustproof import objlang as ol
from rustproof.frontend import parse_rdl
from rustproof.prover import (NotApplicable, ProofState, ProverError,
                              ReplayDivergence, Settings, SourceMismatch,
                              apply_logical, auto, close_arith, fn_obligation,
                              logical_rules, rdl_obligation, replay,
                              save_proof)

from conftest import (MUL_SRC, SWAP_RDL, load_unit, prove_fn, prove_rdl)

I32 = ol.I32
x = lg.ProgVar("x", I32)
y = lg.ProgVar("y", I32)
z = lg.ProgVar("z", I32)


def seq(ante, succ):
    return lg.Sequent.of(tuple(ante), tuple(succ))


# -- logical rules ------------------------------------------------------------


def test_and_right_branches():
    s = seq([], [lg.And(lg.eq(x, x), lg.eq(y, y))])
    res = apply_logical(s, "andRight", (1, 0))
    assert len(res.premises) == 2


def test_imp_right_moves_hypothesis():
    s = seq([], [lg.Imp(lg.eq(x, y), lg.eq(y, x))])
    res = apply_logical(s, "impRight", (1, 0))
    [p] = res.premises
    assert lg.eq(x, y) in p.ante


def test_or_left_branches():
    s = seq([lg.Or(lg.eq(x, y), lg.eq(y, z))], [lg.eq(x, x)])
    res = apply_logical(s, "orLeft", (0, 0))
    assert len(res.premises) == 2


def test_not_rules_swap_sides():
    s = seq([lg.Not(lg.eq(x, y))], [])
    [p] = apply_logical(s, "notLeft", (0, 0)).premises
    assert lg.eq(x, y) in p.succ


def test_forall_right_skolemizes():
    k = lg.LogicVar("k", lg.INT)
    s = seq([], [lg.Forall(k, lg.le(k, k))])
    res = apply_logical(s, "forallRight", (1, 0))
    assert res.fresh
    [p] = res.premises
    assert not isinstance(p.succ[0], lg.Forall)


def test_forall_left_needs_term():
    k = lg.LogicVar("k", lg.INT)
    s = seq([lg.Forall(k, lg.le(k, k))], [lg.eq(x, y)])
    names = [r.name for r in logical_rules(s, (0, 0))]
    assert "forallLeft" in names
    res = apply_logical(s, "forallLeft", (0, 0), {"term": "x + 1"},
                        rdl_obligation(parse_rdl(
                            "\\vars { x: i32; y: i32; }\n\\problem { true }"),
                            "check").ctx)
    [p] = res.premises
    assert any("x + 1" in lg.pretty(f) for f in p.ante)


def test_close_on_identity():
    s = seq([lg.eq(x, y)], [lg.eq(x, y)])
    assert apply_logical(s, "close", (1, 0)).premises == []


# -- arithmetic closing -------------------------------------------------------


def test_close_arith_linear_chain():
    s = seq([lg.Pred("<", (x, y), None), lg.Pred("<", (y, z), None)],
            [lg.le(lg.add(x, lg.IntLit(1)), z)])
    assert close_arith(s)
    # exhaustive oracle over the finite domain agrees it is valid
    for a, b, c in itertools.product(range(-8, 9), repeat=3):
        if a < b and b < c:
            assert a + 1 <= c


def test_close_arith_product_identity():
    a = lg.ProgVar("a", I32)
    b = lg.ProgVar("b", I32)
    goal = lg.And(lg.eq(lg.IntLit(0), lg.mul(a, lg.sub(b, b))),
                  lg.le(b, b))
    assert close_arith(seq([], [goal]))


def test_close_arith_rejects_falsifiable():
    assert not close_arith(seq([], [lg.le(lg.add(x, lg.IntLit(1)), x)]))
    assert not close_arith(seq([lg.le(x, y)], [lg.le(y, x)]))


def test_close_arith_division_bounds():
    # mid = low + (high - low) / 2 stays within [low, high) when low < high
    low, high, mid = (lg.ProgVar(n, I32) for n in ("low", "high", "mid"))
    half = lg.arith("/", lg.sub(high, low), lg.IntLit(2))
    s = seq([lg.Pred("<", (low, high), None), lg.eq(mid, lg.add(low, half))],
            [lg.And(lg.le(low, mid), lg.Pred("<", (mid, high), None))])
    assert close_arith(s)


def _rand_linear_sequent(rng: random.Random):
    def atom():
        cs = [rng.randint(-3, 3) for _ in range(3)]
        c0 = rng.randint(-4, 4)
        t = lg.IntLit(c0)
        for c, v in zip(cs, (x, y, z)):
            t = lg.add(t, lg.mul(lg.IntLit(c), v))
        op = rng.choice(("<", "<=", "="))
        rhs_var = rng.choice((x, y, z, lg.IntLit(rng.randint(-4, 4))))
        return lg.Pred(op, (t, rhs_var), None), (cs, c0, op, rhs_var)

    ante, succ, meta = [], [], []
    for _ in range(rng.randint(1, 3)):
        f, m = atom()
        ante.append(f)
        meta.append(("a", m))
    for _ in range(rng.randint(1, 2)):
        f, m = atom()
        succ.append(f)
        meta.append(("s", m))
    return seq(ante, succ), meta


def _holds(meta, vals):
    def atom_val(m):
        cs, c0, op, rhs = m
        lhs = c0 + sum(c * v for c, v in zip(cs, vals))
        r = rhs.value if isinstance(rhs, lg.IntLit) else \
            vals[("x", "y", "z").index(rhs.name)]
        return {"<": lhs < r, "<=": lhs <= r, "=": lhs == r}[op]

    ante_ok = all(atom_val(m) for side, m in meta if side == "a")
    succ_ok = any(atom_val(m) for side, m in meta if side == "s")
    return (not ante_ok) or succ_ok


def test_close_arith_never_true_when_oracle_falsifies():
    rng = random.Random(20240811)
    closed = 0
    for _ in range(10**4):
        s, meta = _rand_linear_sequent(rng)
        if not close_arith(s):
            continue
        closed += 1
        for vals in itertools.product(range(-4, 5), repeat=3):
            assert _holds(meta, vals), (lg.pretty_sequent(s), vals)
    # the sample must actually exercise the closing procedure
    assert closed > 100


# -- proof state, auto, persistence -------------------------------------------


def test_budget_exceeded_reported():
    proof, result = _swap_proof(budget=2)
    assert result.status == "BudgetExceeded"
    assert proof.open_goals()


def _swap_proof(budget=None):
    ob = rdl_obligation(parse_rdl(SWAP_RDL), "ignore")
    proof = ProofState(ob.sequent, ob.ctx, Settings(mode="ignore"))
    return proof, auto(proof, budget)


def test_apply_on_closed_node_rejected():
    proof, result = _swap_proof()
    assert proof.closed
    with pytest.raises(NotApplicable):
        proof.apply(0, "simplify", (1, 0))


def test_auto_is_deterministic():
    blobs = set()
    for _ in range(2):
        proof, _ = _swap_proof()
        blobs.add(save_proof(proof, SWAP_RDL))
    assert len(blobs) == 1


def test_save_replay_roundtrip():
    proof, _ = _swap_proof()
    blob = save_proof(proof, SWAP_RDL)
    ob = rdl_obligation(parse_rdl(SWAP_RDL), "ignore")
    redone = replay(SWAP_RDL, blob, lambda s: ob)
    assert save_proof(redone, SWAP_RDL) == blob
    doc = json.loads(blob)
    assert all("position-path" in n for n in doc["nodes"])


def test_replay_rejects_other_source():
    proof, _ = _swap_proof()
    blob = save_proof(proof, SWAP_RDL)
    with pytest.raises(SourceMismatch):
        replay(SWAP_RDL + "\n", blob, lambda s: None)


def test_replay_detects_divergence():
    proof, _ = _swap_proof()
    doc = json.loads(save_proof(proof, SWAP_RDL))
    doc["nodes"][0]["rule"] = "ifElseSplit"
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    ob = rdl_obligation(parse_rdl(SWAP_RDL), "ignore")
    with pytest.raises(ReplayDivergence):
        replay(SWAP_RDL, blob, lambda s: ob)


def test_rdl_obligation_assumes_declared_ranges():
    ob = rdl_obligation(parse_rdl(SWAP_RDL), "check")
    names = [f.name for f in ob.sequent.ante if isinstance(f, lg.Pred)]
    assert names.count("inRange") == 3


def test_fn_obligation_binds_result():
    unit = load_unit(MUL_SRC)
    ob = fn_obligation(unit, "mul", "ignore")
    assert "res" in ob.ctx.types


def test_recursive_call_requires_decreases():
    src = """\
//@ ensures res >= 0
fn count(n: i32) -> i32 {
    if n <= 0 { 0 } else { count(n - 1) + 1 }
}
"""
    proof, result = prove_fn(src, "count", "ignore")
    assert result.status != "Closed"
    assert not proof.closed


def test_recursive_function_with_decreases_closes():
    src = """\
//@ requires n >= 0
//@ ensures res >= 0
//@ decreases n
fn count(n: i32) -> i32 {
    if n <= 0 { 0 } else { count(n - 1) + 1 }
}
"""
    proof, result = prove_fn(src, "count", "ignore")
    assert proof.closed, [lg.pretty_sequent(proof.nodes[g].sequent)
                          for g in proof.open_goals()]
