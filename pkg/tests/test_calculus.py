"""Symbolic execution rules: matching, premise shapes, freshness."""

import pytest

from rustproof import calculus as ca
from rustproof import logic as lg
from rustproof import objlang as ol
from rustproof.frontend import parse_rdl
from rustproof.prover import rdl_obligation

I32 = ol.I32


def goal_of(rdl_text: str, mode: str = "check"):
    ob = rdl_obligation(parse_rdl(rdl_text), mode)
    return ob.sequent, ob.ctx


def rule_at(seq, ctx):
    rules = ca.applicable_rules(seq, (1, 0), ctx)
    assert rules, "no applicable execution rule"
    return rules[0]


def test_copy_rule_single_premise():
    seq, ctx = goal_of("""\\vars { x: i32; y: i32; }
\\problem { [{ x = y; }] (x == y) }
""")
    schema = rule_at(seq, ctx)
    assert schema.name == "copy"
    res = ca.apply_rule(seq, "copy", (1, 0), ctx)
    assert len(res.premises) == 1
    assert "{x := y}" in lg.pretty_sequent(res.premises[0])


def test_assign_binop_splits_in_check_mode():
    text = """\\vars { x: i32; y: i32; }
\\problem { [{ x = x + y; }] true }
"""
    seq, ctx = goal_of(text, "check")
    assert rule_at(seq, ctx).name == "assignBinOp"
    res = ca.apply_rule(seq, "assignBinOp", (1, 0), ctx)
    assert len(res.premises) == 2
    assert res.branch_labels and res.branch_labels[0] != res.branch_labels[1]
    # ignore mode: one unconditional premise
    seq_i, ctx_i = goal_of(text, "ignore")
    res_i = ca.apply_rule(seq_i, "assignBinOp", (1, 0), ctx_i)
    assert len(res_i.premises) == 1


def test_if_else_split_two_branches():
    seq, ctx = goal_of("""\\vars { x: i32; b: bool; }
\\problem { [{ if b { x = 1; } else { x = 2; } }] (x >= 1) }
""")
    schema = rule_at(seq, ctx)
    assert schema.name == "ifElseSplit"
    res = ca.apply_rule(seq, "ifElseSplit", (1, 0), ctx)
    assert len(res.premises) == 2


def test_panic_box_closes_and_dia_fails():
    text = """\\vars { x: i32; }
\\problem { [{ panic!(); }] (x == 0) }
"""
    seq, ctx = goal_of(text)
    assert rule_at(seq, ctx).name == "panicBox"
    res = ca.apply_rule(seq, "panicBox", (1, 0), ctx)
    assert res.premises == []

    dia = """\\vars { x: i32; }
\\problem { <{ panic!(); }> (x == 0) }
"""
    seq_d, ctx_d = goal_of(dia)
    res_d = ca.apply_rule(seq_d, "panicDia", (1, 0), ctx_d)
    assert len(res_d.premises) == 1
    assert lg.Bottom() in res_d.premises[0].succ


def test_empty_modality_exposes_leading_update():
    seq, ctx = goal_of("""\\vars { x: i32; }
\\problem { [{ }] (x == x) }
""")
    schema = rule_at(seq, ctx)
    assert schema.name == "emptyModality"
    res = ca.apply_rule(seq, "emptyModality", (1, 0), ctx)
    assert len(res.premises) == 1
    assert not any(isinstance(f, (lg.Box, lg.Dia))
                   for f in res.premises[0].succ)


def test_array_read_splits_on_bounds():
    seq, ctx = goal_of("""\\vars { a: [i32; 3]; i: i32; x: i32; }
\\problem { [{ x = a[i]; }] true }
""")
    schema = rule_at(seq, ctx)
    assert schema.name == "copyArrayIdx"
    res = ca.apply_rule(seq, "copyArrayIdx", (1, 0), ctx)
    assert len(res.premises) == 2


def test_borrow_and_mutate_chain_rules():
    seq, ctx = goal_of("""\\vars { x: i32; y: &mut i32; }
\\problem { [{ x = 1; y = &mut x; *y = 3; }] (x == 3) }
""")
    # step through the three statements by always applying the offered rule
    names = []
    for _ in range(3):
        schema = rule_at(seq, ctx)
        names.append(schema.name)
        res = ca.apply_rule(seq, schema.name, (1, 0), ctx)
        assert len(res.premises) == 1
        seq = res.premises[0]
    assert names == ["assignBool", "borrowMut", "mutate"] or \
        names[1:] == ["borrowMut", "mutate"]


def test_loop_rule_requires_invariant_input():
    seq, ctx = goal_of("""\\vars { x: i32; }
\\problem { [{ x = loop { break 1; }; }] (x == 1) }
""")
    schema = rule_at(seq, ctx)
    assert schema.name == "loopScopeInvBox"
    assert "invariant" in schema.needs
    with pytest.raises(ca.MissingSpec):
        ca.apply_rule(seq, "loopScopeInvBox", (1, 0), ctx)
    res = ca.apply_rule(seq, "loopScopeInvBox", (1, 0), ctx,
                        {"invariant": "true"})
    assert len(res.premises) == 2


def test_loop_rule_fresh_symbols_not_in_conclusion():
    seq, ctx = goal_of("""\\vars { x: i32; n: i32; }
\\problem { [{ x = loop { if n > 0 { break 1; } else { } x = x + 1; }; }] true }
""")
    res = ca.apply_rule(seq, "loopScopeInvBox", (1, 0), ctx,
                        {"invariant": "true"})
    taken = lg.symbol_names(seq)
    for name in res.fresh:
        assert name not in taken


def test_unknown_contract_raises_missing_spec():
    # a call to a function the goal context does not know
    seq, ctx = goal_of("""\\vars { x: i32; }
\\problem { [{ x = 1; }] true }
""")
    with pytest.raises(ca.CalculusError):
        ca.apply_rule(seq, "useFnContract", (1, 0), ctx)


def test_active_decompose_and_recompose_roundtrip():
    stmts = (ol.AssignStmt(ol.Var("x"), ol.Lit(1, I32)),
             ol.AssignStmt(ol.Var("y"), ol.Var("x")))
    pctx = ca.active_decompose(stmts)
    assert pctx.active == stmts[0]
    assert pctx.frames == ()
    rebuilt = ca.recompose(pctx.frames, (pctx.active,) + tuple(pctx.rest))
    assert rebuilt == stmts


def test_rule_not_matching_raises():
    seq, ctx = goal_of("""\\vars { x: i32; y: i32; }
\\problem { [{ x = y; }] true }
""")
    with pytest.raises(ca.NotApplicable):
        ca.apply_rule(seq, "ifElseSplit", (1, 0), ctx)
