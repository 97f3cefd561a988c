"""Concrete interpreter oracle: execution outcomes and ground evaluation."""

import pytest

from rustproof import interp as it
from rustproof import logic as lg
from rustproof import objlang as ol
from rustproof.frontend import normalize, parse_unit

I32 = ol.I32


def body_of(src: str, name: str = "f"):
    unit = normalize(parse_unit(src))
    assert not unit.errors, unit.errors
    return unit.function(name).body


def run(src: str, args: dict, overflow: str = "check", fuel: int = 10**5):
    body = body_of(src)
    state = it.ConcreteState({k: it.value_of(I32, v) for k, v in args.items()})
    return it.exec_block(body, state, fuel=fuel, overflow=overflow)


def test_normal_result():
    out = run("fn f(n: i32) -> i32 { n + 1 }", {"n": 4})
    assert isinstance(out, it.Normal)
    assert out.result == it.IntV(5)


def test_overflow_panics_in_check_mode():
    src = "fn f(n: i32) -> i32 { n * n }"
    out = run(src, {"n": 2**16})
    assert isinstance(out, it.Panic)
    assert out.reason == "overflow"
    assert isinstance(run(src, {"n": 2**16}, overflow="ignore"), it.Normal)


def test_division_by_zero_panics():
    out = run("fn f(n: i32) -> i32 { 1 / n }", {"n": 0})
    assert isinstance(out, it.Panic)


def test_division_truncates_toward_zero():
    out = run("fn f(n: i32) -> i32 { n / 2 }", {"n": -3})
    assert out.result == it.IntV(-1)


def test_index_out_of_bounds_panics():
    src = "fn f(a: [i32; 2], n: i32) -> i32 { a[n] }"
    body = body_of(src)
    arr = it.value_of(ol.ArrayTy(I32, 2), [1, 2])

    def go(n):
        s = it.ConcreteState({"a": arr, "n": it.IntV(n, I32)})
        return it.exec_block(body, s)

    assert isinstance(go(1), it.Normal)
    assert isinstance(go(2), it.Panic)


def test_fuel_exhausted_on_divergence():
    src = """\
fn f(n: i32) -> i32 {
    let mut i: i32 = 0;
    loop {
        if i < 0 { break i; }
        i = 0;
    }
}
"""
    out = run(src, {"n": 0}, fuel=500)
    assert isinstance(out, it.FuelExhausted)


def test_mutable_reference_writes_through():
    src = """\
fn f(n: i32) -> i32 {
    let mut x: i32 = n;
    let y: &mut i32 = &mut x;
    *y = 3;
    x
}
"""
    out = run(src, {"n": 0})
    assert out.result == it.IntV(3)


def test_copy_keeps_source_readable():
    src = """\
fn f(n: i32) -> i32 {
    let a: i32 = n;
    let b: i32 = a;
    a + b
}
"""
    assert run(src, {"n": 2}).result == it.IntV(4)


# -- ground evaluation of logic trees ----------------------------------------


def pv(name):
    return lg.ProgVar(name, I32)


def test_parallel_update_last_wins():
    a = pv("a")
    u = lg.par([lg.ElemUpd(a, lg.IntLit(1)), lg.ElemUpd(a, lg.IntLit(2))])
    s = it.ConcreteState({"a": it.IntV(0)})
    assert it.eval_ground(lg.TermUpd(u, a), s) == it.IntV(2)


def test_update_makes_formula_valid():
    x = pv("x")
    f = lg.Imp(lg.eq(x, lg.IntLit(0)),
               lg.FormUpd(lg.ElemUpd(x, lg.add(x, lg.IntLit(1))),
                          lg.Pred("<", (lg.IntLit(0), x), None)))
    assert it.eval_ground(f, it.ConcreteState({"x": it.IntV(0)})) is True


def test_skip_update_is_identity():
    s = it.ConcreteState({"a": it.IntV(5)})
    assert it.apply_update(lg.SKIP, s).vars == s.vars


def test_mutating_update_semantics():
    a = pv("a")
    ref = lg.ref_mut(lg.place_of(a), lg.INT)
    s = it.ConcreteState({"a": it.IntV(0)})
    s2 = it.apply_update(lg.MutUpd(ref, lg.IntLit(9)), s)
    assert s2.vars["a"] == it.IntV(9)


def test_bounded_quantifier_evaluation():
    k = lg.LogicVar("k", lg.INT)
    f = lg.Forall(k, lg.Pred("<=", (lg.IntLit(-8), k), None))
    assert it.eval_formula(f, it.ConcreteState({}), bounds=(-8, 8)) is True
    g = lg.Forall(k, lg.Pred("<", (lg.IntLit(0), k), None))
    assert it.eval_formula(g, it.ConcreteState({}), bounds=(-8, 8)) is False


def test_box_holds_on_panic():
    # division by zero: [p]False still holds because the run panics
    body = body_of("fn f(n: i32) -> i32 { 1 / n }")
    prog = tuple(body.stmts) + (ol.AssignStmt(ol.Var("res"), body.value),)
    f = lg.Box(prog, lg.Bottom())
    s = it.ConcreteState({"n": it.IntV(0)})
    assert it.eval_formula(f, s) is True
    d = lg.Dia(prog, lg.Top())
    assert it.eval_formula(d, s) is False


def test_counterexample_search_none_on_valid():
    body = body_of("fn f(x: i32) -> i32 { x + 1 }")
    prog = tuple(body.stmts) + (ol.AssignStmt(ol.Var("res"), body.value),)
    pre = lg.eq(pv("x"), lg.IntLit(0))
    post = lg.Pred("<", (lg.IntLit(0), pv("res")), None)
    dom = {pv("x"): [0]}
    assert it.counterexample_search(pre, prog, post, "dia", dom) is None


def test_counterexample_search_finds_smallest():
    body = body_of("fn f(x: i32) -> i32 { x }")
    prog = tuple(body.stmts) + (ol.AssignStmt(ol.Var("res"), body.value),)
    post = lg.Pred("<", (lg.IntLit(0), pv("res")), None)
    dom = {pv("x"): list(range(-3, 4))}
    cex = it.counterexample_search(lg.Top(), prog, post, "box", dom)
    assert cex is not None
    assert cex.vars["x"] == it.IntV(-3)


def test_domain_too_large():
    dom = {pv(f"x{i}"): list(range(200)) for i in range(4)}
    with pytest.raises(it.DomainTooLarge):
        it.counterexample_search(lg.Top(), (), lg.Top(), "box", dom)
