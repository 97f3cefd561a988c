"""Update normalization: goldens from worked examples plus semantic fuzz."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from rustproof import interp as it
from rustproof import logic as lg
from rustproof import objlang as ol
from rustproof.rewrite import (merge_leading_updates, rewrite_array, simplify,
                               simplify_sequent)

from genutil import pv, random_ground_term, random_ground_update, random_state

I32 = ol.I32
a = pv("a")
b = pv("b")
x = pv("x")


def ev(node, state):
    return it.eval_ground(node, state, overflow="ignore")


def st8():
    return it.ConcreteState({n: it.IntV(v) for n, v in
                             (("a", 5), ("b", -3), ("c", 7), ("x", 0))})


def test_last_wins():
    u = lg.par([lg.ElemUpd(a, lg.IntLit(1)), lg.ElemUpd(a, lg.IntLit(2))])
    t = lg.TermUpd(u, a)
    assert simplify(t) == lg.IntLit(2)
    assert ev(t, st8()) == it.IntV(2)


def test_skip_identity():
    t = lg.TermUpd(lg.SKIP, lg.add(a, b))
    assert simplify(t) == simplify(lg.add(a, b))


def test_elementary_application():
    u = lg.ElemUpd(x, lg.add(x, lg.IntLit(1)))
    f = lg.FormUpd(u, lg.Pred("<", (lg.IntLit(0), x), None))
    out = simplify(f)
    assert lg.pretty(out) == "0 < x + 1"


def test_drop_ineffective_update():
    u = lg.ElemUpd(b, lg.IntLit(9))
    t = lg.TermUpd(u, a)
    assert simplify(t) == a


def test_mutating_update_through_known_place():
    ref = lg.ref_mut(lg.place_of(x), lg.INT)
    u = lg.par([lg.ElemUpd(pv("y"), ref)])
    # y := &mut x, then *y = 3: reading x sees the write
    seq = lg.SeqUpd(u, lg.MutUpd(ref, lg.IntLit(3)))
    t = lg.TermUpd(seq, x)
    assert simplify(t) == lg.IntLit(3)


def test_deref_of_rebound_reference():
    refx = lg.ref_mut(lg.place_of(x), lg.INT)
    y = lg.ProgVar("y", ol.RefTy(I32, True))
    u = lg.par([lg.ElemUpd(y, refx), lg.ElemUpd(x, lg.IntLit(3))])
    t = lg.TermUpd(u, lg.deref_mut(y))
    assert simplify(t) == lg.IntLit(3)


def test_deref_reads_through_opaque_mutating_part():
    r = lg.ProgVar("r", ol.RefTy(I32, True))
    u = lg.MutUpd(r, lg.add(a, b))
    t = lg.TermUpd(u, lg.deref_mut(r))
    assert simplify(t) == simplify(lg.add(a, b))


def test_deref_untouched_by_unrelated_parts():
    r = lg.ProgVar("r", ol.RefTy(ol.BOOL, True))
    u = lg.ElemUpd(a, lg.IntLit(1))  # int write cannot hit a bool place
    t = lg.TermUpd(u, lg.deref_mut(r))
    assert simplify(t) == lg.deref_mut(r)


def test_deref_blocked_by_possible_alias():
    r = lg.ProgVar("r", ol.RefTy(I32, True))
    s = lg.ProgVar("s", ol.RefTy(I32, True))
    u = lg.MutUpd(s, lg.IntLit(1))  # s might borrow the same place as r
    t = lg.TermUpd(u, lg.deref_mut(r))
    out = simplify(t)
    assert isinstance(out, lg.TermUpd)


def test_array_read_over_write_ite():
    arr = lg.ProgVar("arr", ol.ArrayTy(I32, 4))
    i, j = pv("i"), pv("j")
    t = lg.arr_get(
        lg.arr_set(lg.arr_set(arr, lg.idx(i), lg.IntLit(1)),
                   lg.idx(j), lg.IntLit(2)),
        lg.idx(i))
    out = rewrite_array(t)
    assert isinstance(out, lg.IteTerm)
    # literal instantiations decide the conditional
    same = lg.subst_prog_vars(t, {i: lg.IntLit(0), j: lg.IntLit(0)})
    diff = lg.subst_prog_vars(t, {i: lg.IntLit(0), j: lg.IntLit(1)})
    assert simplify(same) == lg.IntLit(2)
    assert simplify(diff) == lg.IntLit(1)


def test_sequentialization_matches_oracle():
    rng = random.Random(7)
    for _ in range(200):
        u = random_ground_update(rng)
        v = random_ground_update(rng)
        t = random_ground_term(rng)
        s = random_state(rng)
        nested = lg.TermUpd(lg.SeqUpd(u, v), t)
        assert ev(simplify(nested), s) == ev(nested, s)


def test_merge_leading_updates():
    u = lg.ElemUpd(a, lg.IntLit(1))
    v = lg.ElemUpd(b, a)
    f = lg.FormUpd(u, lg.FormUpd(v, lg.Box((), lg.eq(b, lg.IntLit(1)))))
    merged = merge_leading_updates(f)
    assert isinstance(merged, lg.FormUpd)
    assert not isinstance(merged.formula, lg.FormUpd)
    s = st8()
    assert ev(merged, s) == ev(f, s)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_fuzz_simplify_preserves_semantics(seed):
    rng = random.Random(seed)
    u = random_ground_update(rng)
    t = random_ground_term(rng)
    s = random_state(rng)
    node = lg.TermUpd(u, t)
    out = simplify(node)
    assert ev(out, s) == ev(node, s)
    # idempotence on the same input
    assert simplify(out) == out


def test_simplify_sequent_drops_trivialities():
    s = lg.Sequent.of((lg.Top(),), (lg.eq(a, a),))
    out = simplify_sequent(s)
    assert out.succ and out.succ[0] == lg.Top()
