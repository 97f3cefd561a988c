"""Term and formula layer: sorts, paths, substitution, well-formedness."""

import itertools

import pytest
from hypothesis import given, strategies as st

from rustproof import logic as lg
from rustproof import objlang as ol

I32 = ol.I32
U64 = ol.U64

x = lg.ProgVar("x", I32)
y = lg.ProgVar("y", I32)


def test_sort_of_objtype():
    assert lg.sort_of_objtype(I32) is lg.INT
    assert lg.sort_of_objtype(ol.BOOL) is lg.BOOL
    assert lg.sort_of_objtype(ol.ArrayTy(I32, 4)) == lg.ArraySort(lg.INT, 4)
    rs = lg.sort_of_objtype(ol.RefTy(I32, True))
    assert rs == lg.RefSort(lg.INT, True)


def test_subsort_reflexive_and_never():
    sorts = [lg.INT, lg.BOOL, lg.UNIT, lg.ANY, lg.NEVER,
             lg.ArraySort(lg.INT, 2), lg.RefSort(lg.BOOL, False)]
    for s in sorts:
        assert lg.subsort(s, s)
        assert lg.subsort(lg.NEVER, s)
        assert lg.subsort(s, lg.ANY)
    # antisymmetry and transitivity over the finite universe
    for a, b in itertools.product(sorts, sorts):
        if lg.subsort(a, b) and lg.subsort(b, a):
            assert a == b
    for a, b, c in itertools.product(sorts, repeat=3):
        if lg.subsort(a, b) and lg.subsort(b, c):
            assert lg.subsort(a, c)


def test_arith_builders_sort_check():
    t = lg.add(x, lg.IntLit(1))
    assert lg.term_sort(t) is lg.INT
    with pytest.raises(lg.SortClash):
        lg.arr_get(x, lg.idx(lg.IntLit(0)))


def test_in_range_bounds_u32_and_i8():
    u32 = ol.INT_TYPES["u32"]
    p = lg.in_range(u32, x)
    assert p.name == "inRange"
    i8 = ol.INT_TYPES["i8"]
    assert i8.min == -128 and i8.max == 127
    assert u32.min == 0 and u32.max == 2**32 - 1


def test_sequent_dedups_members():
    f = lg.eq(x, y)
    s = lg.Sequent.of((f, f), (f, f, lg.Top()))
    assert s.ante == (f,)
    assert len(s.succ) == 2


def test_fresh_name_avoids_taken():
    assert lg.fresh_name("v", set()) == "v_0"
    assert lg.fresh_name("v", {"v_0", "v_1"}) == "v_2"


def test_subst_prog_vars():
    f = lg.eq(lg.add(x, y), lg.IntLit(3))
    g = lg.subst_prog_vars(f, {x: lg.IntLit(1)})
    assert lg.pretty(g) == "1 + y = 3"


def test_subst_logic_var_stops_at_shadowing_binder():
    v = lg.LogicVar("k", lg.INT)
    shadowed = lg.Forall(v, lg.eq(v, lg.IntLit(0)))
    assert lg.subst_logic_var(shadowed, v, lg.IntLit(5)) == shadowed
    free = lg.eq(v, lg.IntLit(0))
    assert lg.pretty(lg.subst_logic_var(free, v, lg.IntLit(5))) == "5 = 0"


def _terms():
    leaf = st.sampled_from([x, y, lg.IntLit(0), lg.IntLit(7)])
    return st.recursive(
        leaf,
        lambda kids: st.tuples(st.sampled_from("+-*"), kids, kids)
        .map(lambda t: lg.arith(t[0], t[1], t[2])),
        max_leaves=8)


@given(_terms())
def test_replace_at_roundtrip(t):
    paths = [()]
    for i, _ in enumerate(lg.children(t)):
        paths.append((i,))
    for p in paths:
        sub = lg.subterm_at(t, p)
        assert lg.replace_at(t, p, sub) == t


@given(_terms())
def test_wellformed_on_built_terms(t):
    assert lg.wellformed(t) == []


def test_wellformed_flags_sort_errors():
    bad = lg.App(lg.FuncSym("+", (lg.INT, lg.INT), lg.INT),
                 (x, lg.BoolLit(True)))
    assert lg.wellformed(bad)


def test_invalid_path_raises():
    with pytest.raises(lg.InvalidPath):
        lg.subterm_at(x, (3,))


def test_pretty_update_shapes():
    u = lg.par([lg.ElemUpd(x, lg.IntLit(1)),
                lg.MutUpd(lg.ref_mut(lg.place_of(x), lg.INT), lg.IntLit(2))])
    s = lg.pretty_update(u)
    assert ":=" in s and ":=*" in s and "||" in s


def test_update_parts_flatten():
    u = lg.par([lg.ElemUpd(x, lg.IntLit(1)),
                lg.par([lg.ElemUpd(y, lg.IntLit(2)), lg.SKIP])])
    parts = lg.update_parts(u)
    assert [type(p).__name__ for p in parts] == ["ElemUpd", "ElemUpd"]


def test_prog_vars_and_reads():
    f = lg.FormUpd(lg.ElemUpd(x, lg.IntLit(1)), lg.eq(y, lg.IntLit(0)))
    assert {v.name for v in lg.prog_vars(f)} == {"x", "y"}
