"""Normalizing rewrite engine for updates and the array theory.

Updates are pushed inward until they sit in front of program variables,
`derefM` applications, or modalities; everything else is eliminated. The
strategy is leftmost-innermost with a fixed rule order, so normal forms are
deterministic. Mutating updates are resolved once their left-hand side has
one of the two recognizable shapes (a variable place or an array-cell place
of a variable); any other mutating update is left for interactive handling.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import logic as lg
from .logic import (
    And, App, Bottom, Box, Dia, ElemUpd, Exists, Forall, FormUpd, Formula,
    Iff, Imp, IntLit, BoolLit, IteTerm, LogicVar, MutUpd, Node, Not, Or,
    ParUpd, PlaceOf, Pred, ProgVar, RefSort, SeqUpd, SkipUpd, SKIP, Sequent,
    Term, TermUpd, Top, UnitLit, Update, children, par, term_sort,
    update_parts, with_children,
)


class RewriteBudgetExceeded(Exception):
    """The step budget fired; indicates a non-terminating rule interaction."""


DEFAULT_BUDGET = 10**6


class _Budget:
    __slots__ = ("left",)

    def __init__(self, steps: int) -> None:
        self.left = steps

    def tick(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise RewriteBudgetExceeded("rewrite step budget exhausted")


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def simplify(n: Node, budget: int = DEFAULT_BUDGET) -> Node:
    """Exhaustively apply the update-simplification and folding rules."""
    return _simp(n, _Budget(budget))


def simplify_sequent(s: Sequent, budget: int = DEFAULT_BUDGET) -> Sequent:
    b = _Budget(budget)
    return Sequent.of(
        tuple(_simp(f, b) for f in s.ante),
        tuple(_simp(f, b) for f in s.succ),
    )


def rewrite_array(n: Node, budget: int = DEFAULT_BUDGET) -> Node:
    """Exhaustive read-over-write simplification, bottom-up."""
    b = _Budget(budget)

    def go(m: Node) -> Node:
        kids = children(m)
        if kids:
            new = tuple(go(c) if isinstance(c, Node) else c for c in kids)
            if new != kids:
                m = with_children(m, new)
        while True:
            b.tick()
            m2 = _array_step(m)
            if m2 is m:
                return m
            m = go(m2) if children(m2) else m2

    return go(n)


def merge_leading_updates(f: Formula, budget: int = DEFAULT_BUDGET) -> Formula:
    """Collapse a chain of leading updates into one flat parallel update."""
    if not isinstance(f, FormUpd):
        return f
    b = _Budget(budget)
    u = _norm_update(_simp(f.update, b), b)
    inner = f.formula
    while isinstance(inner, FormUpd):
        u2 = _simp(inner.update, b)
        u = _norm_update(par([u, _apply_to_update(u, u2, b)]), b)
        inner = inner.formula
    u = _simp(u, b)
    if isinstance(u, SkipUpd):
        return inner
    return FormUpd(u, inner)


def leading_update(f: Formula) -> tuple[Update, Formula]:
    """Split a formula into its (merged) leading update and the core."""
    g = merge_leading_updates(f)
    if isinstance(g, FormUpd):
        return g.update, g.formula
    return SKIP, g


# ---------------------------------------------------------------------------
# Core normalization
# ---------------------------------------------------------------------------


def _simp(n: Node, b: _Budget) -> Node:
    while True:
        kids = children(n)
        if kids:
            new = tuple(_simp(c, b) if isinstance(c, Node) else c for c in kids)
            if new != kids:
                n = with_children(n, new)
        n2 = _step(n, b)
        if n2 == n:
            return n
        n = n2


def _step(n: Node, b: _Budget) -> Node:
    b.tick()
    if isinstance(n, (TermUpd, FormUpd)):
        u = _norm_update(n.update, b)
        inner = n.term if isinstance(n, TermUpd) else n.formula
        return _apply_upd(u, inner, b)
    if isinstance(n, (ParUpd, SeqUpd, MutUpd)):
        return _norm_update(n, b)
    if isinstance(n, App):
        return _term_step(n)
    if isinstance(n, IteTerm):
        if isinstance(n.cond, Top):
            return n.then
        if isinstance(n.cond, Bottom):
            return n.els
        if n.then == n.els:
            return n.then
        return n
    if isinstance(n, Formula):
        return _formula_step(n)
    return n


def _trunc_div(a: int, d: int) -> int:
    if d == 0:
        return 0  # total division: the calculus guards real divisions by zero
    q = abs(a) // abs(d)
    return q if (a >= 0) == (d >= 0) else -q


def _term_step(n: App) -> Term:
    name = n.sym.name
    args = n.args
    if name in lg.ARITH_OPS and all(isinstance(a, IntLit) for a in args):
        x, y = args[0].value, args[1].value
        if name == "+":
            return IntLit(x + y)
        if name == "-":
            return IntLit(x - y)
        if name == "*":
            return IntLit(x * y)
        if name == "/":
            return IntLit(_trunc_div(x, y))
        if name == "%":
            return IntLit(x - y * _trunc_div(x, y))
    if name == "neg" and isinstance(args[0], IntLit):
        return IntLit(-args[0].value)
    if name == "derefS" and isinstance(args[0], App) and args[0].sym.name == "refS":
        return args[0].args[0]
    if name == "derefM" and isinstance(args[0], App) and args[0].sym.name == "refM":
        place = args[0].args[0]
        if isinstance(place, PlaceOf):
            return place.var
        if isinstance(place, App) and place.sym.name == "arrplace":
            ref, i = place.args
            return lg.arr_get(lg.deref_mut(ref), lg.idx(i))
    out = _array_step(n)
    if out is not n:
        return out
    return n


def _array_step(n: Node) -> Node:
    """One read-over-write step at the root."""
    if not (isinstance(n, App) and n.sym.name == "get"):
        return n
    a, f2 = n.args
    if not (isinstance(a, App) and a.sym.name == "set"):
        return n
    inner, f, v = a.args
    if f == f2:
        return v
    if (isinstance(f, App) and f.sym.name == "idx" and isinstance(f.args[0], IntLit)
            and isinstance(f2, App) and f2.sym.name == "idx"
            and isinstance(f2.args[0], IntLit)):
        # distinct literal indices (equal ones hit the syntactic case above)
        return lg.arr_get(inner, f2)
    return IteTerm(Pred("=", (f, f2)), v, lg.arr_get(inner, f2))


_GROUND = (IntLit, BoolLit, UnitLit)


def _formula_step(n: Formula) -> Formula:
    if isinstance(n, Not):
        if isinstance(n.operand, Top):
            return Bottom()
        if isinstance(n.operand, Bottom):
            return Top()
        if isinstance(n.operand, Not):
            return n.operand.operand
        return n
    if isinstance(n, And):
        if isinstance(n.left, Top):
            return n.right
        if isinstance(n.right, Top):
            return n.left
        if isinstance(n.left, Bottom) or isinstance(n.right, Bottom):
            return Bottom()
        return n
    if isinstance(n, Or):
        if isinstance(n.left, Bottom):
            return n.right
        if isinstance(n.right, Bottom):
            return n.left
        if isinstance(n.left, Top) or isinstance(n.right, Top):
            return Top()
        return n
    if isinstance(n, Imp):
        if isinstance(n.left, Top):
            return n.right
        if isinstance(n.left, Bottom) or isinstance(n.right, Top):
            return Top()
        if isinstance(n.right, Bottom):
            return Not(n.left)
        return n
    if isinstance(n, Iff):
        if isinstance(n.left, Top):
            return n.right
        if isinstance(n.right, Top):
            return n.left
        if isinstance(n.left, Bottom):
            return Not(n.right)
        if isinstance(n.right, Bottom):
            return Not(n.left)
        return n
    if isinstance(n, (Forall, Exists)):
        if isinstance(n.body, (Top, Bottom)):
            return n.body
        return n
    if isinstance(n, Pred):
        return _pred_step(n)
    return n


def _pred_step(n: Pred) -> Formula:
    name = n.name
    args = n.args
    if name == "=" and len(args) == 2:
        a, c = args
        if a == c:
            return Top()
        if isinstance(a, _GROUND) and isinstance(c, _GROUND):
            return Top() if a == c else Bottom()
        # (ite(phi, TRUE, FALSE) = TRUE) collapses to phi
        for x, y in ((a, c), (c, a)):
            if (isinstance(x, IteTerm) and isinstance(x.then, BoolLit)
                    and isinstance(x.els, BoolLit) and isinstance(y, BoolLit)
                    and x.then.value != x.els.value):
                return x.cond if x.then.value == y.value else Not(x.cond)
        return n
    if name in ("<", "<=") and all(isinstance(a, IntLit) for a in args):
        x, y = args[0].value, args[1].value
        ok = x < y if name == "<" else x <= y
        return Top() if ok else Bottom()
    if name == "inRange" and isinstance(args[0], IntLit):
        ty = n.objtype
        return Top() if ty.min <= args[0].value <= ty.max else Bottom()
    return n


# ---------------------------------------------------------------------------
# Update normalization
# ---------------------------------------------------------------------------


def _norm_update(u: Update, b: _Budget) -> Update:
    parts = _flatten(u, b)
    out: list[Update] = []
    for p in parts:
        if isinstance(p, MutUpd):
            p = _resolve_mut(p, out)
        if isinstance(p, SkipUpd):
            continue
        out.append(p)
    # last-wins: drop overridden elementary updates
    last: dict[str, int] = {}
    for i, p in enumerate(out):
        if isinstance(p, ElemUpd):
            last[p.var.name] = i
    kept = [p for i, p in enumerate(out)
            if not (isinstance(p, ElemUpd) and last[p.var.name] != i)]
    return par(kept)


def _flatten(u: Update, b: _Budget) -> list[Update]:
    b.tick()
    if isinstance(u, SkipUpd):
        return []
    if isinstance(u, ParUpd):
        out: list[Update] = []
        for p in u.parts:
            out.extend(_flatten(p, b))
        return out
    if isinstance(u, SeqUpd):
        first = _norm_update(u.first, b)
        return _flatten(_apply_to_update(first, u.second, b), b)
    return [u]


def _apply_to_update(u: Update, v: Update, b: _Budget) -> Update:
    """Distribute {u} into the update v (rhs of a sequential application)."""
    b.tick()
    if isinstance(u, SkipUpd):
        return v
    if isinstance(v, SkipUpd):
        return SKIP
    if isinstance(v, ElemUpd):
        return ElemUpd(v.var, _simp(TermUpd(u, v.value), b))
    if isinstance(v, MutUpd):
        return MutUpd(_simp(TermUpd(u, v.ref), b), _simp(TermUpd(u, v.value), b))
    if isinstance(v, ParUpd):
        return par([_apply_to_update(u, p, b) for p in v.parts])
    if isinstance(v, SeqUpd):
        inner = _norm_update(v, b)
        return _apply_to_update(u, inner, b)
    raise TypeError(f"unknown update {v!r}")


def _resolve_mut(m: MutUpd, prefix: list[Update]) -> Update:
    """Turn a mutating update into an elementary one when its target is known."""
    lhs = m.ref
    if isinstance(lhs, App) and lhs.sym.name == "refM":
        place = lhs.args[0]
        if isinstance(place, PlaceOf):
            return ElemUpd(place.var, m.value)
        if isinstance(place, App) and place.sym.name == "arrplace":
            ref, i = place.args
            if (isinstance(ref, App) and ref.sym.name == "refM"
                    and isinstance(ref.args[0], PlaceOf)):
                a = ref.args[0].var
                # the array read sees the effect of the preceding parts
                base: Term = a if not prefix else TermUpd(par(list(prefix)), a)
                return ElemUpd(a, lg.arr_set(base, lg.idx(i), m.value))
    return m


# ---------------------------------------------------------------------------
# Update application
# ---------------------------------------------------------------------------


def _is_rigid(t: Term) -> bool:
    for m in lg.walk(t):
        if isinstance(m, (ProgVar, TermUpd, Box, Dia, FormUpd)):
            return False
        if isinstance(m, App) and not m.sym.rigid:
            return False
    return True


def _may_write(p: Update, sort: lg.Sort) -> bool:
    """Could this unresolved part write a variable of the given sort?"""
    if isinstance(p, MutUpd):
        rs = term_sort(p.ref)
        return isinstance(rs, RefSort) and rs.inner == sort
    return False


def _lookup(parts: tuple[Update, ...], name: str, sort: lg.Sort):
    """Resolve a variable under a flat update; None means unresolvable,
    (False, _) means untouched, (True, value) means rewritten."""
    value = None
    bound = False
    for p in parts:
        if isinstance(p, ElemUpd) and p.var.name == name:
            value = p.value
            bound = True
        elif _may_write(p, sort):
            value = None
            bound = None
    if bound is None:
        return None
    return (bound, value)


def _deref_resolve(parts: tuple[Update, ...], r: ProgVar):
    """Work out how a parallel update affects ``derefM(r)``.

    Walks the parts left to right tracking which reference term the read
    goes through (it changes when r itself is rebound) and remembers the
    last part that could touch the referenced place.  Right-hand sides of
    parallel parts denote base-state values, so a matching mutating part
    lets us return its value verbatim.

    Returns ("value", term), ("rebind", part), ("untouched", None), or
    None when some part might alias the place and we cannot tell.
    """
    sort = term_sort(r)
    if not isinstance(sort, RefSort):
        return None
    inner = sort.inner
    rebind = None
    for p in parts:
        if isinstance(p, ElemUpd) and p.var.name == r.name:
            rebind = p
    cur: Term = rebind.value if rebind is not None else r
    lender = _ref_lender(cur)
    last: tuple[str, object] = ("untouched", None)
    for p in parts:
        if isinstance(p, ElemUpd):
            if p.var.name == r.name:
                continue
            if lender is not None:
                if p.var.name == lender:
                    last = ("value", p.value)
            elif p.var.sort == inner:
                # could be the (unknown) lender of the place we read
                last = ("maybe", p)
        elif isinstance(p, MutUpd):
            rs = term_sort(p.ref)
            if not (isinstance(rs, RefSort) and rs.inner == inner):
                continue
            if p.ref == cur:
                last = ("value", p.value)
            else:
                other = _ref_lender(p.ref)
                if lender is None or other is None or other == lender:
                    last = ("maybe", p)
    if last[0] == "maybe":
        return None
    if last[0] == "untouched" and rebind is not None:
        return ("rebind", rebind)
    return last


def _ref_lender(t: Term) -> str | None:
    """The variable whose place a literal mutable reference borrows."""
    if (isinstance(t, App) and t.sym.name == "refM"
            and isinstance(t.args[0], PlaceOf)):
        return t.args[0].var.name
    return None


def _apply_upd(u: Update, t: Node, b: _Budget) -> Node:
    if isinstance(u, SkipUpd):
        return t
    if isinstance(t, (LogicVar, IntLit, BoolLit, UnitLit, PlaceOf, Top, Bottom)):
        return t
    parts = update_parts(u)

    if isinstance(t, ProgVar):
        hit = _lookup(parts, t.name, t.sort)
        if hit is None:
            return _keep_wrapped(u, t)
        bound, value = hit
        return value if bound else t

    if isinstance(t, App) and t.sym.name == "derefM":
        arg = t.args[0]
        if isinstance(arg, ProgVar):
            res = _deref_resolve(parts, arg)
            if res is None:
                return _keep_wrapped(u, t)
            kind, payload = res
            if kind == "untouched":
                return t
            if kind == "value":
                return payload
            # rebind: substitute the reference and retry with the rest
            rest = [p for p in parts if p is not payload]
            inner = _simp(lg.deref_mut(payload.value), b)
            return _apply_upd(par(rest), inner, b)
        return _keep_wrapped(u, t)

    if isinstance(t, App):  # rigid function symbols distribute
        return App(t.sym, tuple(TermUpd(u, a) for a in t.args))
    if isinstance(t, IteTerm):
        return IteTerm(FormUpd(u, t.cond), TermUpd(u, t.then), TermUpd(u, t.els))
    if isinstance(t, TermUpd):
        merged = _norm_update(par([u, _apply_to_update(u, t.update, b)]), b)
        return _apply_upd(merged, t.term, b)
    if isinstance(t, Pred):
        return Pred(t.name, tuple(TermUpd(u, a) for a in t.args), t.objtype)
    if isinstance(t, Not):
        return Not(FormUpd(u, t.operand))
    if isinstance(t, (And, Or, Imp, Iff)):
        return type(t)(FormUpd(u, t.left), FormUpd(u, t.right))
    if isinstance(t, (Forall, Exists)):
        v = t.var
        body = t.body
        if v in lg.free_logic_vars(u):
            taken = lg.symbol_names(u) | lg.symbol_names(body)
            v2 = LogicVar(lg.fresh_name(v.name, taken), v.sort)
            body = lg.subst_logic_var(body, v, v2)
            v = v2
        return type(t)(v, FormUpd(u, body))
    if isinstance(t, FormUpd):
        merged = _norm_update(par([u, _apply_to_update(u, t.update, b)]), b)
        return _apply_upd(merged, t.formula, b)
    if isinstance(t, (Box, Dia)):
        return _keep_wrapped(u, t)
    raise TypeError(f"cannot apply update to {type(t).__name__}")


def _keep_wrapped(u: Update, t: Node) -> Node:
    """Keep the update in front of t, dropping parts t provably never reads."""
    if isinstance(u, SkipUpd):
        return t
    rs = lg.reads_of(t)
    parts = update_parts(u)
    if rs.exact:
        kept = tuple(p for p in parts
                     if not isinstance(p, ElemUpd) or p.var.name in rs.names)
    else:
        kept = parts
    u2 = par(kept)
    if isinstance(u2, SkipUpd):
        return t
    wrap = TermUpd if isinstance(t, Term) else FormUpd
    return wrap(u2, t)


# ---------------------------------------------------------------------------
# Rule catalog (UI metadata)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RewriteRuleInfo:
    name: str
    pattern: str
    side_condition: str = ""


RULES: tuple[RewriteRuleInfo, ...] = (
    RewriteRuleInfo("dropOverridden",
                    "{u1 || a := t1 || u2 || a := t2 || u3} t ~> {u1 || u2 || a := t2 || u3} t"),
    RewriteRuleInfo("dropIneffective", "{u1 || a := t' || u2} t ~> {u1 || u2} t",
                    "a not free in t"),
    RewriteRuleInfo("sequentialize", "{u1}{u2} t ~> {u1 || {u1}u2} t"),
    RewriteRuleInfo("skipRight", "{u || skip} t ~> {u} t"),
    RewriteRuleInfo("skipLeft", "{skip || u} t ~> {u} t"),
    RewriteRuleInfo("skipElim", "{skip} t ~> t"),
    RewriteRuleInfo("logicVarIdentity", "{u} v ~> v", "v a logic variable"),
    RewriteRuleInfo("distributeRigid", "{u} f(t1, ..., tn) ~> f({u}t1, ..., {u}tn)",
                    "f rigid"),
    RewriteRuleInfo("condTerm", "{u} ite(phi, t1, t2) ~> ite({u}phi, {u}t1, {u}t2)"),
    RewriteRuleInfo("distributeNot", "{u} !phi ~> !{u}phi"),
    RewriteRuleInfo("distributeJunctor", "{u}(phi o psi) ~> {u}phi o {u}psi",
                    "o in {&, |, ->, <->}"),
    RewriteRuleInfo("distributeQuantifier", "{u} Q v. phi ~> Q v. {u}phi",
                    "v not free in u (renamed otherwise)"),
    RewriteRuleInfo("applyOnElem", "{u}(a := t) ~> a := {u}t"),
    RewriteRuleInfo("applyOnMutating", "{u}(t1 :=* t2) ~> {u}t1 :=* {u}t2"),
    RewriteRuleInfo("applyOnParallel", "{u}(u1 || u2) ~> {u}u1 || {u}u2"),
    RewriteRuleInfo("mutatingToElementary", "refM(place(a)) :=* t ~> a := t"),
    RewriteRuleInfo("mutatingArrToElementary",
                    "refM(arrplace(refM(place(a)), t1)) :=* t2 ~> a := set(a, idx(t1), t2)"),
    RewriteRuleInfo("applyOnPV", "{a := t} a ~> t"),
    RewriteRuleInfo("applyElemOnDeref",
                    "{u1 || x := t || u2} derefM(x) ~> {u1 || u2} derefM(t)",
                    "t rigid"),
    RewriteRuleInfo("derefOfSharedRef", "derefS(refS(t)) ~> t"),
    RewriteRuleInfo("derefOfMutReference", "derefM(refM(place(x))) ~> x"),
    RewriteRuleInfo("derefOfMutArrElem",
                    "derefM(refM(arrplace(r, i))) ~> get(derefM(r), idx(i))"),
    RewriteRuleInfo("readOverWrite", "get(set(a, f, v), f') ~> v | get(a, f') | ite",
                    "by syntactic / literal index comparison"),
)


def rule_catalog() -> list[dict]:
    return [{"name": r.name, "pattern": r.pattern, "side_condition": r.side_condition}
            for r in RULES]
