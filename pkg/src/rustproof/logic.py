"""Dynamic-logic core: sorts, terms, formulas, updates, and sequents.

Terms are immutable trees with structural equality. Integer object types all
share the logical sort INT with unbounded semantics; per-type bounds live in
`inRange` predicates. The only state-dependent function symbol is `derefM`;
everything else (including the per-variable place constants) is rigid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from . import objlang as ol
from .objlang import ObjType, Program


# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------


class Sort:
    pass


@dataclass(frozen=True)
class SimpleSort(Sort):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ArraySort(Sort):
    elem: Sort
    length: int

    def __str__(self) -> str:
        return f"[{self.elem}; {self.length}]"


@dataclass(frozen=True)
class RefSort(Sort):
    inner: Sort
    mutable: bool

    def __str__(self) -> str:
        return ("RefMut<" if self.mutable else "RefShared<") + str(self.inner) + ">"


ANY = SimpleSort("any")
NEVER = SimpleSort("never")
BOOL = SimpleSort("bool")
INT = SimpleSort("int")
UNIT = SimpleSort("unit")
FIELD = SimpleSort("field")
PLACE = SimpleSort("place")


def subsort(a: Sort, b: Sort) -> bool:
    """The flat sort hierarchy: never <= s <= any for all s."""
    return a == b or a == NEVER or b == ANY


def sort_of_objtype(ty: ObjType) -> Sort:
    if isinstance(ty, ol.BoolTy):
        return BOOL
    if isinstance(ty, ol.UnitTy):
        return UNIT
    if isinstance(ty, ol.IntTy):
        return INT
    if isinstance(ty, ol.ArrayTy):
        return ArraySort(sort_of_objtype(ty.elem), ty.length)
    if isinstance(ty, ol.RefTy):
        return RefSort(sort_of_objtype(ty.inner), ty.mutable)
    raise TypeError(f"unknown object type {ty!r}")


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


class Node:
    """Base for terms, formulas, and updates."""


class Term(Node):
    pass


class Formula(Node):
    pass


class Update(Node):
    pass


@dataclass(frozen=True)
class FuncSym:
    name: str
    arg_sorts: tuple[Sort, ...]
    sort: Sort
    rigid: bool = True

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class LogicVar(Term):
    name: str
    sort: Sort


@dataclass(frozen=True)
class ProgVar(Term):
    name: str
    objtype: ObjType

    @property
    def sort(self) -> Sort:
        return sort_of_objtype(self.objtype)


@dataclass(frozen=True)
class IntLit(Term):
    value: int
    sort: Sort = field(default=INT, init=False, compare=False, repr=False)


@dataclass(frozen=True)
class BoolLit(Term):
    value: bool
    sort: Sort = field(default=BOOL, init=False, compare=False, repr=False)


@dataclass(frozen=True)
class UnitLit(Term):
    sort: Sort = field(default=UNIT, init=False, compare=False, repr=False)


@dataclass(frozen=True)
class PlaceOf(Term):
    """The rigid place constant of a program variable."""

    var: ProgVar
    sort: Sort = field(default=PLACE, init=False, compare=False, repr=False)


@dataclass(frozen=True)
class App(Term):
    sym: FuncSym
    args: tuple[Term, ...] = ()

    @property
    def sort(self) -> Sort:
        return self.sym.sort


@dataclass(frozen=True)
class IteTerm(Term):
    cond: "Formula"
    then: Term
    els: Term

    @property
    def sort(self) -> Sort:
        return term_sort(self.then)


@dataclass(frozen=True)
class TermUpd(Term):
    update: Update
    term: Term

    @property
    def sort(self) -> Sort:
        return term_sort(self.term)


def term_sort(t: Term) -> Sort:
    return t.sort


# ---------------------------------------------------------------------------
# Builtin symbol constructors
# ---------------------------------------------------------------------------

ARITH_OPS = ("+", "-", "*", "/", "%")


def arith(op: str, a: Term, b: Term) -> App:
    assert op in ARITH_OPS
    return App(FuncSym(op, (INT, INT), INT), (a, b))


def add(a: Term, b: Term) -> App:
    return arith("+", a, b)


def sub(a: Term, b: Term) -> App:
    return arith("-", a, b)


def mul(a: Term, b: Term) -> App:
    return arith("*", a, b)


def neg(a: Term) -> App:
    return App(FuncSym("neg", (INT,), INT), (a,))


def ref_shared(t: Term) -> App:
    s = term_sort(t)
    return App(FuncSym("refS", (s,), RefSort(s, False)), (t,))


def ref_mut(place: Term, inner: Sort) -> App:
    return App(FuncSym("refM", (PLACE,), RefSort(inner, True)), (place,))


def place_of(pv: ProgVar) -> PlaceOf:
    return PlaceOf(pv)


def arr_place(ref: Term, index: Term) -> App:
    rs = term_sort(ref)
    if not (isinstance(rs, RefSort) and rs.mutable and isinstance(rs.inner, ArraySort)):
        raise SortClash(f"arrplace expects a mutable array reference, got {rs}")
    return App(FuncSym("arrplace", (rs, INT), PLACE), (ref, index))


def idx(i: Term) -> App:
    return App(FuncSym("idx", (INT,), FIELD), (i,))


def arr_get(a: Term, f: Term) -> App:
    s = term_sort(a)
    if not isinstance(s, ArraySort):
        raise SortClash(f"get expects an array, got {s}")
    return App(FuncSym("get", (s, FIELD), s.elem), (a, f))


def arr_set(a: Term, f: Term, v: Term) -> App:
    s = term_sort(a)
    if not isinstance(s, ArraySort):
        raise SortClash(f"set expects an array, got {s}")
    return App(FuncSym("set", (s, FIELD, s.elem), s), (a, f, v))


def deref_shared(r: Term) -> App:
    s = term_sort(r)
    if not (isinstance(s, RefSort) and not s.mutable):
        raise SortClash(f"derefS expects a shared reference, got {s}")
    return App(FuncSym("derefS", (s,), s.inner), (r,))


def deref_mut(r: Term) -> App:
    s = term_sort(r)
    if not (isinstance(s, RefSort) and s.mutable):
        raise SortClash(f"derefM expects a mutable reference, got {s}")
    return App(FuncSym("derefM", (s,), s.inner, rigid=False), (r,))


def const(name: str, sort: Sort) -> App:
    """A (Skolem) constant: a 0-ary rigid function symbol."""
    return App(FuncSym(name, (), sort))


def is_const(t: Term) -> bool:
    return isinstance(t, App) and not t.args and t.sym.name not in _BUILTIN_NAMES


_BUILTIN_NAMES = frozenset(
    ARITH_OPS + ("neg", "refS", "refM", "arrplace", "idx", "get", "set", "derefS", "derefM")
)


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True)
class Pred(Formula):
    name: str  # "=", "<", "<=", "inRange", or uninterpreted
    args: tuple[Term, ...]
    objtype: Optional[ObjType] = None  # integer type for inRange

    def __post_init__(self) -> None:
        if self.name == "inRange" and not isinstance(self.objtype, ol.IntTy):
            raise SortClash("inRange needs an integer object type")


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: LogicVar
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: LogicVar
    body: Formula


@dataclass(frozen=True)
class Box(Formula):
    program: Program
    post: Formula


@dataclass(frozen=True)
class Dia(Formula):
    program: Program
    post: Formula


@dataclass(frozen=True)
class FormUpd(Formula):
    update: Update
    formula: Formula


def eq(a: Term, b: Term) -> Pred:
    return Pred("=", (a, b))


def lt(a: Term, b: Term) -> Pred:
    return Pred("<", (a, b))


def le(a: Term, b: Term) -> Pred:
    return Pred("<=", (a, b))


def in_range(ty: ol.IntTy, t: Term) -> Pred:
    return Pred("inRange", (t,), objtype=ty)


def conj(*fs: Formula) -> Formula:
    fs = tuple(f for f in fs if not isinstance(f, Top))
    if not fs:
        return Top()
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


# ---------------------------------------------------------------------------
# Updates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SkipUpd(Update):
    pass


@dataclass(frozen=True)
class ElemUpd(Update):
    var: ProgVar
    value: Term


@dataclass(frozen=True)
class MutUpd(Update):
    ref: Term  # sort RefMut<A>
    value: Term  # sort A


@dataclass(frozen=True)
class ParUpd(Update):
    """Flattened parallel update; later parts win on conflicts."""

    parts: tuple[Update, ...]


@dataclass(frozen=True)
class SeqUpd(Update):
    """Update applied to an update: {first} second."""

    first: Update
    second: Update


SKIP = SkipUpd()


def par(parts: Iterable[Update]) -> Update:
    flat: list[Update] = []
    for p in parts:
        if isinstance(p, ParUpd):
            flat.extend(p.parts)
        elif isinstance(p, SkipUpd):
            continue
        else:
            flat.append(p)
    if not flat:
        return SKIP
    if len(flat) == 1:
        return flat[0]
    return ParUpd(tuple(flat))


def update_parts(u: Update) -> tuple[Update, ...]:
    if isinstance(u, SkipUpd):
        return ()
    if isinstance(u, ParUpd):
        return u.parts
    return (u,)


# ---------------------------------------------------------------------------
# Sequents
# ---------------------------------------------------------------------------


def _dedup(fs: Iterable[Formula]) -> tuple[Formula, ...]:
    seen = []
    for f in fs:
        if f not in seen:
            seen.append(f)
    return tuple(seen)


@dataclass(frozen=True)
class Sequent:
    ante: tuple[Formula, ...]
    succ: tuple[Formula, ...]

    @staticmethod
    def of(ante: Iterable[Formula], succ: Iterable[Formula]) -> "Sequent":
        return Sequent(_dedup(ante), _dedup(succ))

    def __str__(self) -> str:
        return pretty_sequent(self)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class LogicError(Exception):
    pass


class SortClash(LogicError):
    pass


class InvalidPath(LogicError):
    pass


# ---------------------------------------------------------------------------
# Generic tree access
# ---------------------------------------------------------------------------

Path = tuple[int, ...]


def children(n: object) -> tuple:
    if isinstance(n, (LogicVar, ProgVar, IntLit, BoolLit, UnitLit, PlaceOf,
                      Top, Bottom, SkipUpd)):
        return ()
    if isinstance(n, App):
        return n.args
    if isinstance(n, IteTerm):
        return (n.cond, n.then, n.els)
    if isinstance(n, TermUpd):
        return (n.update, n.term)
    if isinstance(n, Pred):
        return n.args
    if isinstance(n, Not):
        return (n.operand,)
    if isinstance(n, (And, Or, Imp, Iff)):
        return (n.left, n.right)
    if isinstance(n, (Forall, Exists)):
        return (n.body,)
    if isinstance(n, (Box, Dia)):
        return (n.program, n.post)
    if isinstance(n, FormUpd):
        return (n.update, n.formula)
    if isinstance(n, ElemUpd):
        return (n.var, n.value)
    if isinstance(n, MutUpd):
        return (n.ref, n.value)
    if isinstance(n, ParUpd):
        return n.parts
    if isinstance(n, SeqUpd):
        return (n.first, n.second)
    return ()


def with_children(n: object, kids: tuple) -> object:
    if isinstance(n, App):
        return App(n.sym, tuple(kids))
    if isinstance(n, IteTerm):
        return IteTerm(kids[0], kids[1], kids[2])
    if isinstance(n, TermUpd):
        return TermUpd(kids[0], kids[1])
    if isinstance(n, Pred):
        return Pred(n.name, tuple(kids), n.objtype)
    if isinstance(n, Not):
        return Not(kids[0])
    if isinstance(n, (And, Or, Imp, Iff)):
        return type(n)(kids[0], kids[1])
    if isinstance(n, (Forall, Exists)):
        return type(n)(n.var, kids[0])
    if isinstance(n, (Box, Dia)):
        return type(n)(kids[0], kids[1])
    if isinstance(n, FormUpd):
        return FormUpd(kids[0], kids[1])
    if isinstance(n, ElemUpd):
        if not isinstance(kids[0], ProgVar):
            raise SortClash("elementary update target must be a program variable")
        return ElemUpd(kids[0], kids[1])
    if isinstance(n, MutUpd):
        return MutUpd(kids[0], kids[1])
    if isinstance(n, ParUpd):
        return ParUpd(tuple(kids))
    if isinstance(n, SeqUpd):
        return SeqUpd(kids[0], kids[1])
    if not kids:
        return n
    raise InvalidPath(f"node {type(n).__name__} has no children")


def subterm_at(n: object, path: Path) -> object:
    cur = n
    for i in path:
        kids = children(cur)
        if not (0 <= i < len(kids)):
            raise InvalidPath(f"index {i} out of range at {type(cur).__name__}")
        cur = kids[i]
    return cur


def replace_at(n: object, path: Path, new: object) -> object:
    if not path:
        return new
    kids = children(n)
    i = path[0]
    if not (0 <= i < len(kids)):
        raise InvalidPath(f"index {i} out of range at {type(n).__name__}")
    kids = list(kids)
    kids[i] = replace_at(kids[i], path[1:], new)
    out = with_children(n, tuple(kids))
    errs = wellformed(out) if isinstance(out, Node) else []
    if errs:
        raise SortClash("; ".join(errs))
    return out


def walk(n: object):
    yield n
    for c in children(n):
        if isinstance(c, Node):
            yield from walk(c)


# ---------------------------------------------------------------------------
# Well-sortedness
# ---------------------------------------------------------------------------

_CMP_PREDS = ("<", "<=", ">", ">=")


def wellformed(n: object) -> list[str]:
    """Collect sort errors; an empty list means the tree is well-sorted."""
    errors: list[str] = []
    _check(n, (), errors)
    return errors


def _err(errors: list[str], path: Path, msg: str) -> None:
    errors.append(f"at {list(path)}: {msg}")


def _check(n: object, path: Path, errors: list[str]) -> None:
    if isinstance(n, App):
        if len(n.args) != len(n.sym.arg_sorts):
            _err(errors, path, f"{n.sym.name} expects {len(n.sym.arg_sorts)} args")
        for i, (a, s) in enumerate(zip(n.args, n.sym.arg_sorts)):
            if not subsort(term_sort(a), s):
                _err(errors, path + (i,), f"{n.sym.name} arg {i}: {term_sort(a)} vs {s}")
    elif isinstance(n, IteTerm):
        if term_sort(n.then) != term_sort(n.els):
            _err(errors, path, "ite branches disagree in sort")
    elif isinstance(n, Pred):
        if n.name == "=":
            if len(n.args) != 2:
                _err(errors, path, "equality is binary")
        elif n.name in _CMP_PREDS:
            for i, a in enumerate(n.args):
                if not subsort(term_sort(a), INT):
                    _err(errors, path + (i,), f"{n.name} arg {i} not int")
        elif n.name == "inRange":
            if len(n.args) != 1 or not subsort(term_sort(n.args[0]), INT):
                _err(errors, path, "inRange takes one integer term")
    elif isinstance(n, ElemUpd):
        if not subsort(term_sort(n.value), n.var.sort):
            _err(errors, path, f"update {n.var.name}: {term_sort(n.value)} vs {n.var.sort}")
    elif isinstance(n, MutUpd):
        rs = term_sort(n.ref)
        if not (isinstance(rs, RefSort) and rs.mutable):
            _err(errors, path, f"mutating update lhs must be RefMut, got {rs}")
        elif not subsort(term_sort(n.value), rs.inner):
            _err(errors, path, f"mutating update rhs {term_sort(n.value)} vs {rs.inner}")
    elif isinstance(n, (Forall, Exists)):
        pass  # quantification over logic variables only, by construction
    for i, c in enumerate(children(n)):
        if isinstance(c, Node):
            _check(c, path + (i,), errors)


# ---------------------------------------------------------------------------
# Variable collection, freshness, substitution
# ---------------------------------------------------------------------------


def prog_vars(n: object) -> set[ProgVar]:
    """All program variables occurring in n, update targets included.

    Variables mentioned only inside modality programs are reported through
    `prog_var_names`; this function collects typed occurrences in logic trees.
    """
    out: set[ProgVar] = set()
    for m in walk(n):
        if isinstance(m, ProgVar):
            out.add(m)
        elif isinstance(m, PlaceOf):
            out.add(m.var)
    return out


def prog_var_names(n: object) -> set[str]:
    """Names of all program variables occurring in n, modality programs included."""
    out: set[str] = set()
    for m in walk(n):
        if isinstance(m, ProgVar):
            out.add(m.name)
        elif isinstance(m, PlaceOf):
            out.add(m.var.name)
        elif isinstance(m, (Box, Dia)):
            out.update(program_var_names(m.program))
    return out


def program_var_names(p: Program) -> set[str]:
    out: set[str] = set()

    def expr(e: ol.Expr) -> None:
        if isinstance(e, ol.Var):
            out.add(e.name)
        elif isinstance(e, ol.LoopScopeExpr):
            out.add(e.index_var)
            block(e.body)
        elif isinstance(e, (ol.IfExpr,)):
            expr(e.cond)
            block(e.then)
            if e.els:
                block(e.els)
        elif isinstance(e, (ol.LoopExpr, ol.WhileExpr)):
            if isinstance(e, ol.WhileExpr):
                expr(e.cond)
            # the invariant annotation reads variables too: dropping an
            # update that only it mentions would change the loop rule's premises
            if isinstance(e.spec, ol.LoopSpec) and isinstance(e.spec.invariant, Formula):
                out.update(prog_var_names(e.spec.invariant))
            block(e.body)
        elif isinstance(e, ol.BlockExpr):
            block(e.block)
        else:
            for name in ("left", "right", "operand", "place", "base", "index", "value"):
                sub = getattr(e, name, None)
                if isinstance(sub, ol.Expr):
                    expr(sub)
            if isinstance(e, ol.CallExpr):
                for a in e.args:
                    expr(a)

    def block(b: ol.Block) -> None:
        for s in b.stmts:
            stmt(s)
        if b.value is not None:
            expr(b.value)

    def stmt(s: ol.Stmt) -> None:
        if isinstance(s, ol.LetStmt):
            out.add(s.name)
            expr(s.init)
        elif isinstance(s, (ol.AssignStmt, ol.OpAssignStmt)):
            expr(s.lvalue)
            expr(s.value)
        elif isinstance(s, ol.ExprStmt):
            expr(s.expr)

    for s in p:
        stmt(s)
    return out


def free_logic_vars(n: object) -> set[LogicVar]:
    out: set[LogicVar] = set()

    def go(m: object, bound: frozenset[LogicVar]) -> None:
        if isinstance(m, LogicVar):
            if m not in bound:
                out.add(m)
            return
        if isinstance(m, (Forall, Exists)):
            go(m.body, bound | {m.var})
            return
        for c in children(m):
            if isinstance(c, Node):
                go(c, bound)

    go(n, frozenset())
    return out


def symbol_names(n: object) -> set[str]:
    """All symbol names (constants, variables) used in a tree."""
    out: set[str] = set()
    for m in walk(n):
        if isinstance(m, (LogicVar, ProgVar)):
            out.add(m.name)
        elif isinstance(m, App):
            out.add(m.sym.name)
        elif isinstance(m, PlaceOf):
            out.add(m.var.name)
        elif isinstance(m, (Box, Dia)):
            out.update(program_var_names(m.program))
    return out


def fresh_name(base: str, taken: set[str]) -> str:
    """Deterministic fresh symbol: base_0, base_1, ..."""
    i = 0
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def subst_logic_var(n: object, var: LogicVar, value: Term) -> object:
    if isinstance(n, LogicVar):
        return value if n == var else n
    if isinstance(n, (Forall, Exists)) and n.var == var:
        return n
    kids = children(n)
    if not kids:
        return n
    new = tuple(subst_logic_var(c, var, value) if isinstance(c, Node) else c for c in kids)
    return with_children(n, new)


def subst_prog_vars(n: object, mapping: dict[ProgVar, Term]) -> object:
    if isinstance(n, ProgVar):
        return mapping.get(n, n)
    if isinstance(n, PlaceOf):
        repl = mapping.get(n.var)
        if repl is None:
            return n
        if not isinstance(repl, ProgVar):
            raise SortClash("cannot substitute a non-variable under place()")
        return PlaceOf(repl)
    if isinstance(n, ElemUpd):
        tgt = mapping.get(n.var, n.var)
        if not isinstance(tgt, ProgVar):
            raise SortClash("update target must stay a program variable")
        return ElemUpd(tgt, subst_prog_vars(n.value, mapping))
    kids = children(n)
    if not kids:
        return n
    new = tuple(subst_prog_vars(c, mapping) if isinstance(c, Node) else c for c in kids)
    return with_children(n, new)


# ---------------------------------------------------------------------------
# Read sets (conservative, for dropping ineffective updates)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReadSet:
    names: frozenset[str]
    exact: bool  # False: may read arbitrary variables

    def __or__(self, other: "ReadSet") -> "ReadSet":
        return ReadSet(self.names | other.names, self.exact and other.exact)


EMPTY_READS = ReadSet(frozenset(), True)
OPAQUE_READS = ReadSet(frozenset(), False)


def reads_of(n: object) -> ReadSet:
    if isinstance(n, ProgVar):
        return ReadSet(frozenset([n.name]), True)
    if isinstance(n, PlaceOf):
        return EMPTY_READS  # place constants are rigid
    if isinstance(n, App) and n.sym.name == "derefM":
        arg = n.args[0]
        inner = reads_of(arg)
        # Reading through a mutable reference touches the lender, which is
        # only known syntactically for refM(place(x)).
        if isinstance(arg, App) and arg.sym.name == "refM" and isinstance(arg.args[0], PlaceOf):
            return inner | ReadSet(frozenset([arg.args[0].var.name]), True)
        return inner | OPAQUE_READS
    if isinstance(n, (Box, Dia)):
        return ReadSet(frozenset(program_var_names(n.program)), True) | reads_of(n.post)
    if isinstance(n, ElemUpd):
        return reads_of(n.value)
    if isinstance(n, (TermUpd, FormUpd)):
        u, t = children(n)
        inner = reads_of(t)
        targets = frozenset(e.var.name for e in update_parts(u) if isinstance(e, ElemUpd))
        return reads_of(u) | ReadSet(inner.names | targets, inner.exact)
    out = EMPTY_READS
    for c in children(n):
        if isinstance(c, Node):
            out = out | reads_of(c)
    return out


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------

_PREC = {"|": 1, "&": 2, "not": 3}


def pretty(n: object) -> str:
    if isinstance(n, LogicVar):
        return n.name
    if isinstance(n, ProgVar):
        return n.name
    if isinstance(n, IntLit):
        return str(n.value)
    if isinstance(n, BoolLit):
        return "TRUE" if n.value else "FALSE"
    if isinstance(n, UnitLit):
        return "unit"
    if isinstance(n, PlaceOf):
        return f"place({n.var.name})"
    if isinstance(n, App):
        name = n.sym.name
        if name in ARITH_OPS and len(n.args) == 2:
            return f"{_p_atom(n.args[0])} {name} {_p_atom(n.args[1])}"
        if name == "neg":
            return f"-{_p_atom(n.args[0])}"
        if name == "get" and isinstance(n.args[1], App) and n.args[1].sym.name == "idx":
            return f"{_p_atom(n.args[0])}[{pretty(n.args[1].args[0])}]"
        if not n.args:
            return name
        return f"{name}({', '.join(pretty(a) for a in n.args)})"
    if isinstance(n, IteTerm):
        return f"ite({pretty(n.cond)}, {pretty(n.then)}, {pretty(n.els)})"
    if isinstance(n, TermUpd):
        return f"{pretty_update_braced(n.update)}{_p_atom(n.term)}"
    if isinstance(n, Top):
        return "true"
    if isinstance(n, Bottom):
        return "false"
    if isinstance(n, Pred):
        if n.name == "inRange":
            return f"inRange_{n.objtype}({pretty(n.args[0])})"
        if n.name in ("=", "<", "<=", ">", ">=") and len(n.args) == 2:
            return f"{pretty(n.args[0])} {n.name} {pretty(n.args[1])}"
        return f"{n.name}({', '.join(pretty(a) for a in n.args)})"
    if isinstance(n, Not):
        return f"!{_p_f_atom(n.operand)}"
    if isinstance(n, And):
        return f"{_p_f_atom(n.left)} & {_p_f_atom(n.right)}"
    if isinstance(n, Or):
        return f"{_p_f_atom(n.left)} | {_p_f_atom(n.right)}"
    if isinstance(n, Imp):
        return f"{_p_f_atom(n.left)} -> {_p_f_atom(n.right)}"
    if isinstance(n, Iff):
        return f"{_p_f_atom(n.left)} <-> {_p_f_atom(n.right)}"
    if isinstance(n, Forall):
        return f"forall {n.var.name}:{n.var.sort}. {_p_f_atom(n.body)}"
    if isinstance(n, Exists):
        return f"exists {n.var.name}:{n.var.sort}. {_p_f_atom(n.body)}"
    if isinstance(n, Box):
        return f"[{ol.program_to_str(n.program, pretty)}] {_p_f_atom(n.post)}"
    if isinstance(n, Dia):
        return f"<{ol.program_to_str(n.program, pretty)}> {_p_f_atom(n.post)}"
    if isinstance(n, FormUpd):
        return f"{pretty_update_braced(n.update)}{_p_f_atom(n.formula)}"
    if isinstance(n, (SkipUpd, ElemUpd, MutUpd, ParUpd, SeqUpd)):
        return pretty_update(n)
    if isinstance(n, Sequent):
        return pretty_sequent(n)
    return str(n)


def _p_atom(t: Term) -> str:
    s = pretty(t)
    if isinstance(t, App) and t.sym.name in ARITH_OPS:
        return f"({s})"
    if isinstance(t, TermUpd):
        return f"({s})"
    return s


def _p_f_atom(f: Formula) -> str:
    s = pretty(f)
    if isinstance(f, (And, Or, Imp, Iff, Forall, Exists)):
        return f"({s})"
    return s


def pretty_update(u: Update) -> str:
    if isinstance(u, SkipUpd):
        return "skip"
    if isinstance(u, ElemUpd):
        return f"{u.var.name} := {pretty(u.value)}"
    if isinstance(u, MutUpd):
        return f"{pretty(u.ref)} :=* {pretty(u.value)}"
    if isinstance(u, ParUpd):
        return " || ".join(pretty_update(p) for p in u.parts)
    if isinstance(u, SeqUpd):
        return f"{pretty_update_braced(u.first)}({pretty_update(u.second)})"
    raise TypeError(f"unknown update {u!r}")


def pretty_update_braced(u: Update) -> str:
    return "{" + pretty_update(u) + "}"


def pretty_sequent(s: Sequent) -> str:
    left = ", ".join(pretty(f) for f in s.ante)
    right = ", ".join(pretty(f) for f in s.succ)
    return f"{left} |- {right}" if left else f"|- {right}"


# ---------------------------------------------------------------------------
# JSON trees (for the UI)
# ---------------------------------------------------------------------------


def to_json(n: object) -> dict:
    kind = type(n).__name__
    out: dict = {"kind": kind, "text": pretty(n) if isinstance(n, Node) else str(n)}
    if isinstance(n, Term):
        out["sort"] = str(term_sort(n))
    if isinstance(n, (LogicVar, ProgVar)):
        out["name"] = n.name
    elif isinstance(n, (IntLit, BoolLit)):
        out["value"] = n.value
    elif isinstance(n, App):
        out["symbol"] = n.sym.name
    elif isinstance(n, Pred):
        out["symbol"] = n.name if n.name != "inRange" else f"inRange_{n.objtype}"
    elif isinstance(n, PlaceOf):
        out["name"] = n.var.name
    elif isinstance(n, (Forall, Exists)):
        out["binder"] = n.var.name
    elif isinstance(n, (Box, Dia)):
        out["program"] = ol.program_to_str(n.program, pretty)
    kids = []
    for c in children(n):
        if isinstance(c, Node):
            kids.append(to_json(c))
        elif isinstance(c, tuple):  # a program child
            kids.append({"kind": "Program", "text": ol.program_to_str(c, pretty)})
    if kids:
        out["children"] = kids
    return out


def sequent_to_json(s: Sequent) -> dict:
    return {
        "ante": [to_json(f) for f in s.ante],
        "succ": [to_json(f) for f in s.succ],
        "text": pretty_sequent(s),
    }
