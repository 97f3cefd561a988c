"""Executable semantics: a concrete interpreter for normalized programs, a
ground evaluator for terms/formulas/updates, and a counterexample search.

The interpreter implements debug semantics: checked arithmetic panics on
overflow, array accesses are bounds-checked, non-copy values are moved on
assignment. Shared references snapshot the borrowed value; mutable references
hold the borrowed place and writes go through it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from . import logic as lg
from . import objlang as ol
from .objlang import Block, Expr, IntTy, ObjType, Program, Stmt


class InterpError(Exception):
    """Ill-typed or unbound input; unreachable on typechecked programs."""


class EvalUndefined(Exception):
    """Ground evaluation hit a partial operation (bad index, missing const)."""


class UnboundedQuantifier(EvalUndefined):
    pass


class DomainTooLarge(Exception):
    pass


# ---------------------------------------------------------------------------
# Values and places
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarPlace:
    name: str


@dataclass(frozen=True)
class IdxPlace:
    base: "PlaceV"
    index: int


PlaceV = VarPlace | IdxPlace


class Value:
    pass


class IntV(Value):
    """Integer value; the type tag drives overflow checks but is ignored by
    equality so that unbounded logic integers compare against program ones."""

    __slots__ = ("value", "ty")

    def __init__(self, value: int, ty: Optional[IntTy] = None) -> None:
        self.value = value
        self.ty = ty

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IntV) and self.value == other.value

    def __hash__(self) -> int:
        return hash(("IntV", self.value))

    def __repr__(self) -> str:
        return f"IntV({self.value})"


@dataclass(frozen=True)
class BoolV(Value):
    value: bool


@dataclass(frozen=True)
class UnitV(Value):
    pass


@dataclass(frozen=True)
class ArrayV(Value):
    items: tuple[Value, ...]


@dataclass(frozen=True)
class RefSV(Value):
    """Shared reference: an immutable snapshot of the borrowed value."""

    snapshot: Value


@dataclass(frozen=True)
class RefMV(Value):
    """Mutable reference: the borrowed place. `env` pins the owning call
    frame during interpretation; it is None for logic-level references."""

    place: PlaceV
    env: Optional[dict] = field(default=None, compare=False, repr=False)


UNIT = UnitV()


def value_of(ty: ObjType, raw: object) -> Value:
    """Build a Value of the given type from plain Python data."""
    if isinstance(ty, ol.BoolTy):
        return BoolV(bool(raw))
    if isinstance(ty, ol.UnitTy):
        return UNIT
    if isinstance(ty, IntTy):
        v = int(raw)
        if not ty.min <= v <= ty.max:
            raise InterpError(f"{v} out of range for {ty}")
        return IntV(v, ty)
    if isinstance(ty, ol.ArrayTy):
        items = tuple(value_of(ty.elem, x) for x in raw)
        if len(items) != ty.length:
            raise InterpError(f"array literal length {len(items)} != {ty.length}")
        return ArrayV(items)
    raise InterpError(f"cannot build a {ty} from {raw!r}")


def default_value(ty: ObjType) -> Value:
    if isinstance(ty, ol.BoolTy):
        return BoolV(False)
    if isinstance(ty, ol.UnitTy):
        return UNIT
    if isinstance(ty, IntTy):
        return IntV(0, ty)
    if isinstance(ty, ol.ArrayTy):
        return ArrayV(tuple(default_value(ty.elem) for _ in range(ty.length)))
    raise InterpError(f"no default for {ty}")


# ---------------------------------------------------------------------------
# States and outcomes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcreteState:
    """Variable store plus an interpretation for Skolem constants."""

    vars: dict[str, Value]
    consts: dict[str, Value] = field(default_factory=dict)

    def get(self, name: str) -> Value:
        try:
            return self.vars[name]
        except KeyError:
            raise InterpError(f"unbound variable {name}") from None

    def with_var(self, name: str, v: Value) -> "ConcreteState":
        out = dict(self.vars)
        out[name] = v
        return ConcreteState(out, self.consts)


class Outcome:
    pass


@dataclass(frozen=True)
class Normal(Outcome):
    state: ConcreteState
    result: Value


@dataclass(frozen=True)
class Panic(Outcome):
    reason: str  # overflow | div-zero | index-oob | explicit
    state: Optional[ConcreteState] = None


@dataclass(frozen=True)
class FuelExhausted(Outcome):
    state: Optional[ConcreteState] = None


class _PanicSignal(Exception):
    def __init__(self, reason: str) -> None:
        self.reason = reason


class _BreakSignal(Exception):
    def __init__(self, value: Value) -> None:
        self.value = value


class _ContinueSignal(Exception):
    pass


class _FuelSignal(Exception):
    pass


# ---------------------------------------------------------------------------
# Interpreter
# ---------------------------------------------------------------------------


def _trunc_div(a: int, d: int) -> int:
    q = abs(a) // abs(d)
    return q if (a >= 0) == (d >= 0) else -q


class _Interp:
    def __init__(self, fuel: int, overflow: str, fns: Optional[dict] = None) -> None:
        self.fuel = fuel
        self.overflow = overflow
        self.fns = fns or {}

    def burn(self) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise _FuelSignal()

    # -- arithmetic ---------------------------------------------------------

    def arith(self, op: str, a: Value, b: Value) -> Value:
        if isinstance(a, BoolV) and isinstance(b, BoolV):
            if op == "==":
                return BoolV(a.value == b.value)
            if op == "!=":
                return BoolV(a.value != b.value)
            raise InterpError(f"bad bool op {op}")
        if not (isinstance(a, IntV) and isinstance(b, IntV)):
            if op == "==":
                return BoolV(a == b)
            if op == "!=":
                return BoolV(a != b)
            raise InterpError(f"operator {op} on non-numeric values")
        x, y = a.value, b.value
        if op == "==":
            return BoolV(x == y)
        if op == "!=":
            return BoolV(x != y)
        if op == "<":
            return BoolV(x < y)
        if op == "<=":
            return BoolV(x <= y)
        if op == ">":
            return BoolV(x > y)
        if op == ">=":
            return BoolV(x >= y)
        ty = a.ty or b.ty
        if op in ("/", "%") and y == 0:
            if self.overflow == "check":
                raise _PanicSignal("div-zero")
            return IntV(0, ty)  # idealized total division in ignore mode
        if op == "+":
            r = x + y
        elif op == "-":
            r = x - y
        elif op == "*":
            r = x * y
        elif op == "/":
            r = _trunc_div(x, y)
        elif op == "%":
            r = x - y * _trunc_div(x, y)
        else:
            raise InterpError(f"unknown operator {op}")
        if self.overflow == "check" and ty is not None and not ty.min <= r <= ty.max:
            raise _PanicSignal("overflow")
        return IntV(r, ty)

    # -- places -------------------------------------------------------------

    def read_place(self, env: dict, place: PlaceV) -> Value:
        if isinstance(place, VarPlace):
            if place.name not in env:
                raise InterpError(f"unbound place {place.name}")
            return env[place.name]
        base = self.read_place(env, place.base)
        if not isinstance(base, ArrayV):
            raise InterpError("indexed place into a non-array")
        if not 0 <= place.index < len(base.items):
            raise _PanicSignal("index-oob")
        return base.items[place.index]

    def write_place(self, env: dict, place: PlaceV, v: Value) -> None:
        if isinstance(place, VarPlace):
            env[place.name] = v
            return
        base = self.read_place(env, place.base)
        if not isinstance(base, ArrayV):
            raise InterpError("indexed place into a non-array")
        if not 0 <= place.index < len(base.items):
            raise _PanicSignal("index-oob")
        items = list(base.items)
        items[place.index] = v
        self.write_place(env, place.base, ArrayV(tuple(items)))

    # -- expressions --------------------------------------------------------

    def read_var(self, env: dict, moved: set, name: str) -> Value:
        if name in moved:
            raise InterpError(f"read of moved-from variable {name}")
        if name not in env:
            raise InterpError(f"unbound variable {name}")
        return env[name]

    def is_copy_value(self, v: Value) -> bool:
        if isinstance(v, RefMV):
            return False
        if isinstance(v, ArrayV):
            return all(self.is_copy_value(x) for x in v.items)
        return True

    def consume(self, env: dict, moved: set, e: Expr) -> Value:
        """Evaluate in value position, marking moved-from sources."""
        v = self.eval(env, moved, e)
        if isinstance(e, ol.Var) and not self.is_copy_value(v):
            moved.add(e.name)
        return v

    def place_of(self, env: dict, moved: set, e: Expr) -> tuple[PlaceV, dict]:
        """The place an lvalue or borrow target denotes, with its owning env."""
        if isinstance(e, ol.Var):
            return VarPlace(e.name), env
        if isinstance(e, ol.Deref):
            r = self.eval(env, moved, e.operand)
            if not isinstance(r, RefMV):
                raise InterpError("deref-write through a non-mutable reference")
            return r.place, (r.env if r.env is not None else env)
        if isinstance(e, ol.Index):
            base_place, base_env = self.place_of(env, moved, e.base)
            i = self.eval(env, moved, e.index)
            if not isinstance(i, IntV):
                raise InterpError("non-integer index")
            return IdxPlace(base_place, i.value), base_env
        raise InterpError(f"not a place expression: {e!r}")

    def eval(self, env: dict, moved: set, e: Expr) -> Value:
        self.burn()
        if isinstance(e, ol.Lit):
            if e.value is None:
                return UNIT
            if isinstance(e.value, bool):
                return BoolV(e.value)
            ty = e.ty if isinstance(e.ty, IntTy) else None
            return IntV(int(e.value), ty)
        if isinstance(e, ol.Var):
            return self.read_var(env, moved, e.name)
        if isinstance(e, ol.BinOp):
            if e.op in ("&&", "||"):
                a = self.eval(env, moved, e.left)
                if not isinstance(a, BoolV):
                    raise InterpError("boolean operator on non-bool")
                if e.op == "&&" and not a.value:
                    return BoolV(False)
                if e.op == "||" and a.value:
                    return BoolV(True)
                return self.eval(env, moved, e.right)
            return self.arith(e.op, self.eval(env, moved, e.left),
                              self.eval(env, moved, e.right))
        if isinstance(e, ol.UnOp):
            v = self.eval(env, moved, e.operand)
            if e.op == "!":
                if not isinstance(v, BoolV):
                    raise InterpError("! on non-bool")
                return BoolV(not v.value)
            if e.op == "-":
                if not isinstance(v, IntV):
                    raise InterpError("- on non-int")
                r = -v.value
                if (self.overflow == "check" and v.ty is not None
                        and not v.ty.min <= r <= v.ty.max):
                    raise _PanicSignal("overflow")
                return IntV(r, v.ty)
            raise InterpError(f"unknown unary {e.op}")
        if isinstance(e, ol.Borrow):
            if e.mutable:
                place, penv = self.place_of(env, moved, e.place)
                if isinstance(place, IdxPlace):
                    # materialize the bounds check a borrow performs
                    self.read_place(penv, place)
                return RefMV(place, penv)
            return RefSV(self.eval(env, moved, e.place))
        if isinstance(e, ol.Deref):
            r = self.eval(env, moved, e.operand)
            if isinstance(r, RefSV):
                return r.snapshot
            if isinstance(r, RefMV):
                return self.read_place(r.env if r.env is not None else env, r.place)
            raise InterpError("deref of a non-reference")
        if isinstance(e, ol.Index):
            base = self.eval(env, moved, e.base)
            if isinstance(base, RefSV):
                base = base.snapshot
            elif isinstance(base, RefMV):
                base = self.read_place(base.env if base.env is not None else env,
                                       base.place)
            if not isinstance(base, ArrayV):
                raise InterpError("index into a non-array")
            i = self.eval(env, moved, e.index)
            if not isinstance(i, IntV):
                raise InterpError("non-integer index")
            if not 0 <= i.value < len(base.items):
                raise _PanicSignal("index-oob")
            return base.items[i.value]
        if isinstance(e, ol.IfExpr):
            c = self.eval(env, moved, e.cond)
            if not isinstance(c, BoolV):
                raise InterpError("if condition is not bool")
            branch = e.then if c.value else (e.els or Block((), None))
            return self.run_block(env, moved, branch)
        if isinstance(e, ol.LoopExpr):
            while True:
                self.burn()
                try:
                    self.run_block(env, moved, e.body)
                except _BreakSignal as br:
                    return br.value
                except _ContinueSignal:
                    continue
        if isinstance(e, ol.BreakExpr):
            v = UNIT if e.value is None else self.consume(env, moved, e.value)
            raise _BreakSignal(v)
        if isinstance(e, ol.ContinueExpr):
            raise _ContinueSignal()
        if isinstance(e, ol.PanicExpr):
            raise _PanicSignal("explicit")
        if isinstance(e, ol.BlockExpr):
            return self.run_block(env, moved, e.block)
        if isinstance(e, ol.CallExpr):
            return self.call(env, moved, e)
        if isinstance(e, ol.LoopScopeExpr):
            # single-iteration wrapper used in calculus-generated programs
            try:
                v = self.run_block(env, moved, e.body)
            except _BreakSignal as br:
                env[e.index_var] = BoolV(True)
                return br.value
            except _ContinueSignal:
                env[e.index_var] = BoolV(False)
                return UNIT
            return v
        raise InterpError(f"cannot evaluate {type(e).__name__}")

    def call(self, env: dict, moved: set, e: ol.CallExpr) -> Value:
        fn = self.fns.get(e.name)
        if fn is None:
            raise InterpError(f"unknown function {e.name}")
        args = [self.consume(env, moved, a) for a in e.args]
        callee_env: dict = {name: v for (name, _ty), v in zip(fn.params, args)}
        callee_moved: set = set()
        return self.run_block(callee_env, callee_moved, fn.body)

    # -- statements ---------------------------------------------------------

    def run_block(self, env: dict, moved: set, b: Block) -> Value:
        for s in b.stmts:
            self.run_stmt(env, moved, s)
        if b.value is None:
            return UNIT
        return self.consume(env, moved, b.value)

    def run_stmt(self, env: dict, moved: set, s: Stmt) -> None:
        self.burn()
        if isinstance(s, ol.LetStmt):
            v = self.consume(env, moved, s.init)
            env[s.name] = v
            moved.discard(s.name)
            return
        if isinstance(s, ol.AssignStmt):
            v = self.consume(env, moved, s.value)
            place, penv = self.place_of(env, moved, s.lvalue)
            self.write_place(penv, place, v)
            if isinstance(place, VarPlace):
                moved.discard(place.name)
            return
        if isinstance(s, ol.ExprStmt):
            self.eval(env, moved, s.expr)
            return
        raise InterpError(f"cannot execute {type(s).__name__}")


def exec(p: Program, s: ConcreteState, fuel: int = 10**6,
         overflow: str = "check", fns: Optional[dict] = None) -> Outcome:
    """Run a normalized statement list from a concrete state."""
    it = _Interp(fuel, overflow, fns)
    env = dict(s.vars)
    moved: set = set()
    try:
        for stmt in p:
            it.run_stmt(env, moved, stmt)
    except _PanicSignal as px:
        return Panic(px.reason, ConcreteState(env, s.consts))
    except _FuelSignal:
        return FuelExhausted(ConcreteState(env, s.consts))
    except (_BreakSignal, _ContinueSignal):
        raise InterpError("break/continue outside a loop")
    return Normal(ConcreteState(env, s.consts), UNIT)


def exec_block(b: Block, s: ConcreteState, fuel: int = 10**6,
               overflow: str = "check", fns: Optional[dict] = None) -> Outcome:
    """Run a block and report its value (used for whole function bodies)."""
    it = _Interp(fuel, overflow, fns)
    env = dict(s.vars)
    try:
        v = it.run_block(env, set(), b)
    except _PanicSignal as px:
        return Panic(px.reason, ConcreteState(env, s.consts))
    except _FuelSignal:
        return FuelExhausted(ConcreteState(env, s.consts))
    return Normal(ConcreteState(env, s.consts), v)


# ---------------------------------------------------------------------------
# Ground evaluation of logic trees
# ---------------------------------------------------------------------------

DEFAULT_BOUNDS = (-8, 8)


def _as_int(v: Value) -> int:
    if not isinstance(v, IntV):
        raise EvalUndefined(f"expected an integer, got {v!r}")
    return v.value


def eval_term(t: lg.Term, s: ConcreteState,
              bounds: tuple[int, int] = DEFAULT_BOUNDS,
              assign: Optional[dict[lg.LogicVar, Value]] = None,
              fuel: int = 10**6, overflow: str = "check") -> Value:
    return _Eval(s, bounds, assign or {}, fuel, overflow).term(t)


def eval_formula(f: lg.Formula, s: ConcreteState,
                 bounds: tuple[int, int] = DEFAULT_BOUNDS,
                 assign: Optional[dict[lg.LogicVar, Value]] = None,
                 fuel: int = 10**6, overflow: str = "check") -> bool:
    return _Eval(s, bounds, assign or {}, fuel, overflow).formula(f)


def apply_update(u: lg.Update, s: ConcreteState,
                 bounds: tuple[int, int] = DEFAULT_BOUNDS,
                 fuel: int = 10**6, overflow: str = "check") -> ConcreteState:
    return _Eval(s, bounds, {}, fuel, overflow).apply(u, s)


def eval_ground(n: object, s: ConcreteState,
                bounds: tuple[int, int] = DEFAULT_BOUNDS,
                fuel: int = 10**6, overflow: str = "check"):
    """Dispatch on the node kind: Value for terms, bool for formulas, and a
    successor ConcreteState for updates."""
    ev = _Eval(s, bounds, {}, fuel, overflow)
    if isinstance(n, lg.Update):
        return ev.apply(n, s)
    if isinstance(n, lg.Formula):
        return ev.formula(n)
    if isinstance(n, lg.Term):
        return ev.term(n)
    raise TypeError(f"cannot evaluate {type(n).__name__}")


class _Eval:
    def __init__(self, s: ConcreteState, bounds: tuple[int, int],
                 assign: dict[lg.LogicVar, Value], fuel: int, overflow: str) -> None:
        self.s = s
        self.bounds = bounds
        self.assign = dict(assign)
        self.fuel = fuel
        self.overflow = overflow

    def in_state(self, s: ConcreteState) -> "_Eval":
        return _Eval(s, self.bounds, self.assign, self.fuel, self.overflow)

    # -- terms --------------------------------------------------------------

    def term(self, t: lg.Term, s: Optional[ConcreteState] = None) -> Value:
        if s is None:
            s = self.s
        if isinstance(t, lg.IntLit):
            return IntV(t.value)
        if isinstance(t, lg.BoolLit):
            return BoolV(t.value)
        if isinstance(t, lg.UnitLit):
            return UNIT
        if isinstance(t, lg.LogicVar):
            if t in self.assign:
                return self.assign[t]
            raise EvalUndefined(f"free logic variable {t.name}")
        if isinstance(t, lg.ProgVar):
            return s.get(t.name)
        if isinstance(t, lg.PlaceOf):
            return RefMV(VarPlace(t.var.name))  # place constants only occur
            # under refM; represented by the reference value itself
        if isinstance(t, lg.IteTerm):
            return self.term(t.then, s) if self.in_state(s).formula(t.cond) \
                else self.term(t.els, s)
        if isinstance(t, lg.TermUpd):
            return self.term(t.term, self.apply(t.update, s))
        if isinstance(t, lg.App):
            return self.app(t, s)
        raise EvalUndefined(f"cannot evaluate term {type(t).__name__}")

    def app(self, t: lg.App, s: ConcreteState) -> Value:
        name = t.sym.name
        if name in lg.ARITH_OPS:
            x = _as_int(self.term(t.args[0], s))
            y = _as_int(self.term(t.args[1], s))
            if name == "+":
                return IntV(x + y)
            if name == "-":
                return IntV(x - y)
            if name == "*":
                return IntV(x * y)
            if y == 0:
                return IntV(0)  # total division convention, matches simplify
            if name == "/":
                return IntV(_trunc_div(x, y))
            return IntV(x - y * _trunc_div(x, y))
        if name == "neg":
            return IntV(-_as_int(self.term(t.args[0], s)))
        if name == "refS":
            return RefSV(self.term(t.args[0], s))
        if name == "refM":
            inner = self.term(t.args[0], s)
            if not isinstance(inner, RefMV):
                raise EvalUndefined("refM of a non-place")
            return inner
        if name == "arrplace":
            r = self.term(t.args[0], s)
            if not isinstance(r, RefMV):
                raise EvalUndefined("arrplace of a non-reference")
            i = _as_int(self.term(t.args[1], s))
            return RefMV(IdxPlace(r.place, i))
        if name == "idx":
            return IntV(_as_int(self.term(t.args[0], s)))
        if name == "get":
            a = self.term(t.args[0], s)
            i = _as_int(self.term(t.args[1], s))
            if not isinstance(a, ArrayV):
                raise EvalUndefined("get on a non-array")
            if not 0 <= i < len(a.items):
                raise EvalUndefined("array read out of bounds")
            return a.items[i]
        if name == "set":
            a = self.term(t.args[0], s)
            i = _as_int(self.term(t.args[1], s))
            v = self.term(t.args[2], s)
            if not isinstance(a, ArrayV):
                raise EvalUndefined("set on a non-array")
            if not 0 <= i < len(a.items):
                raise EvalUndefined("array write out of bounds")
            items = list(a.items)
            items[i] = v
            return ArrayV(tuple(items))
        if name == "derefS":
            r = self.term(t.args[0], s)
            if not isinstance(r, RefSV):
                raise EvalUndefined("derefS of a non-shared reference")
            return r.snapshot
        if name == "derefM":
            r = self.term(t.args[0], s)
            if not isinstance(r, RefMV):
                raise EvalUndefined("derefM of a non-mutable reference")
            return self.read_place(s, r.place)
        if not t.args:  # Skolem constant
            if name in s.consts:
                return s.consts[name]
            raise EvalUndefined(f"uninterpreted constant {name}")
        raise EvalUndefined(f"uninterpreted function {name}")

    def read_place(self, s: ConcreteState, place: PlaceV) -> Value:
        if isinstance(place, VarPlace):
            return s.get(place.name)
        base = self.read_place(s, place.base)
        if not isinstance(base, ArrayV):
            raise EvalUndefined("indexed place into a non-array")
        if not 0 <= place.index < len(base.items):
            raise EvalUndefined("place index out of bounds")
        return base.items[place.index]

    def write_place(self, s: ConcreteState, place: PlaceV, v: Value) -> ConcreteState:
        if isinstance(place, VarPlace):
            return s.with_var(place.name, v)
        base = self.read_place(s, place.base)
        if not isinstance(base, ArrayV):
            raise EvalUndefined("indexed place into a non-array")
        if not 0 <= place.index < len(base.items):
            raise EvalUndefined("place index out of bounds")
        items = list(base.items)
        items[place.index] = v
        return self.write_place(s, place.base, ArrayV(tuple(items)))

    # -- updates ------------------------------------------------------------

    def writes(self, u: lg.Update, s: ConcreteState) -> list[tuple[PlaceV, Value]]:
        """Writes an update performs, right-hand sides evaluated in s."""
        if isinstance(u, lg.SkipUpd):
            return []
        if isinstance(u, lg.ElemUpd):
            return [(VarPlace(u.var.name), self.term(u.value, s))]
        if isinstance(u, lg.MutUpd):
            r = self.term(u.ref, s)
            if not isinstance(r, RefMV):
                raise EvalUndefined("mutating update through a non-reference")
            return [(r.place, self.term(u.value, s))]
        if isinstance(u, lg.ParUpd):
            out: list[tuple[PlaceV, Value]] = []
            for p in u.parts:
                out.extend(self.writes(p, s))
            return out
        if isinstance(u, lg.SeqUpd):
            return self.writes(u.second, self.apply(u.first, s))
        raise EvalUndefined(f"unknown update {type(u).__name__}")

    def apply(self, u: lg.Update, s: ConcreteState) -> ConcreteState:
        out = s
        for place, v in self.writes(u, s):
            out = self.write_place(out, place, v)
        return out

    # -- formulas -----------------------------------------------------------

    def formula(self, f: lg.Formula, s: Optional[ConcreteState] = None) -> bool:
        if s is None:
            s = self.s
        if isinstance(f, lg.Top):
            return True
        if isinstance(f, lg.Bottom):
            return False
        if isinstance(f, lg.Not):
            return not self.formula(f.operand, s)
        if isinstance(f, lg.And):
            return self.formula(f.left, s) and self.formula(f.right, s)
        if isinstance(f, lg.Or):
            return self.formula(f.left, s) or self.formula(f.right, s)
        if isinstance(f, lg.Imp):
            return (not self.formula(f.left, s)) or self.formula(f.right, s)
        if isinstance(f, lg.Iff):
            return self.formula(f.left, s) == self.formula(f.right, s)
        if isinstance(f, lg.FormUpd):
            return self.formula(f.formula, self.apply(f.update, s))
        if isinstance(f, lg.Pred):
            return self.pred(f, s)
        if isinstance(f, (lg.Forall, lg.Exists)):
            return self.quantified(f, s)
        if isinstance(f, lg.Box):
            out = exec(f.program, s, self.fuel, self.overflow)
            if isinstance(out, Normal):
                return self.formula(f.post, out.state)
            return True  # panic and divergence satisfy partial correctness
        if isinstance(f, lg.Dia):
            out = exec(f.program, s, self.fuel, self.overflow)
            if isinstance(out, Normal):
                return self.formula(f.post, out.state)
            if isinstance(out, Panic):
                return False
            raise EvalUndefined("fuel exhausted under a diamond modality")
        raise EvalUndefined(f"cannot evaluate formula {type(f).__name__}")

    def pred(self, f: lg.Pred, s: ConcreteState) -> bool:
        vals = [self.term(a, s) for a in f.args]
        if f.name == "=":
            return vals[0] == vals[1]
        if f.name == "<":
            return _as_int(vals[0]) < _as_int(vals[1])
        if f.name == "<=":
            return _as_int(vals[0]) <= _as_int(vals[1])
        if f.name == ">":
            return _as_int(vals[0]) > _as_int(vals[1])
        if f.name == ">=":
            return _as_int(vals[0]) >= _as_int(vals[1])
        if f.name == "inRange":
            v = _as_int(vals[0])
            return f.objtype.min <= v <= f.objtype.max
        raise EvalUndefined(f"uninterpreted predicate {f.name}")

    def quantified(self, f: lg.Forall | lg.Exists, s: ConcreteState) -> bool:
        if f.var.sort == lg.BOOL:
            domain: Sequence[Value] = (BoolV(False), BoolV(True))
        elif f.var.sort == lg.INT:
            lo, hi = self.bounds
            domain = tuple(IntV(i) for i in range(lo, hi + 1))
        else:
            raise UnboundedQuantifier(f"cannot enumerate sort {f.var.sort}")
        want_all = isinstance(f, lg.Forall)
        for v in domain:
            self.assign[f.var] = v
            try:
                holds = self.formula(f.body, s)
            finally:
                del self.assign[f.var]
            if holds != want_all:
                return not want_all
        return want_all


# ---------------------------------------------------------------------------
# Counterexample search
# ---------------------------------------------------------------------------

ENUM_CAP = 10**7


def counterexample_search(
    pre: lg.Formula,
    p: Program,
    post: lg.Formula,
    modality: str,
    domain: dict[lg.ProgVar, Sequence[object]],
    consts: Optional[dict[str, Value]] = None,
    bounds: tuple[int, int] = DEFAULT_BOUNDS,
    fuel: int = 10**5,
    overflow: str = "check",
    cap: int = ENUM_CAP,
) -> Optional[ConcreteState]:
    """Enumerate pre-states over the finite domain and return the first one
    (lexicographically by sorted variable name) violating the obligation."""
    assert modality in ("box", "dia")
    pvs = sorted(domain, key=lambda v: v.name)
    total = 1
    for v in pvs:
        total *= max(1, len(domain[v]))
        if total > cap:
            raise DomainTooLarge(f"domain product exceeds {cap}")
    for combo in itertools.product(*(domain[v] for v in pvs)):
        vars_ = {v.name: value_of(v.objtype, raw) for v, raw in zip(pvs, combo)}
        s = ConcreteState(vars_, consts or {})
        ev = _Eval(s, bounds, {}, fuel, overflow)
        try:
            if not ev.formula(pre, s):
                continue
            mod = lg.Box(p, post) if modality == "box" else lg.Dia(p, post)
            if not ev.formula(mod, s):
                return s
        except EvalUndefined:
            continue
    return None
