"""Symbolic-execution sequent rules.

Each rule matches a succedent formula of shape `{U} [p] phi` (or `<p> phi`),
inspects the leftmost executable statement of p, and produces premise
sequents. Loop scopes are synthetic single-iteration wrappers introduced by
the invariant rule; `break` and `continue` collapse them and record the exit
kind in the scope's boolean index variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from . import logic as lg
from . import objlang as ol
from .frontend import Contract, FnDecl, parse_spec
from .objlang import Block, Expr, ObjType, Program, Stmt


class CalculusError(Exception):
    pass


class NotApplicable(CalculusError):
    pass


class MissingSpec(CalculusError):
    def __init__(self, what: str) -> None:
        super().__init__(f"missing specification: {what}")
        self.what = what


class EmptyProgram(CalculusError):
    pass


# ---------------------------------------------------------------------------
# Program context
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopScopeFrame:
    """An open loop scope: its index variable, the variable receiving the
    loop's value (None when discarded), and the program after the scope."""

    index_var: str
    target: Optional[str]
    rest_after: Program


@dataclass(frozen=True)
class ProgramContext:
    frames: tuple[LoopScopeFrame, ...]
    active: Stmt
    rest: Program  # statements after `active` at the innermost level


def _scope_of(s: Stmt) -> Optional[tuple[str, Optional[str], Block]]:
    if isinstance(s, ol.ExprStmt) and isinstance(s.expr, ol.LoopScopeExpr):
        return s.expr.index_var, None, s.expr.body
    if (isinstance(s, ol.AssignStmt) and isinstance(s.lvalue, ol.Var)
            and isinstance(s.value, ol.LoopScopeExpr)):
        return s.value.index_var, s.lvalue.name, s.value.body
    return None


def _block_stmts(b: Block) -> Program:
    stmts = b.stmts
    if b.value is not None:
        stmts = stmts + (ol.ExprStmt(b.value),)
    return stmts


def active_decompose(p: Program) -> ProgramContext:
    """Find the leftmost executable statement, descending into loop scopes."""
    if not p:
        raise EmptyProgram("empty program has no active statement")
    frames: list[LoopScopeFrame] = []
    cur = p
    while True:
        if not cur:
            raise EmptyProgram("loop scope body ran out of statements")
        scope = _scope_of(cur[0])
        if scope is None:
            return ProgramContext(tuple(frames), cur[0], cur[1:])
        ix, target, body = scope
        frames.append(LoopScopeFrame(ix, target, cur[1:]))
        cur = _block_stmts(body)


def recompose(frames: Sequence[LoopScopeFrame], inner: Program) -> Program:
    """Wrap a statement list back into its enclosing loop scopes."""
    prog = inner
    for fr in reversed(frames):
        scope = ol.LoopScopeExpr(fr.index_var, Block(prog, None))
        stmt: Stmt = (ol.AssignStmt(ol.Var(fr.target), scope) if fr.target
                      else ol.ExprStmt(scope))
        prog = (stmt,) + tuple(fr.rest_after)
    return prog


# ---------------------------------------------------------------------------
# Rule plumbing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuleSchema:
    name: str
    needs: tuple[str, ...] = ()  # extra inputs: "invariant"
    description: str = ""


@dataclass(frozen=True)
class RuleApp:
    rule: str
    path: tuple[int, ...]  # (side, formula index); side 0 = ante, 1 = succ
    inputs: dict = field(default_factory=dict, compare=False)


@dataclass
class RuleResult:
    premises: list[lg.Sequent]
    fresh: list[str] = field(default_factory=list)
    new_types: dict[str, ObjType] = field(default_factory=dict)
    branch_labels: list[str] = field(default_factory=list)


@dataclass
class GoalContext:
    """Ambient information a rule application needs beyond the sequent."""

    types: dict[str, ObjType]
    mode: str = "check"  # overflow handling: check | ignore
    fns: dict[str, FnDecl] = field(default_factory=dict)
    measure: Optional[lg.Term] = None  # caller's termination bound constant
    recursive: frozenset[str] = frozenset()  # callees needing a decrease check


def split_modality(f: lg.Formula):
    """Peel leading updates; returns (updates, modality class, program, post)
    or None when f has no top-level modality."""
    upds: list[lg.Update] = []
    cur = f
    while isinstance(cur, lg.FormUpd):
        upds.append(cur.update)
        cur = cur.formula
    if isinstance(cur, (lg.Box, lg.Dia)):
        return upds, type(cur), cur.program, cur.post
    return None


def _wrap(upds: Sequence[lg.Update], f: lg.Formula) -> lg.Formula:
    for u in reversed(upds):
        f = lg.FormUpd(u, f)
    return f


def _is_simple(e: Expr) -> bool:
    return isinstance(e, (ol.Lit, ol.Var))


def term_of_simple(e: Expr, types: dict[str, ObjType]) -> lg.Term:
    if isinstance(e, ol.Lit):
        if e.value is None:
            return lg.UnitLit()
        if isinstance(e.value, bool):
            return lg.BoolLit(e.value)
        return lg.IntLit(e.value)
    if isinstance(e, ol.Var):
        ty = types.get(e.name)
        if ty is None:
            raise NotApplicable(f"no type known for variable {e.name}")
        return lg.ProgVar(e.name, ty)
    raise NotApplicable("expression is not simple")


def _expr_type(e: Expr, types: dict[str, ObjType]) -> Optional[ObjType]:
    if isinstance(e, ol.Lit):
        return e.ty
    if isinstance(e, ol.Var):
        return types.get(e.name)
    return None


# ---------------------------------------------------------------------------
# Applicability
# ---------------------------------------------------------------------------

RULE_DESCRIPTIONS = {
    "emptyModality": "an empty modality reduces to its postcondition",
    "ifElseSplit": "split on a simple branch condition",
    "unfoldIfElse": "hoist a compound branch condition into a fresh let",
    "copy": "assignment of a simple copyable expression becomes an update",
    "move": "assignment of a non-copy variable; the source becomes unknown",
    "simpleExprStmt": "drop an effect-free expression statement",
    "assignBinOp": "arithmetic assignment, with range checks in check mode",
    "assignCmp": "comparison assignment becomes a conditional term",
    "assignBool": "boolean connective assignment becomes a conditional term",
    "assignNot": "boolean negation assignment",
    "assignNeg": "arithmetic negation assignment",
    "panicBox": "a panicking program satisfies any box formula",
    "panicDia": "a panicking program satisfies no diamond formula",
    "borrowShared": "shared borrow snapshots the borrowed value",
    "derefShared": "read through a shared reference",
    "borrowMut": "mutable borrow records the lender's place",
    "derefMutCopy": "read a copyable value through a mutable reference",
    "mutate": "write through a mutable reference (mutating update)",
    "copyArrayIdx": "array read with bounds check",
    "writeArrayIdxCopy": "array write with bounds check",
    "writeArrayIdxMut": "array write through a mutable array reference",
    "borrowMutIdxArr": "mutable borrow of an array element",
    "loopScopeInvBox": "loop invariant rule (box): initial and preserved",
    "breakValue": "break exits the innermost loop scope with a value",
    "continue": "continue ends the iteration of the innermost loop scope",
    "useFnContract": "replace a call by the callee's contract",
    "unfoldCall": "hoist non-simple call arguments into fresh lets",
    "unfoldBinOp": "hoist a non-simple operand into a fresh let",
    "unfoldExprStmt": "hoist an effectful expression statement into a let",
    "let": "let binding introduces a program variable",
    "blockValue": "splice a block, assigning its trailing value",
}


def applicable_rules(seq: lg.Sequent, path: tuple[int, int],
                     ctx: GoalContext) -> list[RuleSchema]:
    try:
        name = _match_rule(seq, path, ctx)
    except CalculusError:
        return []
    needs: tuple[str, ...] = ()
    if name == "loopScopeInvBox":
        side, idx = path
        f = (seq.ante if side == 0 else seq.succ)[idx]
        split = split_modality(f)
        _, _, program, _ = split
        pctx = active_decompose(program)
        loop = _active_loop(pctx.active)
        if loop is not None and not isinstance(loop.spec, ol.LoopSpec):
            needs = ("invariant",)
    return [RuleSchema(name, needs, RULE_DESCRIPTIONS.get(name, ""))]


def _active_loop(s: Stmt) -> Optional[ol.LoopExpr]:
    if isinstance(s, ol.ExprStmt) and isinstance(s.expr, ol.LoopExpr):
        return s.expr
    if (isinstance(s, ol.AssignStmt) and isinstance(s.lvalue, ol.Var)
            and isinstance(s.value, ol.LoopExpr)):
        return s.value
    if isinstance(s, ol.LetStmt) and isinstance(s.init, ol.LoopExpr):
        return s.init
    return None


def _match_rule(seq: lg.Sequent, path: tuple[int, int], ctx: GoalContext) -> str:
    side, idx = path
    forms = seq.ante if side == 0 else seq.succ
    if not (0 <= idx < len(forms)):
        raise NotApplicable("path outside the sequent")
    if side != 1:
        raise NotApplicable("execution rules apply to succedent formulas")
    split = split_modality(forms[idx])
    if split is None:
        raise NotApplicable("no modality at this position")
    _, cls, program, _ = split
    if not program:
        return "emptyModality"
    pctx = active_decompose(program)
    return _rule_for_active(pctx, cls, ctx)


def _rule_for_active(pctx: ProgramContext, cls, ctx: GoalContext) -> str:
    s = pctx.active
    box = cls is lg.Box
    if isinstance(s, ol.LetStmt):
        return _rule_for_assign_like(s.init, s.ty, ctx, box, is_let=True)
    if isinstance(s, ol.AssignStmt):
        lv = s.lvalue
        if isinstance(lv, ol.Var):
            ty = ctx.types.get(lv.name)
            return _rule_for_assign_like(s.value, ty, ctx, box, is_let=False)
        if isinstance(lv, ol.Deref):
            if _is_simple(s.value):
                return "mutate"
            return "unfoldBinOp"
        if isinstance(lv, ol.Index):
            if not (_is_simple(lv.index) and _is_simple(s.value)
                    and isinstance(lv.base, ol.Var)):
                return "unfoldBinOp"
            bt = ctx.types.get(lv.base.name)
            if isinstance(bt, ol.ArrayTy):
                return "writeArrayIdxCopy"
            return "writeArrayIdxMut"
        raise NotApplicable(f"unsupported assignment target {type(lv).__name__}")
    if isinstance(s, ol.ExprStmt):
        e = s.expr
        if isinstance(e, ol.PanicExpr):
            return "panicBox" if box else "panicDia"
        if _is_simple(e):
            return "simpleExprStmt"
        if isinstance(e, ol.IfExpr):
            return "ifElseSplit" if _is_simple(e.cond) else "unfoldIfElse"
        if isinstance(e, ol.LoopExpr):
            if not box:
                raise NotApplicable("no loop invariant rule for diamond goals")
            return "loopScopeInvBox"
        if isinstance(e, ol.BreakExpr):
            if not pctx.frames:
                raise NotApplicable("break outside a loop scope")
            if e.value is None or _is_simple(e.value):
                return "breakValue"
            return "unfoldBinOp"
        if isinstance(e, ol.ContinueExpr):
            if not pctx.frames:
                raise NotApplicable("continue outside a loop scope")
            return "continue"
        if isinstance(e, ol.BlockExpr):
            return "blockValue"
        if isinstance(e, ol.CallExpr):
            if all(_is_simple(a) for a in e.args):
                return "useFnContract"
            return "unfoldCall"
        return "unfoldExprStmt"
    raise NotApplicable(f"unsupported statement {type(s).__name__}")


def _rule_for_assign_like(value: Expr, ty: Optional[ObjType], ctx: GoalContext,
                          box: bool, is_let: bool) -> str:
    base = "let" if is_let else None
    if _is_simple(value):
        if isinstance(value, ol.Var):
            vt = ctx.types.get(value.name)
            if vt is not None and not ol.is_copy(vt):
                return "move"
        return base or "copy"
    if isinstance(value, ol.BinOp):
        if _is_simple(value.left) and _is_simple(value.right):
            if value.op in ("+", "-", "*", "/", "%"):
                return "assignBinOp"
            if value.op in ("&&", "||"):
                return "assignBool"
            return "assignCmp"
        return "unfoldBinOp"
    if isinstance(value, ol.UnOp):
        if _is_simple(value.operand):
            return "assignNot" if value.op == "!" else "assignNeg"
        return "unfoldBinOp"
    if isinstance(value, ol.Borrow):
        place = value.place
        if isinstance(place, ol.Var):
            return "borrowMut" if value.mutable else "borrowShared"
        if isinstance(place, ol.Index) and isinstance(place.base, ol.Var):
            if not _is_simple(place.index):
                return "unfoldBinOp"
            return "borrowMutIdxArr" if value.mutable else "borrowShared"
        raise NotApplicable("unsupported borrow target")
    if isinstance(value, ol.Deref):
        if not _is_simple(value.operand):
            return "unfoldBinOp"
        t = _expr_type(value.operand, ctx.types)
        if isinstance(t, ol.RefTy):
            return "derefMutCopy" if t.mutable else "derefShared"
        raise NotApplicable("dereference of a non-reference")
    if isinstance(value, ol.Index):
        if _is_simple(value.index) and isinstance(value.base, ol.Var):
            return "copyArrayIdx"
        return "unfoldBinOp"
    if isinstance(value, ol.IfExpr):
        return "ifElseSplit" if _is_simple(value.cond) else "unfoldIfElse"
    if isinstance(value, ol.LoopExpr):
        if not box:
            raise NotApplicable("no loop invariant rule for diamond goals")
        return "loopScopeInvBox"
    if isinstance(value, ol.BlockExpr):
        return "blockValue"
    if isinstance(value, ol.CallExpr):
        if all(_is_simple(a) for a in value.args):
            return "useFnContract"
        return "unfoldCall"
    raise NotApplicable(f"unsupported right-hand side {type(value).__name__}")


# ---------------------------------------------------------------------------
# Rule application
# ---------------------------------------------------------------------------


def apply_rule(seq: lg.Sequent, rule: str, path: tuple[int, int],
               ctx: GoalContext, inputs: Optional[dict] = None) -> RuleResult:
    inputs = inputs or {}
    expected = _match_rule(seq, path, ctx)
    if rule != expected:
        raise NotApplicable(f"rule {rule} does not match (expected {expected})")
    side, idx = path
    f = seq.succ[idx]
    upds, cls, program, post = split_modality(f)
    app = _Application(seq, path, upds, cls, program, post, ctx, inputs)
    handler = getattr(app, "rule_" + rule.replace("continue", "continue_"), None)
    if handler is None:
        raise NotApplicable(f"unknown rule {rule}")
    return handler()


class _Application:
    def __init__(self, seq, path, upds, cls, program, post, ctx, inputs) -> None:
        self.seq = seq
        self.side, self.idx = path
        self.upds: list[lg.Update] = upds
        self.cls = cls
        self.program: Program = program
        self.post: lg.Formula = post
        self.ctx: GoalContext = ctx
        self.inputs = inputs
        self.pctx = active_decompose(program) if program else None
        self.result = RuleResult([], [], {}, [])
        self._taken: Optional[set[str]] = None

    # -- helpers ------------------------------------------------------------

    @property
    def taken(self) -> set[str]:
        if self._taken is None:
            names: set[str] = set(self.ctx.types)
            for g in self.seq.ante + self.seq.succ:
                names |= lg.symbol_names(g)
            self._taken = names
        return self._taken

    def fresh(self, base: str) -> str:
        name = lg.fresh_name(base, self.taken)
        self.taken.add(name)
        self.result.fresh.append(name)
        return name

    def fresh_const(self, base: str, sort: lg.Sort) -> lg.Term:
        return lg.const(self.fresh(base), sort)

    def fresh_var(self, base: str, ty: ObjType) -> str:
        name = self.fresh(base)
        self.result.new_types[name] = ty
        self.ctx.types.setdefault(name, ty)
        return name

    def tr(self, e: Expr) -> lg.Term:
        return term_of_simple(e, self.ctx.types)

    def with_program(self, prog: Program, extra_updates: Sequence[lg.Update] = ()) -> lg.Formula:
        inner = self.cls(prog, self.post)
        f = _wrap(list(extra_updates), inner)
        return _wrap(self.upds, f)

    def replace_goal(self, new_formula: lg.Formula,
                     extra_ante: Sequence[lg.Formula] = ()) -> lg.Sequent:
        succ = list(self.seq.succ)
        succ[self.idx] = new_formula
        return lg.Sequent.of(tuple(self.seq.ante) + tuple(extra_ante), succ)

    def premise(self, seq: lg.Sequent, label: str = "") -> None:
        self.result.premises.append(seq)
        self.result.branch_labels.append(label)

    def continue_with(self, prog: Program,
                      extra_updates: Sequence[lg.Update] = (),
                      extra_ante: Sequence[lg.Formula] = (),
                      label: str = "") -> None:
        self.premise(self.replace_goal(self.with_program(prog, extra_updates),
                                       extra_ante), label)

    def rebuild(self, new_inner: Program) -> Program:
        """The full modality program with the active statement replaced."""
        return recompose(self.pctx.frames, tuple(new_inner) + tuple(self.pctx.rest))

    def under_u(self, g: lg.Formula) -> lg.Formula:
        return _wrap(self.upds, g)

    # -- the active statement, normalized to (target, value) ----------------

    def assign_parts(self):
        """(target name, declared type, value expr, is_let) of the active
        assignment-like statement."""
        s = self.pctx.active
        if isinstance(s, ol.LetStmt):
            return s.name, s.ty, s.init, True
        if isinstance(s, ol.AssignStmt) and isinstance(s.lvalue, ol.Var):
            return s.lvalue.name, self.ctx.types.get(s.lvalue.name), s.value, False
        raise NotApplicable("active statement is not a variable assignment")

    def target_var(self) -> lg.ProgVar:
        name, ty, _, is_let = self.assign_parts()
        if is_let:
            self.ctx.types[name] = ty
            self.result.new_types[name] = ty
        if ty is None:
            raise NotApplicable(f"no type known for {name}")
        return lg.ProgVar(name, ty)

    # -- structural rules ---------------------------------------------------

    def rule_emptyModality(self) -> RuleResult:
        self.premise(self.replace_goal(self.under_u(self.post)))
        return self.result

    def rule_simpleExprStmt(self) -> RuleResult:
        self.continue_with(self.rebuild(()))
        return self.result

    def rule_blockValue(self) -> RuleResult:
        s = self.pctx.active
        if isinstance(s, ol.ExprStmt):
            block = s.expr.block
            tail: Program = ()
            if block.value is not None:
                tail = (ol.ExprStmt(block.value),)
        else:
            name, ty, value, is_let = self.assign_parts()
            block = value.block
            val = block.value if block.value is not None else ol.UNIT_LIT
            assign: Stmt = (ol.LetStmt(name, True, ty, val) if is_let
                            else ol.AssignStmt(ol.Var(name), val))
            tail = (assign,)
        self.continue_with(self.rebuild(tuple(block.stmts) + tail))
        return self.result

    def rule_panicBox(self) -> RuleResult:
        return self.result  # zero premises: the goal closes

    def rule_panicDia(self) -> RuleResult:
        self.premise(self.replace_goal(lg.Bottom()))
        return self.result

    # -- assignments --------------------------------------------------------

    def rule_copy(self) -> RuleResult:
        return self._copy_like()

    def rule_let(self) -> RuleResult:
        return self._copy_like()

    def _copy_like(self) -> RuleResult:
        name, ty, value, is_let = self.assign_parts()
        if ty is None and is_let:
            raise NotApplicable("let without a resolved type")
        x = self.target_var()
        upd = lg.ElemUpd(x, self.tr(value))
        self.continue_with(self.rebuild(()), extra_updates=(upd,))
        return self.result

    def rule_move(self) -> RuleResult:
        name, ty, value, is_let = self.assign_parts()
        x = self.target_var()
        y = self.tr(value)
        c = self.fresh_const("c", lg.term_sort(y))
        upd = lg.par([lg.ElemUpd(x, y), lg.ElemUpd(lg.ProgVar(value.name,
                     self.ctx.types[value.name]), c)])
        self.continue_with(self.rebuild(()), extra_updates=(upd,))
        return self.result

    def rule_assignBinOp(self) -> RuleResult:
        name, ty, value, _ = self.assign_parts()
        x = self.target_var()
        if not isinstance(x.objtype, ol.IntTy):
            raise NotApplicable("arithmetic assignment to a non-integer")
        t1, t2 = self.tr(value.left), self.tr(value.right)
        res = lg.arith(value.op, t1, t2)
        upd = lg.ElemUpd(x, res)
        if self.ctx.mode == "ignore":
            self.continue_with(self.rebuild(()), extra_updates=(upd,))
            return self.result
        checks: list[lg.Formula] = []
        if value.op in ("/", "%"):
            checks.append(lg.Not(lg.eq(t2, lg.IntLit(0))))
            checks.append(lg.in_range(x.objtype, lg.arith("/", t1, t2)))
        else:
            checks.append(lg.in_range(x.objtype, res))
        ok = lg.conj(*checks)
        self.continue_with(self.rebuild(()), extra_updates=(upd,),
                           extra_ante=(self.under_u(ok),), label="in range")
        panic = self.rebuild((ol.ExprStmt(ol.PanicExpr()),))
        self.continue_with(panic, extra_ante=(self.under_u(lg.Not(ok)),),
                           label="panic")
        return self.result

    def rule_assignNeg(self) -> RuleResult:
        name, ty, value, _ = self.assign_parts()
        x = self.target_var()
        t = self.tr(value.operand)
        res = lg.sub(lg.IntLit(0), t)
        upd = lg.ElemUpd(x, res)
        if self.ctx.mode == "ignore":
            self.continue_with(self.rebuild(()), extra_updates=(upd,))
            return self.result
        ok = lg.in_range(x.objtype, res)
        self.continue_with(self.rebuild(()), extra_updates=(upd,),
                           extra_ante=(self.under_u(ok),), label="in range")
        panic = self.rebuild((ol.ExprStmt(ol.PanicExpr()),))
        self.continue_with(panic, extra_ante=(self.under_u(lg.Not(ok)),),
                           label="panic")
        return self.result

    def _cond_assign(self, cond: lg.Formula) -> RuleResult:
        x = self.target_var()
        upd = lg.ElemUpd(x, lg.IteTerm(cond, lg.BoolLit(True), lg.BoolLit(False)))
        self.continue_with(self.rebuild(()), extra_updates=(upd,))
        return self.result

    def rule_assignCmp(self) -> RuleResult:
        _, _, value, _ = self.assign_parts()
        t1, t2 = self.tr(value.left), self.tr(value.right)
        op = value.op
        if op == "==":
            cond: lg.Formula = lg.eq(t1, t2)
        elif op == "!=":
            cond = lg.Not(lg.eq(t1, t2))
        elif op == "<":
            cond = lg.lt(t1, t2)
        elif op == "<=":
            cond = lg.le(t1, t2)
        elif op == ">":
            cond = lg.lt(t2, t1)
        else:
            cond = lg.le(t2, t1)
        return self._cond_assign(cond)

    def rule_assignBool(self) -> RuleResult:
        _, _, value, _ = self.assign_parts()
        a = lg.eq(self.tr(value.left), lg.BoolLit(True))
        b = lg.eq(self.tr(value.right), lg.BoolLit(True))
        cond = lg.And(a, b) if value.op == "&&" else lg.Or(a, b)
        return self._cond_assign(cond)

    def rule_assignNot(self) -> RuleResult:
        _, _, value, _ = self.assign_parts()
        cond = lg.Not(lg.eq(self.tr(value.operand), lg.BoolLit(True)))
        return self._cond_assign(cond)

    # -- references ---------------------------------------------------------

    def rule_borrowShared(self) -> RuleResult:
        _, _, value, _ = self.assign_parts()
        x = self.target_var()
        place = value.place
        if isinstance(place, ol.Var):
            upd = lg.ElemUpd(x, lg.ref_shared(self.tr(place)))
            self.continue_with(self.rebuild(()), extra_updates=(upd,))
            return self.result
        # shared borrow of an array element: snapshot the cell, bounds-checked
        arr, i, n = self._indexed(place)
        upd = lg.ElemUpd(x, lg.ref_shared(lg.arr_get(arr, lg.idx(i))))
        return self._bounds_split(i, n, upd)

    def rule_borrowMut(self) -> RuleResult:
        _, _, value, _ = self.assign_parts()
        x = self.target_var()
        y = value.place
        yt = self.ctx.types.get(y.name)
        if yt is None:
            raise NotApplicable(f"no type known for {y.name}")
        upd = lg.ElemUpd(x, lg.ref_mut(lg.place_of(lg.ProgVar(y.name, yt)),
                                       lg.sort_of_objtype(yt)))
        self.continue_with(self.rebuild(()), extra_updates=(upd,))
        return self.result

    def rule_derefShared(self) -> RuleResult:
        _, _, value, _ = self.assign_parts()
        x = self.target_var()
        upd = lg.ElemUpd(x, lg.deref_shared(self.tr(value.operand)))
        self.continue_with(self.rebuild(()), extra_updates=(upd,))
        return self.result

    def rule_derefMutCopy(self) -> RuleResult:
        _, _, value, _ = self.assign_parts()
        x = self.target_var()
        upd = lg.ElemUpd(x, lg.deref_mut(self.tr(value.operand)))
        self.continue_with(self.rebuild(()), extra_updates=(upd,))
        return self.result

    def rule_mutate(self) -> RuleResult:
        s = self.pctx.active
        ref = self.tr(s.lvalue.operand)
        rs = lg.term_sort(ref)
        if not (isinstance(rs, lg.RefSort) and rs.mutable):
            raise NotApplicable("write through a non-mutable reference")
        upd = lg.MutUpd(ref, self.tr(s.value))
        self.continue_with(self.rebuild(()), extra_updates=(upd,))
        return self.result

    # -- arrays -------------------------------------------------------------

    def _indexed(self, e: ol.Index) -> tuple[lg.Term, lg.Term, int]:
        """(array term, index term, length) for an Index on a variable,
        reading through references as needed."""
        base = self.tr(e.base)
        bt = lg.term_sort(base)
        if isinstance(bt, lg.RefSort):
            base = lg.deref_mut(base) if bt.mutable else lg.deref_shared(base)
            bt = lg.term_sort(base)
        if not isinstance(bt, lg.ArraySort):
            raise NotApplicable("index into a non-array")
        return base, self.tr(e.index), bt.length

    def _bounds_split(self, i: lg.Term, n: int, upd: lg.Update,
                      prog_override: Optional[Program] = None) -> RuleResult:
        ok = lg.And(lg.le(lg.IntLit(0), i), lg.lt(i, lg.IntLit(n)))
        prog = prog_override if prog_override is not None else self.rebuild(())
        self.continue_with(prog, extra_updates=(upd,),
                           extra_ante=(self.under_u(ok),), label="in bounds")
        panic = self.rebuild((ol.ExprStmt(ol.PanicExpr()),))
        self.continue_with(panic, extra_ante=(self.under_u(lg.Not(ok)),),
                           label="panic")
        return self.result

    def rule_copyArrayIdx(self) -> RuleResult:
        _, _, value, _ = self.assign_parts()
        x = self.target_var()
        arr, i, n = self._indexed(value)
        return self._bounds_split(i, n, lg.ElemUpd(x, lg.arr_get(arr, lg.idx(i))))

    def rule_writeArrayIdxCopy(self) -> RuleResult:
        s = self.pctx.active
        lv = s.lvalue
        a = lg.ProgVar(lv.base.name, self.ctx.types[lv.base.name])
        i = self.tr(lv.index)
        n = a.objtype.length
        upd = lg.ElemUpd(a, lg.arr_set(a, lg.idx(i), self.tr(s.value)))
        return self._bounds_split(i, n, upd)

    def rule_writeArrayIdxMut(self) -> RuleResult:
        s = self.pctx.active
        lv = s.lvalue
        r = self.tr(lv.base)
        rs = lg.term_sort(r)
        if not (isinstance(rs, lg.RefSort) and rs.mutable
                and isinstance(rs.inner, lg.ArraySort)):
            raise NotApplicable("indexed write needs an array or &mut array")
        i = self.tr(lv.index)
        upd = lg.MutUpd(lg.ref_mut(lg.arr_place(r, i), rs.inner.elem),
                        self.tr(s.value))
        return self._bounds_split(i, rs.inner.length, upd)

    def rule_borrowMutIdxArr(self) -> RuleResult:
        _, _, value, _ = self.assign_parts()
        x = self.target_var()
        place = value.place
        base = self.tr(place.base)
        bs = lg.term_sort(base)
        if isinstance(bs, lg.ArraySort):
            # local array: materialize the reference to the array first
            base = lg.ref_mut(lg.place_of(base), bs)
            bs = lg.term_sort(base)
        if not (isinstance(bs, lg.RefSort) and bs.mutable
                and isinstance(bs.inner, lg.ArraySort)):
            raise NotApplicable("mutable borrow of a non-array element")
        i = self.tr(place.index)
        upd = lg.ElemUpd(x, lg.ref_mut(lg.arr_place(base, i), bs.inner.elem))
        return self._bounds_split(i, bs.inner.length, upd)

    # -- control flow -------------------------------------------------------

    def _branch_programs(self):
        """For if at the active position: (cond expr, then program, else
        program) where branch programs end with the pending assignment."""
        s = self.pctx.active
        if isinstance(s, ol.ExprStmt):
            e = s.expr
            mk = lambda b: _block_stmts(b)
        else:
            name, ty, e, is_let = self.assign_parts()

            def mk(b: Block, name=name, ty=ty, is_let=is_let):
                val = b.value if b.value is not None else ol.UNIT_LIT
                assign: Stmt = (ol.LetStmt(name, True, ty, val) if is_let
                                else ol.AssignStmt(ol.Var(name), val))
                return tuple(b.stmts) + (assign,)
        return e, mk(e.then), mk(e.els if e.els is not None else Block((), None))

    def rule_ifElseSplit(self) -> RuleResult:
        e, then_prog, else_prog = self._branch_programs()
        se = self.tr(e.cond)
        self.continue_with(self.rebuild(then_prog),
                           extra_ante=(self.under_u(lg.eq(se, lg.BoolLit(True))),),
                           label="then")
        self.continue_with(self.rebuild(else_prog),
                           extra_ante=(self.under_u(lg.eq(se, lg.BoolLit(False))),),
                           label="else")
        return self.result

    def rule_unfoldIfElse(self) -> RuleResult:
        s = self.pctx.active
        e = s.expr if isinstance(s, ol.ExprStmt) else self.assign_parts()[2]
        xname = self.fresh_var("x", ol.BOOL)
        let = ol.LetStmt(xname, False, ol.BOOL, e.cond)
        new_if = replace(e, cond=ol.Var(xname))
        new_stmt = _replace_value(s, new_if)
        self.continue_with(self.rebuild((let, new_stmt)))
        return self.result

    def rule_breakValue(self) -> RuleResult:
        s = self.pctx.active
        e = s.expr
        fr = self.pctx.frames[-1]
        outer = self.pctx.frames[:-1]
        stmts: list[Stmt] = [ol.AssignStmt(ol.Var(fr.index_var), ol.Lit(True, ol.BOOL))]
        if fr.target is not None:
            stmts.append(ol.AssignStmt(ol.Var(fr.target),
                                       e.value if e.value is not None else ol.UNIT_LIT))
        prog = recompose(outer, tuple(stmts) + tuple(fr.rest_after))
        self.continue_with(prog)
        return self.result

    def rule_continue_(self) -> RuleResult:
        fr = self.pctx.frames[-1]
        outer = self.pctx.frames[:-1]
        stmts = (ol.AssignStmt(ol.Var(fr.index_var), ol.Lit(False, ol.BOOL)),)
        prog = recompose(outer, stmts + tuple(fr.rest_after))
        self.continue_with(prog)
        return self.result

    def rule_loopScopeInvBox(self) -> RuleResult:
        s = self.pctx.active
        if isinstance(s, ol.ExprStmt):
            target = None
            loop = s.expr
        elif isinstance(s, ol.LetStmt):
            target = s.name
            self.ctx.types[target] = s.ty
            self.result.new_types[target] = s.ty
            loop = s.init
        else:
            target = s.lvalue.name
            loop = s.value
        inv = self._invariant(loop)
        ix = self.fresh_var("x", ol.BOOL)
        body = tuple(_block_stmts(loop.body)) + (ol.ExprStmt(ol.ContinueExpr()),)
        scope_stmt: Stmt
        scope = ol.LoopScopeExpr(ix, Block(body, None))
        scope_stmt = (ol.AssignStmt(ol.Var(target), scope) if target
                      else ol.ExprStmt(scope))
        rest_prog = recompose(self.pctx.frames, tuple(self.pctx.rest))
        ix_var = lg.ProgVar(ix, ol.BOOL)
        exit_case = lg.Imp(lg.eq(ix_var, lg.BoolLit(True)),
                           lg.Box(rest_prog, self.post))
        iter_case = lg.Imp(lg.eq(ix_var, lg.BoolLit(False)), inv)
        scope_post = lg.And(exit_case, iter_case)
        anon = self._anonymizing_update(loop.body)
        # premise 1: the invariant holds on entry
        self.premise(self.replace_goal(self.under_u(inv)), "initially valid")
        # premise 2: an arbitrary iteration preserves the invariant / exits
        body_formula = lg.Imp(inv, lg.Box((scope_stmt,), scope_post))
        f2 = self.under_u(lg.FormUpd(anon, body_formula) if not isinstance(anon, lg.SkipUpd)
                          else body_formula)
        self.premise(self.replace_goal(f2), "preserved")
        return self.result

    def _invariant(self, loop: ol.LoopExpr) -> lg.Formula:
        if isinstance(loop.spec, ol.LoopSpec):
            return loop.spec.invariant
        text = self.inputs.get("invariant")
        if not text:
            raise MissingSpec("loop invariant")
        if isinstance(text, lg.Formula):
            return text
        return parse_spec(text, self.ctx.types, allow_res=False)

    def _anonymizing_update(self, body: Block) -> lg.Update:
        upd, fresh = anonymizing_update(body, self.ctx.types, self.taken)
        for name in fresh:
            self.taken.add(name)
            self.result.fresh.append(name)
        return upd

    # -- calls --------------------------------------------------------------

    def rule_useFnContract(self) -> RuleResult:
        s = self.pctx.active
        if isinstance(s, ol.ExprStmt):
            target = None
            call = s.expr
        else:
            target, tty, call, is_let = self.assign_parts()
            if is_let:
                self.ctx.types[target] = tty
                self.result.new_types[target] = tty
        fn = self.ctx.fns.get(call.name)
        if fn is None:
            raise NotApplicable(f"unknown function {call.name}")
        if fn.contract is None:
            raise MissingSpec(f"contract for function {call.name}")
        c = fn.contract
        # bind formals to actuals; freshen formals clashing with goal symbols
        renaming: dict[lg.ProgVar, lg.Term] = {}
        formals: list[lg.ProgVar] = []
        binds: list[lg.Update] = []
        for (pname, pty), arg in zip(fn.params, call.args):
            pv = lg.ProgVar(pname, pty)
            if pname in self.taken:
                pv2 = lg.ProgVar(self.fresh(pname), pty)
                renaming[pv] = pv2
                pv = pv2
            else:
                self.taken.add(pname)
            self.ctx.types.setdefault(pv.name, pty)
            self.result.new_types.setdefault(pv.name, pty)
            formals.append(pv)
            binds.append(lg.ElemUpd(pv, self.tr(arg)))
        bind_upd = lg.par(binds)
        pre = lg.subst_prog_vars(c.pre, renaming) if renaming else c.pre
        post = lg.subst_prog_vars(c.post, renaming) if renaming else c.post
        params_in_range = lg.conj(*[
            lg.in_range(pv.objtype, pv) for pv in formals
            if isinstance(pv.objtype, ol.IntTy)])
        obligations = [pre, params_in_range]
        if call.name in self.ctx.recursive:
            if c.decreases is None:
                raise MissingSpec(f"decreases clause for recursive call to {call.name}")
            if self.ctx.measure is None:
                raise NotApplicable("no termination measure bound in this proof")
            dec = lg.subst_prog_vars(c.decreases, renaming) if renaming else c.decreases
            obligations.append(lg.And(lg.le(lg.IntLit(0), dec),
                                      lg.lt(dec, self.ctx.measure)))
        premise1 = self.under_u(lg.FormUpd(bind_upd, lg.conj(*obligations)))
        self.premise(self.replace_goal(premise1), "pre")
        # anonymize the lenders of mutable-reference parameters
        anon_parts: list[lg.Update] = []
        for pv in formals:
            if isinstance(pv.objtype, ol.RefTy) and pv.objtype.mutable:
                inner = lg.sort_of_objtype(pv.objtype.inner)
                anon_parts.append(lg.MutUpd(pv, self.fresh_const("d", inner)))
        res_name = "res" if "res" not in self.taken else self.fresh("res")
        self.taken.add(res_name)
        res_var = lg.ProgVar(res_name, fn.ret)
        self.ctx.types.setdefault(res_name, fn.ret)
        self.result.new_types.setdefault(res_name, fn.ret)
        post = lg.subst_prog_vars(post, {lg.ProgVar("res", fn.ret): res_var})
        assumption = post
        if isinstance(fn.ret, ol.IntTy):
            assumption = lg.And(post, lg.in_range(fn.ret, res_var))
        cont: list[Stmt] = []
        if target is not None:
            cont.append(ol.AssignStmt(ol.Var(target), ol.Var(res_name)))
        rest_prog = self.rebuild(tuple(cont))
        body = lg.Imp(assumption, lg.Box(rest_prog, self.post)
                      if self.cls is lg.Box else lg.Dia(rest_prog, self.post))
        inner: lg.Formula = body
        for part in reversed(anon_parts):
            inner = lg.FormUpd(part, inner)
        premise2 = self.under_u(lg.FormUpd(bind_upd, inner))
        self.premise(self.replace_goal(premise2), "post")
        return self.result

    def rule_unfoldCall(self) -> RuleResult:
        s = self.pctx.active
        call = s.expr if isinstance(s, ol.ExprStmt) else self.assign_parts()[2]
        lets: list[Stmt] = []
        new_args: list[Expr] = []
        for a in call.args:
            if _is_simple(a):
                new_args.append(a)
                continue
            ty = self._arg_type(a)
            name = self.fresh_var("t", ty)
            lets.append(ol.LetStmt(name, False, ty, a))
            new_args.append(ol.Var(name))
        new_call = ol.CallExpr(call.name, tuple(new_args))
        new_stmt = _replace_value(s, new_call)
        self.continue_with(self.rebuild(tuple(lets) + (new_stmt,)))
        return self.result

    def _arg_type(self, a: Expr) -> ObjType:
        ty = _infer_expr_type(a, self.ctx.types, self.ctx.fns)
        if ty is None:
            raise NotApplicable("cannot infer the type of a call argument")
        return ty

    def rule_unfoldBinOp(self) -> RuleResult:
        s = self.pctx.active
        if isinstance(s, ol.AssignStmt) and not isinstance(s.lvalue, ol.Var):
            # a write through a deref or into an array cell: hoist the value
            # (and then the index) into fresh lets, wholesale
            if not _is_simple(s.value):
                ty = _infer_expr_type(s.value, self.ctx.types, self.ctx.fns)
                if ty is None:
                    raise NotApplicable("cannot infer the assigned value's type")
                name = self.fresh_var("t", ty)
                let: Stmt = ol.LetStmt(name, False, ty, s.value)
                new_stmt: Stmt = ol.AssignStmt(s.lvalue, ol.Var(name), s.pos)
            elif isinstance(s.lvalue, ol.Index) and not _is_simple(s.lvalue.index):
                ty = _infer_expr_type(s.lvalue.index, self.ctx.types, self.ctx.fns)
                if ty is None:
                    raise NotApplicable("cannot infer the index type")
                name = self.fresh_var("t", ty)
                let = ol.LetStmt(name, False, ty, s.lvalue.index)
                new_stmt = ol.AssignStmt(ol.Index(s.lvalue.base, ol.Var(name)),
                                         s.value, s.pos)
            else:
                raise NotApplicable("unsupported assignment target")
            self.continue_with(self.rebuild((let, new_stmt)))
            return self.result
        e = s.expr if isinstance(s, ol.ExprStmt) else self.assign_parts()[2]
        let, rebuilt = _hoist_first(e, self)
        if let is None:
            raise NotApplicable("nothing to unfold")
        self.continue_with(self.rebuild((let, _replace_value(s, rebuilt))))
        return self.result

    def rule_unfoldExprStmt(self) -> RuleResult:
        s = self.pctx.active
        ty = _infer_expr_type(s.expr, self.ctx.types, self.ctx.fns)
        if ty is None:
            raise NotApplicable("cannot infer the type of the expression")
        name = self.fresh_var("t", ty)
        self.continue_with(self.rebuild((ol.LetStmt(name, False, ty, s.expr),)))
        return self.result


def _replace_value(s: Stmt, new_value: Expr) -> Stmt:
    if isinstance(s, ol.ExprStmt):
        return ol.ExprStmt(new_value, s.pos)
    if isinstance(s, ol.LetStmt):
        return replace(s, init=new_value)
    if isinstance(s, ol.AssignStmt):
        return ol.AssignStmt(s.lvalue, new_value, s.pos)
    raise NotApplicable("cannot rebuild statement")


def _infer_expr_type(e: Expr, types: dict[str, ObjType],
                     fns: Optional[dict] = None) -> Optional[ObjType]:
    if isinstance(e, ol.Lit):
        return e.ty
    if isinstance(e, ol.Var):
        return types.get(e.name)
    if isinstance(e, ol.BinOp):
        if e.op in ("&&", "||") or e.op in ("==", "!=", "<", "<=", ">", ">="):
            return ol.BOOL
        return (_infer_expr_type(e.left, types, fns)
                or _infer_expr_type(e.right, types, fns))
    if isinstance(e, ol.UnOp):
        return ol.BOOL if e.op == "!" else _infer_expr_type(e.operand, types, fns)
    if isinstance(e, ol.Borrow):
        inner = _infer_expr_type(e.place, types, fns)
        return ol.RefTy(inner, e.mutable) if inner is not None else None
    if isinstance(e, ol.Deref):
        t = _infer_expr_type(e.operand, types, fns)
        return t.inner if isinstance(t, ol.RefTy) else None
    if isinstance(e, ol.Index):
        t = _infer_expr_type(e.base, types, fns)
        if isinstance(t, ol.RefTy):
            t = t.inner
        return t.elem if isinstance(t, ol.ArrayTy) else None
    if isinstance(e, ol.CallExpr) and fns and e.name in fns:
        return fns[e.name].ret
    return None


def _hoist_first(e: Expr, app: _Application) -> tuple[Optional[Stmt], Expr]:
    """Hoist the leftmost non-simple proper subexpression of e into a fresh
    let, returning (let statement, rebuilt e); (None, e) when nothing in e
    can be hoisted. Borrow targets are never hoisted (a borrow of a
    temporary would change the place), only element indices are."""

    def mk_let(sub: Expr) -> tuple[Stmt, ol.Var]:
        ty = _infer_expr_type(sub, app.ctx.types, app.ctx.fns)
        if ty is None:
            raise NotApplicable("cannot infer a type while unfolding")
        name = app.fresh_var("t", ty)
        return ol.LetStmt(name, False, ty, sub), ol.Var(name)

    if isinstance(e, ol.Borrow):
        if isinstance(e.place, ol.Index) and not _is_simple(e.place.index):
            let, v = mk_let(e.place.index)
            return let, replace(e, place=ol.Index(e.place.base, v))
        return None, e
    if isinstance(e, ol.BreakExpr):
        if e.value is not None and not _is_simple(e.value):
            let, v = mk_let(e.value)
            return let, ol.BreakExpr(v)
        return None, e

    fields = {ol.BinOp: ("left", "right"), ol.UnOp: ("operand",),
              ol.Index: ("base", "index"), ol.Deref: ("operand",)}
    for fieldname in fields.get(type(e), ()):
        sub = getattr(e, fieldname)
        if not _is_simple(sub):
            let, v = mk_let(sub)
            return let, replace(e, **{fieldname: v})
    return None, e


# ---------------------------------------------------------------------------
# Anonymizing updates
# ---------------------------------------------------------------------------


def anonymizing_update(body: Block, types: dict[str, ObjType],
                       taken: set[str]) -> tuple[lg.Update, list[str]]:
    """Fresh constants for every variable the body may write: assigned
    variables, mutably borrowed variables, and - for writes through
    references of unknown origin - every type-compatible variable in scope."""
    local: set[str] = set()
    writes: set[str] = set()
    borrow_map: dict[str, set[str]] = {}  # ref var -> possible lender names
    opaque_inner: list[ObjType] = []  # `*p = ...` with p of unknown origin

    def expr(e: Expr) -> None:
        if isinstance(e, ol.Borrow):
            if e.mutable:
                root = e.place
                while isinstance(root, ol.Index):
                    root = root.base
                if isinstance(root, ol.Var):
                    writes.add(root.name)
            expr(e.place)
            return
        if isinstance(e, ol.IfExpr):
            expr(e.cond)
            block(e.then)
            if e.els is not None:
                block(e.els)
            return
        if isinstance(e, (ol.LoopExpr, ol.WhileExpr)):
            if isinstance(e, ol.WhileExpr):
                expr(e.cond)
            block(e.body)
            return
        if isinstance(e, ol.BlockExpr):
            block(e.block)
            return
        if isinstance(e, ol.LoopScopeExpr):
            local.add(e.index_var)
            block(e.body)
            return
        for name in ("left", "right", "operand", "base", "index", "value"):
            sub = getattr(e, name, None)
            if isinstance(sub, Expr):
                expr(sub)
        if isinstance(e, ol.CallExpr):
            for a in e.args:
                expr(a)

    def note_borrow(target: str, init: Expr) -> None:
        if isinstance(init, ol.Borrow) and init.mutable and isinstance(init.place, ol.Var):
            borrow_map.setdefault(target, set()).add(init.place.name)

    def stmt(s: Stmt) -> None:
        if isinstance(s, ol.LetStmt):
            local.add(s.name)
            note_borrow(s.name, s.init)
            expr(s.init)
            return
        if isinstance(s, (ol.AssignStmt, ol.OpAssignStmt)):
            lv = s.lvalue
            if isinstance(lv, ol.Var):
                writes.add(lv.name)
                note_borrow(lv.name, s.value)
            elif isinstance(lv, ol.Index) and isinstance(lv.base, ol.Var):
                writes.add(lv.base.name)
                expr(lv.index)
            elif isinstance(lv, ol.Deref) and isinstance(lv.operand, ol.Var):
                p = lv.operand.name
                if p in borrow_map:
                    writes.update(borrow_map[p])
                else:
                    pty = types.get(p)
                    if isinstance(pty, ol.RefTy):
                        opaque_inner.append(pty.inner)
                    writes.add(p)  # harmless: p itself is local state
            expr(s.value)
            return
        if isinstance(s, ol.ExprStmt):
            expr(s.expr)

    def block(b: Block) -> None:
        for s in b.stmts:
            stmt(s)
        if b.value is not None:
            expr(b.value)

    block(body)
    # writes through references of unknown origin havoc every compatible var
    for inner in opaque_inner:
        for name, ty in types.items():
            if ty == inner:
                writes.add(name)
    targets = sorted((writes - local) & set(types))
    parts: list[lg.Update] = []
    fresh: list[str] = []
    taken = set(taken)
    for name in targets:
        ty = types[name]
        cname = lg.fresh_name(f"c_{name}", taken)
        taken.add(cname)
        fresh.append(cname)
        parts.append(lg.ElemUpd(lg.ProgVar(name, ty),
                                lg.const(cname, lg.sort_of_objtype(ty))))
    return lg.par(parts), fresh
