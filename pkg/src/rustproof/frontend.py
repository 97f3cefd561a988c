"""Source frontend: parsing of annotated source files and proof-obligation
files, specification formulas, type checking, and normalization.

Annotations are `//@` line comments (`requires`, `ensures`, `decreases`
before a function; `invariant` before a loop), so accepted files stay valid
input to a stock compiler. The verifier works on normalized units: `while`
desugared to `loop` + `if` + `break`, compound assignments expanded, every
`if` carrying an explicit else block.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

from . import logic as lg
from . import objlang as ol
from .objlang import (
    Block, Expr, ObjType, Pos, NO_POS, Program, RawSpec, Stmt,
)


# ---------------------------------------------------------------------------
# Diagnostics and errors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    pos: Pos
    message: str
    severity: str = "error"  # error | warning

    def __str__(self) -> str:
        line, col = self.pos
        return f"{line}:{col}: {self.severity}: {self.message}"


class FrontendError(Exception):
    def __init__(self, pos: Pos, message: str) -> None:
        super().__init__(f"{pos[0]}:{pos[1]}: {message}")
        self.pos = pos
        self.message = message


class UnsupportedConstruct(FrontendError):
    pass


class SpecSyntaxError(FrontendError):
    pass


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_PUNCTS = (
    "<==>", "==>", "<->", "::", "&&", "||", "==", "!=", "<=", ">=", "->",
    "+=", "-=", "*=", "/=", "%=", "=", "<", ">", "+", "-", "*", "/", "%",
    "!", "&", "(", ")", "{", "}", "[", "]", ";", ":", ",",
)

_KEYWORDS = frozenset((
    "fn", "let", "mut", "if", "else", "while", "loop", "break", "continue",
    "true", "false", "return", "panic", "forall", "exists", "res",
))


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | punct | annot | eof
    value: object
    pos: Pos


def _lex(text: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    line, col = 1, 1
    n = len(text)

    def pos() -> Pos:
        return (line, col)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            end = text.find("\n", i)
            if end == -1:
                end = n
            comment = text[i:end]
            if comment.startswith("//@"):
                body = comment[3:].strip()
                kind, _, rest = body.partition(" ")
                if kind not in ("requires", "ensures", "decreases", "invariant"):
                    raise FrontendError(pos(), f"unknown annotation kind {kind!r}")
                toks.append(Token("annot", (kind, rest.strip()), pos()))
            advance(end - i)
            continue
        if c.isdigit():
            j = i
            while j < n and (text[j].isdigit() or text[j] == "_"):
                j += 1
            toks.append(Token("int", int(text[i:j].replace("_", "")), pos()))
            advance(j - i)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Token("ident", text[i:j], pos()))
            advance(j - i)
            continue
        for p in _PUNCTS:
            if text.startswith(p, i):
                toks.append(Token("punct", p, pos()))
                advance(len(p))
                break
        else:
            raise FrontendError(pos(), f"unexpected character {c!r}")
    toks.append(Token("eof", None, pos()))
    return toks


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Contract:
    pre: lg.Formula
    post: lg.Formula
    decreases: Optional[lg.Term] = None
    pre_text: str = field(default="true", compare=False)
    post_text: str = field(default="true", compare=False)
    decreases_text: str = field(default="", compare=False)


@dataclass(frozen=True)
class FnDecl:
    name: str
    params: tuple[tuple[str, ObjType], ...]
    ret: ObjType
    body: Block
    contract: Optional[Contract]
    var_types: dict[str, ObjType] = field(default_factory=dict, compare=False)
    pos: Pos = field(default=NO_POS, compare=False)


@dataclass(frozen=True)
class SourceUnit:
    functions: tuple[FnDecl, ...]
    diagnostics: tuple[Diagnostic, ...] = ()

    def function(self, name: str) -> FnDecl:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")


@dataclass(frozen=True)
class RdlProblem:
    """A standalone proof obligation: declared variables plus one formula
    that may contain `[ {...} ]` / `< {...} >` modalities."""

    formula: lg.Formula
    var_types: dict[str, ObjType]
    source: str = field(default="", compare=False)


# ---------------------------------------------------------------------------
# Raw function shell (pre-typecheck)
# ---------------------------------------------------------------------------


@dataclass
class _RawFn:
    name: str
    params: list[tuple[str, ObjType]]
    ret: ObjType
    body: Block
    requires: list[tuple[str, Pos]]
    ensures: list[tuple[str, Pos]]
    decreases: Optional[tuple[str, Pos]]
    pos: Pos


@dataclass
class _SpecCtx:
    scope: dict[str, ObjType]
    allow_res: bool
    ret: Optional[ObjType]
    allow_modality: bool
    bound: dict[str, lg.LogicVar]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "%=")
_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, toks: list[Token]) -> None:
        self.toks = toks
        self.i = 0

    # -- cursor -------------------------------------------------------------

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, kind: str, value: object = None) -> bool:
        t = self.peek()
        return t.kind == kind and (value is None or t.value == value)

    def at_kw(self, word: str) -> bool:
        return self.at("ident", word)

    def expect(self, kind: str, value: object = None) -> Token:
        t = self.peek()
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            raise FrontendError(t.pos, f"expected {want!r}, found {t.value!r}")
        return self.next()

    def expect_eof(self) -> None:
        t = self.peek()
        if t.kind != "eof":
            raise FrontendError(t.pos, f"unexpected trailing input {t.value!r}")

    # -- types --------------------------------------------------------------

    def parse_type(self) -> ObjType:
        t = self.peek()
        if t.kind == "ident":
            name = t.value
            if name == "bool":
                self.next()
                return ol.BOOL
            if name in ol.INT_TYPES:
                self.next()
                return ol.INT_TYPES[name]
            raise UnsupportedConstruct(t.pos, f"unknown type {name!r}")
        if self.at("punct", "("):
            self.next()
            self.expect("punct", ")")
            return ol.UNIT
        if self.at("punct", "["):
            self.next()
            elem = self.parse_type()
            self.expect("punct", ";")
            length = self.expect("int")
            self.expect("punct", "]")
            return ol.ArrayTy(elem, length.value)
        if self.at("punct", "&"):
            self.next()
            mutable = False
            if self.at_kw("mut"):
                self.next()
                mutable = True
            return ol.RefTy(self.parse_type(), mutable)
        raise FrontendError(t.pos, f"expected a type, found {t.value!r}")

    # -- unit ---------------------------------------------------------------

    def parse_raw_unit(self) -> list[_RawFn]:
        fns: list[_RawFn] = []
        while not self.at("eof"):
            requires: list[tuple[str, Pos]] = []
            ensures: list[tuple[str, Pos]] = []
            decreases: Optional[tuple[str, Pos]] = None
            while self.at("annot"):
                t = self.next()
                kind, text = t.value
                if kind == "requires":
                    requires.append((text, t.pos))
                elif kind == "ensures":
                    ensures.append((text, t.pos))
                elif kind == "decreases":
                    decreases = (text, t.pos)
                else:
                    raise FrontendError(t.pos, "invariant annotation outside a function body")
            fns.append(self.parse_fn(requires, ensures, decreases))
        return fns

    def parse_fn(self, requires, ensures, decreases) -> _RawFn:
        start = self.expect("ident", "fn")
        name = self.expect("ident").value
        if name in _KEYWORDS:
            raise FrontendError(start.pos, f"{name!r} is a reserved word")
        self.expect("punct", "(")
        params: list[tuple[str, ObjType]] = []
        while not self.at("punct", ")"):
            pname = self.expect("ident").value
            self.expect("punct", ":")
            pty = self.parse_type()
            params.append((pname, pty))
            if not self.at("punct", ")"):
                self.expect("punct", ",")
        self.expect("punct", ")")
        ret: ObjType = ol.UNIT
        if self.at("punct", "->"):
            self.next()
            ret = self.parse_type()
        body = self.parse_block()
        return _RawFn(name, params, ret, body, requires, ensures, decreases, start.pos)

    # -- statements ---------------------------------------------------------

    def parse_block(self) -> Block:
        self.expect("punct", "{")
        stmts, value = self.parse_stmt_list_until("}")
        self.expect("punct", "}")
        return Block(tuple(stmts), value)

    def parse_stmt_list_until(self, closer: str) -> tuple[list[Stmt], Optional[Expr]]:
        stmts: list[Stmt] = []
        value: Optional[Expr] = None
        pending_inv: Optional[tuple[str, Pos]] = None
        while not self.at("punct", closer):
            if self.at("eof"):
                raise FrontendError(self.peek().pos, f"expected {closer!r} before end of input")
            if self.at("annot"):
                t = self.next()
                kind, text = t.value
                if kind != "invariant":
                    raise FrontendError(t.pos, f"{kind} annotation inside a function body")
                pending_inv = (text, t.pos)
                continue
            if self.at_kw("let"):
                stmts.append(self._attach_inv(self.parse_let(), pending_inv))
                pending_inv = None
                continue
            if self.at_kw("return"):
                raise UnsupportedConstruct(
                    self.peek().pos,
                    "return statements are not supported; use a trailing expression")
            assign = self.try_parse_assignment()
            if assign is not None:
                stmts.append(self._attach_inv(assign, pending_inv))
                pending_inv = None
                continue
            pos = self.peek().pos
            e = self.parse_expr()
            if pending_inv is not None:
                e = _attach_inv_expr(e, pending_inv)
                pending_inv = None
            if self.at("punct", ";"):
                self.next()
                stmts.append(ol.ExprStmt(e, pos))
            elif self.at("punct", closer):
                value = e
            elif isinstance(e, (ol.IfExpr, ol.LoopExpr, ol.WhileExpr, ol.BlockExpr)):
                stmts.append(ol.ExprStmt(e, pos))
            else:
                raise FrontendError(self.peek().pos, "expected ';'")
        if pending_inv is not None:
            raise FrontendError(pending_inv[1], "invariant annotation without a following loop")
        return stmts, value

    def _attach_inv(self, s: Stmt, inv: Optional[tuple[str, Pos]]) -> Stmt:
        if inv is None:
            return s
        if isinstance(s, ol.LetStmt):
            return replace(s, init=_attach_inv_expr(s.init, inv))
        if isinstance(s, (ol.AssignStmt, ol.OpAssignStmt)):
            return replace(s, value=_attach_inv_expr(s.value, inv))
        raise FrontendError(inv[1], "invariant annotation without a following loop")

    def parse_let(self) -> Stmt:
        start = self.expect("ident", "let")
        mutable = False
        if self.at_kw("mut"):
            self.next()
            mutable = True
        name = self.expect("ident").value
        if name in _KEYWORDS:
            raise FrontendError(start.pos, f"{name!r} is a reserved word")
        ty = None
        if self.at("punct", ":"):
            self.next()
            ty = self.parse_type()
        self.expect("punct", "=")
        init = self.parse_expr()
        self.expect("punct", ";")
        return ol.LetStmt(name, mutable, ty, init, start.pos)

    def try_parse_assignment(self) -> Optional[Stmt]:
        """Lookahead for `place (=|+=|...) expr ;`; None if not one."""
        save = self.i
        t = self.peek()
        if not (t.kind == "ident" and t.value not in _KEYWORDS) \
                and not self.at("punct", "*"):
            return None
        try:
            lvalue = self.parse_place()
        except FrontendError:
            self.i = save
            return None
        op_tok = self.peek()
        if op_tok.kind != "punct" or op_tok.value not in _ASSIGN_OPS:
            self.i = save
            return None
        self.next()
        value = self.parse_expr()
        self.expect("punct", ";")
        if op_tok.value == "=":
            return ol.AssignStmt(lvalue, value, t.pos)
        return ol.OpAssignStmt(op_tok.value[0], lvalue, value, t.pos)

    def parse_place(self) -> Expr:
        if self.at("punct", "*"):
            self.next()
            name = self.expect("ident")
            if name.value in _KEYWORDS:
                raise FrontendError(name.pos, "expected a variable")
            return ol.Deref(ol.Var(name.value))
        name = self.expect("ident")
        if name.value in _KEYWORDS:
            raise FrontendError(name.pos, "expected a variable")
        e: Expr = ol.Var(name.value)
        while self.at("punct", "["):
            self.next()
            idx = self.parse_expr()
            self.expect("punct", "]")
            e = ol.Index(e, idx)
        return e

    # -- program expressions ------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        e = self.parse_and()
        while self.at("punct", "||"):
            self.next()
            e = ol.BinOp("||", e, self.parse_and())
        return e

    def parse_and(self) -> Expr:
        e = self.parse_cmp()
        while self.at("punct", "&&"):
            self.next()
            e = ol.BinOp("&&", e, self.parse_cmp())
        return e

    def parse_cmp(self) -> Expr:
        e = self.parse_add()
        t = self.peek()
        if t.kind == "punct" and t.value in _CMP_OPS:
            self.next()
            return ol.BinOp(t.value, e, self.parse_add())
        return e

    def parse_add(self) -> Expr:
        e = self.parse_mul()
        while self.peek().kind == "punct" and self.peek().value in ("+", "-"):
            op = self.next().value
            e = ol.BinOp(op, e, self.parse_mul())
        return e

    def parse_mul(self) -> Expr:
        e = self.parse_unary()
        while self.peek().kind == "punct" and self.peek().value in ("*", "/", "%"):
            op = self.next().value
            e = ol.BinOp(op, e, self.parse_unary())
        return e

    def parse_unary(self) -> Expr:
        t = self.peek()
        if self.at("punct", "-"):
            self.next()
            return ol.UnOp("-", self.parse_unary())
        if self.at("punct", "!"):
            self.next()
            return ol.UnOp("!", self.parse_unary())
        if self.at("punct", "&"):
            self.next()
            mutable = False
            if self.at_kw("mut"):
                self.next()
                mutable = True
            place = self.parse_postfix()
            return ol.Borrow(mutable, place)
        if self.at("punct", "*"):
            self.next()
            return ol.Deref(self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        e = self.parse_atom()
        while self.at("punct", "["):
            self.next()
            idx = self.parse_expr()
            self.expect("punct", "]")
            e = ol.Index(e, idx)
        return e

    def parse_atom(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return ol.Lit(t.value, None)
        if self.at_kw("true") or self.at_kw("false"):
            self.next()
            return ol.Lit(t.value == "true", ol.BOOL)
        if self.at("punct", "("):
            self.next()
            if self.at("punct", ")"):
                self.next()
                return ol.UNIT_LIT
            e = self.parse_expr()
            self.expect("punct", ")")
            return e
        if self.at("punct", "{"):
            return ol.BlockExpr(self.parse_block())
        if self.at_kw("if"):
            return self.parse_if()
        if self.at_kw("loop"):
            self.next()
            return ol.LoopExpr(self.parse_block())
        if self.at_kw("while"):
            self.next()
            cond = self.parse_expr()
            return ol.WhileExpr(cond, self.parse_block())
        if self.at_kw("break"):
            self.next()
            if self.at("punct", ";") or self.at("punct", "}"):
                return ol.BreakExpr(None)
            return ol.BreakExpr(self.parse_expr())
        if self.at_kw("continue"):
            self.next()
            return ol.ContinueExpr()
        if self.at_kw("panic"):
            self.next()
            self.expect("punct", "!")
            self.expect("punct", "(")
            self.expect("punct", ")")
            return ol.PanicExpr()
        if self.at_kw("return"):
            raise UnsupportedConstruct(t.pos, "return expressions are not supported")
        if t.kind == "ident" and t.value not in _KEYWORDS:
            self.next()
            if self.at("punct", "("):
                self.next()
                args: list[Expr] = []
                while not self.at("punct", ")"):
                    args.append(self.parse_expr())
                    if not self.at("punct", ")"):
                        self.expect("punct", ",")
                self.next()
                return ol.CallExpr(t.value, tuple(args))
            return ol.Var(t.value)
        raise FrontendError(t.pos, f"unexpected token {t.value!r}")

    def parse_if(self) -> Expr:
        self.expect("ident", "if")
        cond = self.parse_expr()
        then = self.parse_block()
        els: Optional[Block] = None
        if self.at_kw("else"):
            self.next()
            if self.at_kw("if"):
                nested = self.parse_if()
                els = Block((), nested)
            else:
                els = self.parse_block()
        return ol.IfExpr(cond, then, els)

    # -- specification formulas --------------------------------------------

    def spec_formula(self, ctx: _SpecCtx) -> lg.Formula:
        return self._as_formula(self.spec_iff(ctx), self.peek().pos)

    def spec_term(self, ctx: _SpecCtx) -> lg.Term:
        return self._as_term(self.spec_iff(ctx), self.peek().pos)

    def spec_iff(self, ctx: _SpecCtx):
        e = self.spec_imp(ctx)
        while self.at("punct", "<==>") or self.at("punct", "<->"):
            pos = self.next().pos
            rhs = self.spec_imp(ctx)
            e = lg.Iff(self._as_formula(e, pos), self._as_formula(rhs, pos))
        return e

    def spec_imp(self, ctx: _SpecCtx):
        e = self.spec_or(ctx)
        if self.at("punct", "==>") or self.at("punct", "->"):
            pos = self.next().pos
            rhs = self.spec_imp(ctx)  # right-associative
            return lg.Imp(self._as_formula(e, pos), self._as_formula(rhs, pos))
        return e

    def spec_or(self, ctx: _SpecCtx):
        e = self.spec_and(ctx)
        while self.at("punct", "||"):
            pos = self.next().pos
            rhs = self.spec_and(ctx)
            e = lg.Or(self._as_formula(e, pos), self._as_formula(rhs, pos))
        return e

    def spec_and(self, ctx: _SpecCtx):
        e = self.spec_cmp(ctx)
        while self.at("punct", "&&"):
            pos = self.next().pos
            rhs = self.spec_cmp(ctx)
            e = lg.And(self._as_formula(e, pos), self._as_formula(rhs, pos))
        return e

    def spec_cmp(self, ctx: _SpecCtx):
        e = self.spec_add(ctx)
        t = self.peek()
        if t.kind == "punct" and t.value in _CMP_OPS:
            self.next()
            a = self._as_term(e, t.pos)
            b = self._as_term(self.spec_add(ctx), t.pos)
            if t.value in ("<", "<=", ">", ">="):
                for x in (a, b):
                    if lg.term_sort(x) != lg.INT:
                        raise SpecSyntaxError(t.pos, f"{t.value} needs integer operands")
            elif lg.term_sort(a) != lg.term_sort(b):
                raise SpecSyntaxError(
                    t.pos, f"sort mismatch: {lg.term_sort(a)} vs {lg.term_sort(b)}")
            if t.value == "==":
                return lg.eq(a, b)
            if t.value == "!=":
                return lg.Not(lg.eq(a, b))
            if t.value == "<":
                return lg.lt(a, b)
            if t.value == "<=":
                return lg.le(a, b)
            if t.value == ">":
                return lg.lt(b, a)
            return lg.le(b, a)
        return e

    def spec_add(self, ctx: _SpecCtx):
        e = self.spec_mul(ctx)
        while self.peek().kind == "punct" and self.peek().value in ("+", "-"):
            t = self.next()
            a = self._as_term(e, t.pos)
            b = self._as_term(self.spec_mul(ctx), t.pos)
            e = lg.arith(t.value, a, b)
        return e

    def spec_mul(self, ctx: _SpecCtx):
        e = self.spec_unary(ctx)
        while self.peek().kind == "punct" and self.peek().value in ("*", "/", "%"):
            t = self.next()
            a = self._as_term(e, t.pos)
            b = self._as_term(self.spec_unary(ctx), t.pos)
            e = lg.arith(t.value, a, b)
        return e

    def spec_unary(self, ctx: _SpecCtx):
        t = self.peek()
        if self.at("punct", "!"):
            self.next()
            return lg.Not(self._as_formula(self.spec_unary(ctx), t.pos))
        if self.at("punct", "-"):
            self.next()
            v = self._as_term(self.spec_unary(ctx), t.pos)
            if isinstance(v, lg.IntLit):
                return lg.IntLit(-v.value)
            return lg.neg(v)
        if self.at("punct", "*"):
            self.next()
            v = self._as_term(self.spec_postfix(ctx), t.pos)
            return self._spec_deref(v, t.pos)
        return self.spec_postfix(ctx)

    def _spec_deref(self, v: lg.Term, pos: Pos) -> lg.Term:
        s = lg.term_sort(v)
        if isinstance(s, lg.RefSort):
            return lg.deref_mut(v) if s.mutable else lg.deref_shared(v)
        raise SpecSyntaxError(pos, f"cannot dereference a term of sort {s}")

    def spec_postfix(self, ctx: _SpecCtx):
        e = self.spec_atom(ctx)
        while self.at("punct", "["):
            t = self.next()
            i = self._as_term(self.spec_iff(ctx), t.pos)
            self.expect("punct", "]")
            a = self._as_term(e, t.pos)
            s = lg.term_sort(a)
            if isinstance(s, lg.RefSort) and isinstance(s.inner, lg.ArraySort):
                a = self._spec_deref(a, t.pos)
                s = lg.term_sort(a)
            if not isinstance(s, lg.ArraySort):
                raise SpecSyntaxError(t.pos, f"cannot index a term of sort {s}")
            e = lg.arr_get(a, lg.idx(i))
        return e

    def spec_atom(self, ctx: _SpecCtx):
        t = self.peek()
        if t.kind == "int":
            self.next()
            return lg.IntLit(t.value)
        if self.at_kw("true"):
            self.next()
            return lg.Top()
        if self.at_kw("false"):
            self.next()
            return lg.Bottom()
        if self.at("punct", "("):
            self.next()
            if self.at("punct", ")"):
                self.next()
                return lg.UnitLit()
            e = self.spec_iff(ctx)
            self.expect("punct", ")")
            return e
        if ctx.allow_modality and (self.at("punct", "[") or self.at("punct", "<")):
            return self.spec_modality(ctx)
        if self.at_kw("forall") or self.at_kw("exists"):
            kind = self.next().value
            name = self.expect("ident").value
            self.expect("punct", ":")
            sort_tok = self.expect("ident")
            if sort_tok.value == "int":
                sort = lg.INT
            elif sort_tok.value == "bool":
                sort = lg.BOOL
            else:
                raise SpecSyntaxError(sort_tok.pos,
                                      "quantification is over int or bool only")
            self.expect("punct", "::")
            var = lg.LogicVar(name, sort)
            old = ctx.bound.get(name)
            ctx.bound[name] = var
            try:
                body = self._as_formula(self.spec_imp(ctx), t.pos)
            finally:
                if old is None:
                    del ctx.bound[name]
                else:
                    ctx.bound[name] = old
            return (lg.Forall if kind == "forall" else lg.Exists)(var, body)
        if t.kind == "ident" and t.value.startswith("inRange_"):
            suffix = t.value[len("inRange_"):]
            if suffix in ol.INT_TYPES:
                self.next()
                self.expect("punct", "(")
                arg = self._as_term(self.spec_iff(ctx), t.pos)
                self.expect("punct", ")")
                return lg.in_range(ol.INT_TYPES[suffix], arg)
        if t.kind == "ident":
            name = t.value
            if name == "res":
                self.next()
                if not ctx.allow_res or ctx.ret is None:
                    raise SpecSyntaxError(t.pos, "res is only available in postconditions")
                return lg.ProgVar("res", ctx.ret)
            if name in ctx.bound:
                self.next()
                return ctx.bound[name]
            if name in ctx.scope:
                self.next()
                return lg.ProgVar(name, ctx.scope[name])
            if name not in _KEYWORDS:
                raise SpecSyntaxError(t.pos, f"unknown identifier {name!r}")
        raise SpecSyntaxError(t.pos, f"unexpected token {t.value!r} in specification")

    def spec_modality(self, ctx: _SpecCtx) -> lg.Formula:
        opener = self.next()
        box = opener.value == "["
        closer = "]" if box else ">"
        self.expect("punct", "{")
        stmts, value = self.parse_stmt_list_until("}")
        self.expect("punct", "}")
        if value is not None:
            # a trailing expression contributes only its effects here
            stmts.append(ol.ExprStmt(value))
        self.expect("punct", closer)
        # explicitly typed lets become visible to the postcondition
        for name, ty in _collect_typed_lets(stmts).items():
            ctx.scope.setdefault(name, ty)
        post = self._as_formula(self.spec_unary(ctx), opener.pos)
        cls = lg.Box if box else lg.Dia
        return cls(tuple(stmts), post)

    # -- coercions ----------------------------------------------------------

    def _as_formula(self, x, pos: Pos) -> lg.Formula:
        if isinstance(x, lg.Formula):
            return x
        if isinstance(x, lg.BoolLit):
            return lg.Top() if x.value else lg.Bottom()
        if isinstance(x, lg.Term) and lg.term_sort(x) == lg.BOOL:
            return lg.eq(x, lg.BoolLit(True))
        raise SpecSyntaxError(pos, "expected a formula")

    def _as_term(self, x, pos: Pos) -> lg.Term:
        if isinstance(x, lg.Term):
            return x
        if isinstance(x, lg.Top):
            return lg.BoolLit(True)
        if isinstance(x, lg.Bottom):
            return lg.BoolLit(False)
        raise SpecSyntaxError(pos, "expected a term")


def _collect_typed_lets(stmts: Sequence[Stmt]) -> dict[str, ObjType]:
    out: dict[str, ObjType] = {}

    def from_block(b: Block) -> None:
        for s in b.stmts:
            from_stmt(s)
        if b.value is not None:
            from_expr(b.value)

    def from_stmt(s: Stmt) -> None:
        if isinstance(s, ol.LetStmt):
            if s.ty is not None:
                out.setdefault(s.name, s.ty)
            from_expr(s.init)
        elif isinstance(s, ol.ExprStmt):
            from_expr(s.expr)

    def from_expr(e: Expr) -> None:
        if isinstance(e, ol.IfExpr):
            from_block(e.then)
            if e.els is not None:
                from_block(e.els)
        elif isinstance(e, (ol.LoopExpr, ol.WhileExpr)):
            from_block(e.body)
        elif isinstance(e, ol.BlockExpr):
            from_block(e.block)

    for s in stmts:
        from_stmt(s)
    return out


def _attach_inv_expr(e: Expr, inv: tuple[str, Pos]) -> Expr:
    text, pos = inv
    spec = RawSpec("invariant", text, pos)
    if isinstance(e, ol.LoopExpr):
        return replace(e, spec=spec)
    if isinstance(e, ol.WhileExpr):
        return replace(e, spec=spec)
    raise FrontendError(pos, "invariant annotation without a following loop")


# ---------------------------------------------------------------------------
# Type checking
# ---------------------------------------------------------------------------


def _diverges(e: Expr) -> bool:
    return isinstance(e, (ol.BreakExpr, ol.ContinueExpr, ol.PanicExpr))


def _is_bare_int_lit(e: Expr) -> bool:
    return isinstance(e, ol.Lit) and isinstance(e.value, int) \
        and not isinstance(e.value, bool) and e.ty is None


class _Checker:
    def __init__(self, sigs: dict[str, tuple[tuple[tuple[str, ObjType], ...], ObjType]],
                 diags: list[Diagnostic]) -> None:
        self.sigs = sigs
        self.diags = diags
        self.env: dict[str, ObjType] = {}
        self.loop_stack: list[list[ObjType]] = []

    def err(self, pos: Pos, msg: str) -> None:
        self.diags.append(Diagnostic(pos, msg))

    def check_fn(self, raw: _RawFn) -> FnDecl:
        self.env = dict(raw.params)
        if len(self.env) != len(raw.params):
            self.err(raw.pos, f"duplicate parameter names in fn {raw.name}")
        body, bty = self.block(raw.body, raw.ret)
        if bty != raw.ret and not (raw.ret == ol.UNIT and body.value is None):
            if body.value is None or not _diverges(body.value):
                self.err(raw.pos, f"fn {raw.name} body has type {bty}, declared {raw.ret}")
        contract = self.resolve_contract(raw)
        return FnDecl(raw.name, tuple(raw.params), raw.ret, body, contract,
                      dict(self.env), raw.pos)

    def resolve_contract(self, raw: _RawFn) -> Optional[Contract]:
        if not raw.requires and not raw.ensures and raw.decreases is None:
            return None
        scope = dict(raw.params)
        pres: list[lg.Formula] = []
        for text, pos in raw.requires:
            pres.append(self.parse_spec_text(text, pos, scope, False, raw.ret))
        posts: list[lg.Formula] = []
        for text, pos in raw.ensures:
            posts.append(self.parse_spec_text(text, pos, scope, True, raw.ret))
        dec = None
        dec_text = ""
        if raw.decreases is not None:
            text, pos = raw.decreases
            dec_text = text
            try:
                dec = parse_spec_term(text, scope)
                if lg.term_sort(dec) != lg.INT:
                    self.err(pos, "decreases clause must be an integer term")
                    dec = None
            except FrontendError as e:
                self.err(e.pos, e.message)
        return Contract(
            pre=lg.conj(*pres) if pres else lg.Top(),
            post=lg.conj(*posts) if posts else lg.Top(),
            decreases=dec,
            pre_text=" && ".join(t for t, _ in raw.requires) or "true",
            post_text=" && ".join(t for t, _ in raw.ensures) or "true",
            decreases_text=dec_text,
        )

    def parse_spec_text(self, text: str, pos: Pos, scope: dict[str, ObjType],
                        allow_res: bool, ret: Optional[ObjType]) -> lg.Formula:
        try:
            return parse_spec(text, scope, allow_res=allow_res, ret=ret)
        except FrontendError as e:
            self.err(pos, f"in specification: {e.message}")
            return lg.Top()

    # -- blocks and statements ----------------------------------------------

    def block(self, b: Block, expected: Optional[ObjType]) -> tuple[Block, ObjType]:
        stmts = tuple(self.stmt(s) for s in b.stmts)
        if b.value is None:
            return Block(stmts, None), ol.UNIT
        v, vt = self.expr(b.value, expected)
        return Block(stmts, v), vt

    def stmt(self, s: Stmt) -> Stmt:
        if isinstance(s, ol.LetStmt):
            init, ity = self.expr(s.init, s.ty)
            ty = s.ty if s.ty is not None else ity
            if s.name in self.env:
                self.err(s.pos, f"redeclaration of {s.name!r} (shadowing is not supported)")
            if s.ty is not None and ity != s.ty and not _diverges(init):
                self.err(s.pos, f"let {s.name}: declared {s.ty}, initializer has {ity}")
            self.env[s.name] = ty
            return ol.LetStmt(s.name, s.mutable, ty, init, s.pos)
        if isinstance(s, (ol.AssignStmt, ol.OpAssignStmt)):
            lv, lt = self.expr(s.lvalue, None, lvalue=True)
            v, vt = self.expr(s.value, lt)
            if isinstance(s, ol.OpAssignStmt):
                if not isinstance(lt, ol.IntTy):
                    self.err(s.pos, f"compound assignment needs an integer place, got {lt}")
                return ol.OpAssignStmt(s.op, lv, v, s.pos)
            if vt != lt and not _diverges(v):
                self.err(s.pos, f"assignment of {vt} to a place of type {lt}")
            return ol.AssignStmt(lv, v, s.pos)
        if isinstance(s, ol.ExprStmt):
            e, _ = self.expr(s.expr, None)
            return ol.ExprStmt(e, s.pos)
        raise FrontendError(NO_POS, f"unknown statement {type(s).__name__}")

    # -- expressions ---------------------------------------------------------

    def expr(self, e: Expr, expected: Optional[ObjType],
             lvalue: bool = False) -> tuple[Expr, ObjType]:
        if isinstance(e, ol.Lit):
            if e.value is None:
                return e, ol.UNIT
            if isinstance(e.value, bool):
                return ol.Lit(e.value, ol.BOOL), ol.BOOL
            ty = expected if isinstance(expected, ol.IntTy) else \
                (e.ty if isinstance(e.ty, ol.IntTy) else ol.I32)
            return ol.Lit(e.value, ty), ty
        if isinstance(e, ol.Var):
            ty = self.env.get(e.name)
            if ty is None:
                self.err(NO_POS, f"unknown variable {e.name!r}")
                ty = expected or ol.I32
                self.env[e.name] = ty
            return e, ty
        if isinstance(e, ol.BinOp):
            return self.binop(e, expected)
        if isinstance(e, ol.UnOp):
            if e.op == "!":
                v, vt = self.expr(e.operand, ol.BOOL)
                if vt != ol.BOOL:
                    self.err(NO_POS, "! needs a bool operand")
                return ol.UnOp("!", v), ol.BOOL
            v, vt = self.expr(e.operand, expected if isinstance(expected, ol.IntTy) else None)
            if not isinstance(vt, ol.IntTy):
                self.err(NO_POS, "unary - needs an integer operand")
                vt = ol.I32
            return ol.UnOp("-", v), vt
        if isinstance(e, ol.Borrow):
            p, pt = self.expr(e.place, None, lvalue=True)
            return ol.Borrow(e.mutable, p), ol.RefTy(pt, e.mutable)
        if isinstance(e, ol.Deref):
            v, vt = self.expr(e.operand, None)
            if not isinstance(vt, ol.RefTy):
                self.err(NO_POS, f"cannot dereference a value of type {vt}")
                return ol.Deref(v), expected or ol.I32
            return ol.Deref(v), vt.inner
        if isinstance(e, ol.Index):
            base, bt = self.expr(e.base, None, lvalue=lvalue)
            inner = bt.inner if isinstance(bt, ol.RefTy) else bt
            idx, it = self.expr(e.index, None)
            if not isinstance(it, ol.IntTy):
                self.err(NO_POS, "array index must be an integer")
            if not isinstance(inner, ol.ArrayTy):
                self.err(NO_POS, f"cannot index a value of type {bt}")
                return ol.Index(base, idx), expected or ol.I32
            return ol.Index(base, idx), inner.elem
        if isinstance(e, ol.IfExpr):
            cond, ct = self.expr(e.cond, ol.BOOL)
            if ct != ol.BOOL:
                self.err(NO_POS, "if condition must be bool")
            then, tt = self.block(e.then, expected)
            if e.els is None:
                if tt != ol.UNIT and (then.value is None or not _diverges(then.value)):
                    self.err(NO_POS, "if without else must have unit type")
                return ol.IfExpr(cond, then, None), ol.UNIT
            els, et = self.block(e.els, expected)
            ty = tt
            if tt != et:
                if then.value is not None and _diverges(then.value):
                    ty = et
                elif els.value is not None and _diverges(els.value):
                    ty = tt
                else:
                    self.err(NO_POS, f"if branches have different types {tt} / {et}")
            return ol.IfExpr(cond, then, els), ty
        if isinstance(e, ol.LoopExpr):
            self.loop_stack.append([])
            inv_scope = dict(self.env)
            body, _ = self.block(e.body, None)
            breaks = self.loop_stack.pop()
            ty = breaks[0] if breaks else ol.UNIT
            spec = self.resolve_loop_spec(e.spec, inv_scope)
            return ol.LoopExpr(body, spec), ty
        if isinstance(e, ol.WhileExpr):
            cond, ct = self.expr(e.cond, ol.BOOL)
            if ct != ol.BOOL:
                self.err(NO_POS, "while condition must be bool")
            self.loop_stack.append([])
            inv_scope = dict(self.env)
            body, _ = self.block(e.body, None)
            self.loop_stack.pop()
            spec = self.resolve_loop_spec(e.spec, inv_scope)
            return ol.WhileExpr(cond, body, spec), ol.UNIT
        if isinstance(e, ol.BreakExpr):
            if e.value is None:
                return e, ol.UNIT
            v, vt = self.expr(e.value, None)
            if self.loop_stack:
                self.loop_stack[-1].append(vt)
            else:
                self.err(NO_POS, "break outside a loop")
            return ol.BreakExpr(v), ol.UNIT
        if isinstance(e, ol.ContinueExpr):
            if not self.loop_stack:
                self.err(NO_POS, "continue outside a loop")
            return e, ol.UNIT
        if isinstance(e, ol.CallExpr):
            sig = self.sigs.get(e.name)
            if sig is None:
                self.err(NO_POS, f"call of unknown function {e.name!r}")
                return e, expected or ol.I32
            params, ret = sig
            if len(params) != len(e.args):
                self.err(NO_POS, f"{e.name} expects {len(params)} arguments")
            args = []
            for a, (_, pt) in zip(e.args, params):
                a2, at = self.expr(a, pt)
                if at != pt:
                    self.err(NO_POS, f"argument of type {at} where {pt} expected")
                args.append(a2)
            return ol.CallExpr(e.name, tuple(args)), ret
        if isinstance(e, ol.PanicExpr):
            return e, expected or ol.UNIT
        if isinstance(e, ol.BlockExpr):
            b, bt = self.block(e.block, expected)
            return ol.BlockExpr(b), bt
        raise FrontendError(NO_POS, f"unknown expression {type(e).__name__}")

    def binop(self, e: ol.BinOp, expected: Optional[ObjType]) -> tuple[Expr, ObjType]:
        op = e.op
        if op in ("&&", "||"):
            l, lt = self.expr(e.left, ol.BOOL)
            r, rt = self.expr(e.right, ol.BOOL)
            if lt != ol.BOOL or rt != ol.BOOL:
                self.err(NO_POS, f"{op} needs bool operands")
            return ol.BinOp(op, l, r), ol.BOOL
        hint = expected if op not in _CMP_OPS and isinstance(expected, ol.IntTy) else None
        # type bare literals from the other operand where possible
        if _is_bare_int_lit(e.left) and not _is_bare_int_lit(e.right):
            r, rt = self.expr(e.right, hint)
            l, lt = self.expr(e.left, rt if isinstance(rt, ol.IntTy) else hint)
        else:
            l, lt = self.expr(e.left, hint)
            r, rt = self.expr(e.right, lt if isinstance(lt, ol.IntTy) else hint)
        if op in _CMP_OPS:
            if op in ("<", "<=", ">", ">="):
                if not (isinstance(lt, ol.IntTy) and lt == rt):
                    self.err(NO_POS, f"{op} needs matching integer operands")
            elif lt != rt:
                self.err(NO_POS, f"{op} compares values of different types {lt} / {rt}")
            return ol.BinOp(op, l, r), ol.BOOL
        if not (isinstance(lt, ol.IntTy) and lt == rt):
            self.err(NO_POS, f"{op} needs matching integer operands, got {lt} / {rt}")
            return ol.BinOp(op, l, r), lt if isinstance(lt, ol.IntTy) else ol.I32
        return ol.BinOp(op, l, r), lt

    def resolve_loop_spec(self, spec: object, scope: dict[str, ObjType]) -> object:
        if not isinstance(spec, RawSpec):
            return spec
        try:
            inv = parse_spec(spec.text, scope, allow_res=False)
        except FrontendError as e:
            self.err(spec.pos, f"in invariant: {e.message}")
            return None
        return ol.LoopSpec(inv, spec.text)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def parse_spec(text: str, scope, allow_res: bool = False,
               ret: Optional[ObjType] = None) -> lg.Formula:
    """Parse a specification formula against a typing scope."""
    scope = dict(scope)
    if allow_res and ret is None:
        raise ValueError("allow_res requires the function return type")
    p = _Parser(_lex(text))
    f = p.spec_formula(_SpecCtx(scope, allow_res, ret, False, {}))
    p.expect_eof()
    errs = lg.wellformed(f)
    if errs:
        raise SpecSyntaxError((1, 1), "; ".join(errs))
    return f


def parse_spec_term(text: str, scope) -> lg.Term:
    p = _Parser(_lex(text))
    t = p.spec_term(_SpecCtx(dict(scope), False, None, False, {}))
    p.expect_eof()
    return t


def parse_unit(source_text: str) -> SourceUnit:
    """Parse and typecheck an annotated source file."""
    diags: list[Diagnostic] = []
    try:
        raws = _Parser(_lex(source_text)).parse_raw_unit()
    except FrontendError as e:
        return SourceUnit((), (Diagnostic(e.pos, e.message),))
    seen: set[str] = set()
    for raw in raws:
        if raw.name in seen:
            diags.append(Diagnostic(raw.pos, f"duplicate function name {raw.name!r}"))
        seen.add(raw.name)
    sigs = {raw.name: (tuple(raw.params), raw.ret) for raw in raws}
    fns = []
    for raw in raws:
        checker = _Checker(sigs, diags)
        fns.append(checker.check_fn(raw))
    return SourceUnit(tuple(fns), tuple(diags))


def parse_rdl(source_text: str) -> RdlProblem:
    """Parse a proof-obligation file: `\\vars { x: i32; ... }` (optional)
    followed by `\\problem { formula }`."""
    var_types: dict[str, ObjType] = {}
    rest = source_text
    vars_body = _extract_section(source_text, "\\vars")
    if vars_body is not None:
        p = _Parser(_lex(vars_body))
        while not p.at("eof"):
            name = p.expect("ident").value
            p.expect("punct", ":")
            var_types[name] = p.parse_type()
            if p.at("punct", ";") or p.at("punct", ","):
                p.next()
    problem_body = _extract_section(source_text, "\\problem")
    if problem_body is None:
        raise FrontendError((1, 1), "missing \\problem section")
    p = _Parser(_lex(problem_body))
    ctx = _SpecCtx(dict(var_types), False, None, True, {})
    raw_formula = p.spec_formula(ctx)
    p.expect_eof()
    diags: list[Diagnostic] = []
    formula = _check_modal_programs(raw_formula, var_types, diags)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise FrontendError(errors[0].pos, errors[0].message)
    errs = lg.wellformed(formula)
    if errs:
        raise SpecSyntaxError((1, 1), "; ".join(errs))
    return RdlProblem(formula, var_types, source_text)


def _extract_section(text: str, marker: str) -> Optional[str]:
    at = text.find(marker)
    if at == -1:
        return None
    brace = text.find("{", at + len(marker))
    if brace == -1:
        raise FrontendError((1, 1), f"{marker} without a brace block")
    depth = 0
    for j in range(brace, len(text)):
        if text[j] == "{":
            depth += 1
        elif text[j] == "}":
            depth -= 1
            if depth == 0:
                return text[brace + 1:j]
    raise FrontendError((1, 1), f"unbalanced braces after {marker}")


def _check_modal_programs(f: lg.Formula, var_types: dict[str, ObjType],
                          diags: list[Diagnostic]) -> lg.Formula:
    """Typecheck and normalize the programs embedded in modalities."""

    def go(n):
        if isinstance(n, (lg.Box, lg.Dia)):
            checker = _Checker({}, diags)
            checker.env = dict(var_types)
            block, _ = checker.block(Block(n.program, None), None)
            for name, ty in checker.env.items():
                var_types.setdefault(name, ty)
            prog = tuple(normalize_stmt(s) for s in block.stmts)
            return type(n)(prog, go(n.post))
        kids = lg.children(n)
        if not kids:
            return n
        new = tuple(go(c) if isinstance(c, lg.Node) else c for c in kids)
        return lg.with_children(n, new)

    return go(f)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


def normalize(unit: SourceUnit) -> SourceUnit:
    """Desugar while loops, compound assignments, and implicit else blocks."""
    fns = tuple(replace(f, body=normalize_block(f.body)) for f in unit.functions)
    return SourceUnit(fns, unit.diagnostics)


def normalize_block(b: Block) -> Block:
    stmts = tuple(normalize_stmt(s) for s in b.stmts)
    value = normalize_expr(b.value) if b.value is not None else None
    return Block(stmts, value)


def normalize_stmt(s: Stmt) -> Stmt:
    if isinstance(s, ol.LetStmt):
        return replace(s, init=normalize_expr(s.init))
    if isinstance(s, ol.OpAssignStmt):
        lv = normalize_expr(s.lvalue)
        rhs = ol.BinOp(s.op, lv, normalize_expr(s.value))
        return ol.AssignStmt(lv, rhs, s.pos)
    if isinstance(s, ol.AssignStmt):
        return ol.AssignStmt(normalize_expr(s.lvalue), normalize_expr(s.value), s.pos)
    if isinstance(s, ol.ExprStmt):
        return ol.ExprStmt(normalize_expr(s.expr), s.pos)
    return s


def normalize_expr(e: Expr) -> Expr:
    if isinstance(e, ol.WhileExpr):
        cond = normalize_expr(e.cond)
        body = normalize_block(e.body)
        brk = Block((ol.ExprStmt(ol.BreakExpr(None)),), None)
        guard = ol.IfExpr(cond, body, brk)
        return ol.LoopExpr(Block((ol.ExprStmt(guard),), None), e.spec)
    if isinstance(e, ol.LoopExpr):
        return ol.LoopExpr(normalize_block(e.body), e.spec)
    if isinstance(e, ol.IfExpr):
        els = normalize_block(e.els) if e.els is not None else Block((), None)
        return ol.IfExpr(normalize_expr(e.cond), normalize_block(e.then), els)
    if isinstance(e, ol.BinOp):
        return ol.BinOp(e.op, normalize_expr(e.left), normalize_expr(e.right))
    if isinstance(e, ol.UnOp):
        return ol.UnOp(e.op, normalize_expr(e.operand))
    if isinstance(e, ol.Borrow):
        return ol.Borrow(e.mutable, normalize_expr(e.place))
    if isinstance(e, ol.Deref):
        return ol.Deref(normalize_expr(e.operand))
    if isinstance(e, ol.Index):
        return ol.Index(normalize_expr(e.base), normalize_expr(e.index))
    if isinstance(e, ol.BreakExpr):
        return ol.BreakExpr(normalize_expr(e.value)) if e.value is not None else e
    if isinstance(e, ol.CallExpr):
        return ol.CallExpr(e.name, tuple(normalize_expr(a) for a in e.args))
    if isinstance(e, ol.BlockExpr):
        return ol.BlockExpr(normalize_block(e.block))
    if isinstance(e, ol.LoopScopeExpr):
        return ol.LoopScopeExpr(e.index_var, normalize_block(e.body))
    return e


# ---------------------------------------------------------------------------
# Ownership lint (approximate; soundness assumes compiler-accepted input)
# ---------------------------------------------------------------------------


def lint(unit: SourceUnit) -> list[Diagnostic]:
    warnings: list[Diagnostic] = []
    for fn in unit.functions:
        _lint_block(fn, fn.body, set(), warnings)
    return warnings


def _lint_block(fn: FnDecl, b: Block, moved: set[str],
                warnings: list[Diagnostic]) -> None:
    mut_borrows: dict[str, int] = {}
    for s in b.stmts:
        _lint_stmt(fn, s, moved, mut_borrows, warnings)
    if b.value is not None:
        _lint_expr(fn, b.value, moved, mut_borrows, warnings, consume=True)


def _lint_stmt(fn, s, moved, mut_borrows, warnings) -> None:
    if isinstance(s, ol.LetStmt):
        _lint_expr(fn, s.init, moved, mut_borrows, warnings, consume=True)
        moved.discard(s.name)
    elif isinstance(s, (ol.AssignStmt, ol.OpAssignStmt)):
        _lint_expr(fn, s.value, moved, mut_borrows, warnings, consume=True)
        if isinstance(s.lvalue, ol.Var):
            moved.discard(s.lvalue.name)
    elif isinstance(s, ol.ExprStmt):
        _lint_expr(fn, s.expr, moved, mut_borrows, warnings, consume=False)


def _lint_expr(fn, e, moved, mut_borrows, warnings, consume: bool) -> None:
    if isinstance(e, ol.Var):
        if e.name in moved:
            warnings.append(Diagnostic(
                NO_POS, f"in fn {fn.name}: read of possibly moved-from variable {e.name!r}",
                "warning"))
        ty = fn.var_types.get(e.name)
        if consume and ty is not None and not ol.is_copy(ty):
            moved.add(e.name)
        return
    if isinstance(e, ol.Borrow):
        if e.mutable and isinstance(e.place, ol.Var):
            n = mut_borrows.get(e.place.name, 0) + 1
            mut_borrows[e.place.name] = n
            if n > 1:
                warnings.append(Diagnostic(
                    NO_POS,
                    f"in fn {fn.name}: more than one mutable borrow of {e.place.name!r} "
                    "in the same block", "warning"))
        _lint_expr(fn, e.place, moved, mut_borrows, warnings, consume=False)
        return
    if isinstance(e, (ol.IfExpr,)):
        _lint_expr(fn, e.cond, moved, mut_borrows, warnings, consume=False)
        for branch in (e.then, e.els):
            if branch is not None:
                _lint_block(fn, branch, set(moved), warnings)
        return
    if isinstance(e, (ol.LoopExpr, ol.WhileExpr)):
        if isinstance(e, ol.WhileExpr):
            _lint_expr(fn, e.cond, moved, mut_borrows, warnings, consume=False)
        _lint_block(fn, e.body, set(moved), warnings)
        return
    if isinstance(e, ol.BlockExpr):
        _lint_block(fn, e.block, moved, warnings)
        return
    for name in ("left", "right", "operand", "base", "index", "value"):
        sub = getattr(e, name, None)
        if isinstance(sub, Expr):
            _lint_expr(fn, sub, moved, mut_borrows, warnings, consume=consume)
    if isinstance(e, ol.CallExpr):
        for a in e.args:
            _lint_expr(fn, a, moved, mut_borrows, warnings, consume=True)


# ---------------------------------------------------------------------------
# Pretty printing (re-parseable, newline-based)
# ---------------------------------------------------------------------------

_IND = "    "


def unit_to_str(unit: SourceUnit) -> str:
    return "\n\n".join(fn_to_str(f) for f in unit.functions) + "\n"


def fn_to_str(fn: FnDecl) -> str:
    lines: list[str] = []
    if fn.contract is not None:
        c = fn.contract
        lines.append(f"//@ requires {c.pre_text}")
        lines.append(f"//@ ensures {c.post_text}")
        if c.decreases is not None:
            lines.append(f"//@ decreases {c.decreases_text}")
    params = ", ".join(f"{n}: {t}" for n, t in fn.params)
    ret = "" if fn.ret == ol.UNIT else f" -> {fn.ret}"
    lines.append(f"fn {fn.name}({params}){ret} {{")
    lines.extend(_block_body_lines(fn.body, _IND))
    lines.append("}")
    return "\n".join(lines)


def _block_body_lines(b: Block, ind: str) -> list[str]:
    out: list[str] = []
    for s in b.stmts:
        out.extend(_stmt_lines(s, ind))
    if b.value is not None:
        out.extend(_expr_lines(b.value, ind))
    return out


def _stmt_lines(s: Stmt, ind: str) -> list[str]:
    if isinstance(s, ol.LetStmt):
        mut = "mut " if s.mutable else ""
        ty = f": {s.ty}" if s.ty is not None else ""
        head = f"{ind}let {mut}{s.name}{ty} = "
        return _with_head(head, s.init, ind, ";")
    if isinstance(s, ol.AssignStmt):
        head = f"{ind}{_inline(s.lvalue)} = "
        return _with_head(head, s.value, ind, ";")
    if isinstance(s, ol.OpAssignStmt):
        head = f"{ind}{_inline(s.lvalue)} {s.op}= "
        return _with_head(head, s.value, ind, ";")
    if isinstance(s, ol.ExprStmt):
        lines = _expr_lines(s.expr, ind)
        if not isinstance(s.expr, (ol.IfExpr, ol.LoopExpr, ol.WhileExpr, ol.BlockExpr)):
            lines[-1] += ";"
        return lines
    raise TypeError(f"unknown statement {s!r}")


def _with_head(head: str, e: Expr, ind: str, tail: str) -> list[str]:
    lines = _expr_lines(e, ind)
    lines[0] = head + lines[0].lstrip()
    lines[-1] += tail
    return lines


def _spec_comment(spec: object, ind: str) -> list[str]:
    if isinstance(spec, RawSpec):
        return [f"{ind}//@ invariant {spec.text}"]
    if isinstance(spec, ol.LoopSpec):
        text = spec.text or lg.pretty(spec.invariant)
        return [f"{ind}//@ invariant {text}"]
    return []


def _expr_lines(e: Expr, ind: str) -> list[str]:
    if isinstance(e, ol.IfExpr):
        lines = [f"{ind}if {_inline(e.cond)} {{"]
        lines.extend(_block_body_lines(e.then, ind + _IND))
        if e.els is not None:
            lines.append(f"{ind}}} else {{")
            lines.extend(_block_body_lines(e.els, ind + _IND))
        lines.append(f"{ind}}}")
        return lines
    if isinstance(e, ol.LoopExpr):
        lines = _spec_comment(e.spec, ind)
        lines.append(f"{ind}loop {{")
        lines.extend(_block_body_lines(e.body, ind + _IND))
        lines.append(f"{ind}}}")
        return lines
    if isinstance(e, ol.WhileExpr):
        lines = _spec_comment(e.spec, ind)
        lines.append(f"{ind}while {_inline(e.cond)} {{")
        lines.extend(_block_body_lines(e.body, ind + _IND))
        lines.append(f"{ind}}}")
        return lines
    if isinstance(e, ol.BlockExpr):
        lines = [f"{ind}{{"]
        lines.extend(_block_body_lines(e.block, ind + _IND))
        lines.append(f"{ind}}}")
        return lines
    return [f"{ind}{_inline(e)}"]


def _inline(e: Expr) -> str:
    if isinstance(e, ol.Lit):
        if e.value is None:
            return "()"
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, ol.Var):
        return e.name
    if isinstance(e, ol.BinOp):
        return f"{_inline_atom(e.left, e.op)} {e.op} {_inline_atom(e.right, e.op)}"
    if isinstance(e, ol.UnOp):
        return f"{e.op}{_inline_atom(e.operand, 'unary')}"
    if isinstance(e, ol.Borrow):
        return ("&mut " if e.mutable else "&") + _inline(e.place)
    if isinstance(e, ol.Deref):
        return "*" + _inline_atom(e.operand, "unary")
    if isinstance(e, ol.Index):
        return f"{_inline_atom(e.base, 'postfix')}[{_inline(e.index)}]"
    if isinstance(e, ol.BreakExpr):
        return "break" if e.value is None else f"break {_inline(e.value)}"
    if isinstance(e, ol.ContinueExpr):
        return "continue"
    if isinstance(e, ol.CallExpr):
        return f"{e.name}({', '.join(_inline(a) for a in e.args)})"
    if isinstance(e, ol.PanicExpr):
        return "panic!()"
    if isinstance(e, ol.IfExpr):
        s = f"if {_inline(e.cond)} {{ {_inline_block(e.then)} }}"
        if e.els is not None:
            s += f" else {{ {_inline_block(e.els)} }}"
        return s
    raise TypeError(f"cannot inline {type(e).__name__}")


_PRECEDENCE = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3,
               ">=": 3, "+": 4, "-": 4, "*": 5, "/": 5, "%": 5,
               "unary": 6, "postfix": 7}


def _inline_atom(e: Expr, parent_op: str) -> str:
    s = _inline(e)
    if isinstance(e, ol.BinOp):
        if _PRECEDENCE.get(e.op, 0) <= _PRECEDENCE.get(parent_op, 0):
            return f"({s})"
    elif isinstance(e, ol.UnOp) and parent_op == "postfix":
        return f"({s})"
    return s


def _inline_block(b: Block) -> str:
    parts = []
    for s in b.stmts:
        parts.append(" ".join(x.strip() for x in _stmt_lines(s, "")))
    if b.value is not None:
        parts.append(_inline(b.value))
    return " ".join(parts)
