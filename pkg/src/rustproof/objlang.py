"""Object-language AST: types, expressions, and statements of the verified subset.

The verifier works on a normalized form of this AST: `while` loops are
desugared to unconditional loops, compound assignments are expanded, and
every `if` carries an explicit else block. `LoopScopeExpr` is synthetic
and only ever produced by the calculus, never by the parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

Pos = tuple[int, int]
NO_POS: Pos = (0, 0)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


class ObjType:
    """Base class for object-language types."""


@dataclass(frozen=True)
class BoolTy(ObjType):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class UnitTy(ObjType):
    def __str__(self) -> str:
        return "()"


@dataclass(frozen=True)
class IntTy(ObjType):
    width: int
    signed: bool

    def __post_init__(self) -> None:
        if self.width not in (8, 16, 32, 64, 128):
            raise ValueError(f"bad integer width {self.width}")

    @property
    def min(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    @property
    def max(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    def __str__(self) -> str:
        return ("i" if self.signed else "u") + str(self.width)


@dataclass(frozen=True)
class ArrayTy(ObjType):
    elem: ObjType
    length: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("array length must be non-negative")

    def __str__(self) -> str:
        return f"[{self.elem}; {self.length}]"


@dataclass(frozen=True)
class RefTy(ObjType):
    inner: ObjType
    mutable: bool

    def __str__(self) -> str:
        return ("&mut " if self.mutable else "&") + str(self.inner)


BOOL = BoolTy()
UNIT = UnitTy()

INT_TYPES: dict[str, IntTy] = {}
for _w in (8, 16, 32, 64, 128):
    INT_TYPES[f"i{_w}"] = IntTy(_w, True)
    INT_TYPES[f"u{_w}"] = IntTy(_w, False)

I32 = INT_TYPES["i32"]
U32 = INT_TYPES["u32"]
U64 = INT_TYPES["u64"]


def is_copy(ty: ObjType) -> bool:
    """Copy semantics: everything except mutable references and arrays of them."""
    if isinstance(ty, RefTy):
        return not ty.mutable
    if isinstance(ty, ArrayTy):
        return is_copy(ty.elem)
    return True


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


class Expr:
    """Base class for expressions."""


class Stmt:
    """Base class for statements."""


@dataclass(frozen=True)
class Block:
    stmts: tuple[Stmt, ...]
    value: Optional[Expr]  # trailing expression, None for unit-valued blocks


@dataclass(frozen=True)
class Lit(Expr):
    value: object  # int, bool, or None for unit
    ty: ObjType


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # + - * / % == != < <= > >= && ||
    left: Expr
    right: Expr


@dataclass(frozen=True)
class UnOp(Expr):
    op: str  # "-" or "!"
    operand: Expr


@dataclass(frozen=True)
class Borrow(Expr):
    mutable: bool
    place: Expr  # Var or Index


@dataclass(frozen=True)
class Deref(Expr):
    operand: Expr


@dataclass(frozen=True)
class Index(Expr):
    base: Expr
    index: Expr


@dataclass(frozen=True)
class IfExpr(Expr):
    cond: Expr
    then: Block
    els: Optional[Block]  # filled in by normalize


@dataclass(frozen=True)
class LoopExpr(Expr):
    body: Block
    spec: Optional[object] = None  # LoopSpec once resolved, RawSpec before


@dataclass(frozen=True)
class WhileExpr(Expr):
    """Only present before normalization."""

    cond: Expr
    body: Block
    spec: Optional[object] = None


@dataclass(frozen=True)
class BreakExpr(Expr):
    value: Optional[Expr]


@dataclass(frozen=True)
class ContinueExpr(Expr):
    pass


@dataclass(frozen=True)
class CallExpr(Expr):
    name: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class PanicExpr(Expr):
    pass


@dataclass(frozen=True)
class BlockExpr(Expr):
    block: Block


@dataclass(frozen=True)
class LoopScopeExpr(Expr):
    """Synthetic single-iteration loop wrapper; the boolean index variable
    records whether the loop exited (true) or keeps iterating (false)."""

    index_var: str
    body: Block


UNIT_LIT = Lit(None, UNIT)


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LetStmt(Stmt):
    name: str
    mutable: bool
    ty: Optional[ObjType]
    init: Expr
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class AssignStmt(Stmt):
    lvalue: Expr  # Var, Deref(Var), or Index(Var, e)
    value: Expr
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class OpAssignStmt(Stmt):
    """Compound assignment; removed by normalization."""

    op: str
    lvalue: Expr
    value: Expr
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: Expr
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


Program = tuple[Stmt, ...]


@dataclass(frozen=True)
class LoopSpec:
    """Resolved loop annotation; `invariant` is a logic formula and `text`
    keeps the annotation source for printing and proof replay."""

    invariant: object
    text: str = field(default="", compare=False)


@dataclass(frozen=True)
class RawSpec:
    """Unresolved annotation text attached during parsing."""

    kind: str  # requires | ensures | decreases | invariant
    text: str
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


def is_simple(e: Expr) -> bool:
    """Literals, variables and unit: side-effect free, directly translatable."""
    return isinstance(e, (Lit, Var))


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------

SpecPrinter = Callable[[object], str]


def _default_spec_printer(spec: object) -> str:
    return str(spec)


def expr_to_str(e: Expr, spec_printer: SpecPrinter = _default_spec_printer) -> str:
    p = lambda x: expr_to_str(x, spec_printer)
    if isinstance(e, Lit):
        if e.value is None:
            return "()"
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinOp):
        return f"{p(e.left)} {e.op} {p(e.right)}"
    if isinstance(e, UnOp):
        return f"{e.op}{_atom(e.operand, spec_printer)}"
    if isinstance(e, Borrow):
        return ("&mut " if e.mutable else "&") + p(e.place)
    if isinstance(e, Deref):
        return "*" + _atom(e.operand, spec_printer)
    if isinstance(e, Index):
        return f"{_atom(e.base, spec_printer)}[{p(e.index)}]"
    if isinstance(e, IfExpr):
        s = f"if {p(e.cond)} {block_to_str(e.then, spec_printer)}"
        if e.els is not None:
            s += f" else {block_to_str(e.els, spec_printer)}"
        return s
    if isinstance(e, LoopExpr):
        return "loop " + block_to_str(e.body, spec_printer)
    if isinstance(e, WhileExpr):
        return f"while {p(e.cond)} " + block_to_str(e.body, spec_printer)
    if isinstance(e, BreakExpr):
        return "break" if e.value is None else f"break {p(e.value)}"
    if isinstance(e, ContinueExpr):
        return "continue"
    if isinstance(e, CallExpr):
        return f"{e.name}({', '.join(p(a) for a in e.args)})"
    if isinstance(e, PanicExpr):
        return "panic!()"
    if isinstance(e, BlockExpr):
        return block_to_str(e.block, spec_printer)
    if isinstance(e, LoopScopeExpr):
        return f"loopScope({e.index_var}) " + block_to_str(e.body, spec_printer)
    raise TypeError(f"unknown expression {e!r}")


def _atom(e: Expr, spec_printer: SpecPrinter) -> str:
    s = expr_to_str(e, spec_printer)
    if isinstance(e, (Lit, Var, CallExpr, PanicExpr, Index)):
        return s
    return f"({s})"


def _spec_lines(spec: object, spec_printer: SpecPrinter, indent: str) -> list[str]:
    if spec is None:
        return []
    if isinstance(spec, RawSpec):
        return [f"{indent}//@ {spec.kind} {spec.text}"]
    if isinstance(spec, LoopSpec):
        inv = spec.text or spec_printer(spec.invariant)
        return [f"{indent}//@ invariant {inv}"]
    return []


def stmt_to_str(s: Stmt, spec_printer: SpecPrinter = _default_spec_printer,
                indent: str = "") -> str:
    p = lambda x: expr_to_str(x, spec_printer)
    if isinstance(s, LetStmt):
        mut = "mut " if s.mutable else ""
        ty = f": {s.ty}" if s.ty is not None else ""
        return f"{indent}let {mut}{s.name}{ty} = {p(s.init)};"
    if isinstance(s, AssignStmt):
        return f"{indent}{p(s.lvalue)} = {p(s.value)};"
    if isinstance(s, OpAssignStmt):
        return f"{indent}{p(s.lvalue)} {s.op}= {p(s.value)};"
    if isinstance(s, ExprStmt):
        spec = getattr(s.expr, "spec", None)
        lines = _spec_lines(spec, spec_printer, indent)
        body = f"{indent}{p(s.expr)}"
        if not isinstance(s.expr, (IfExpr, LoopExpr, WhileExpr, BlockExpr, LoopScopeExpr)):
            body += ";"
        lines.append(body)
        return "\n".join(lines)
    raise TypeError(f"unknown statement {s!r}")


def block_to_str(b: Block, spec_printer: SpecPrinter = _default_spec_printer) -> str:
    parts = [stmt_to_str(s, spec_printer) for s in b.stmts]
    if b.value is not None:
        spec = getattr(b.value, "spec", None)
        parts.extend(_spec_lines(spec, spec_printer, ""))
        parts.append(expr_to_str(b.value, spec_printer))
    inner = " ".join(parts)
    return "{ " + inner + " }" if inner else "{ }"


def program_to_str(p: Program, spec_printer: SpecPrinter = _default_spec_printer) -> str:
    return " ".join(stmt_to_str(s, spec_printer) for s in p)
