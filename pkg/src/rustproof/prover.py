"""Proof trees, the automated strategy, arithmetic closing, and persistence.

A proof is a tree of sequents. Each inner node records the rule application
that produced its children; leaves are either open goals or closed by a
zero-premise rule. The automated strategy interleaves update simplification,
symbolic execution, propositional decomposition, and an arithmetic closing
procedure based on polynomial normalization and Fourier-Motzkin elimination.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Callable, Optional, Sequence

from . import calculus as ca
from . import logic as lg
from . import objlang as ol
from .calculus import GoalContext, MissingSpec, NotApplicable, RuleResult, RuleSchema
from .frontend import FnDecl, RdlProblem, SourceUnit, parse_spec_term
from .rewrite import simplify_sequent

# ---------------------------------------------------------------------------
# Proof tree
# ---------------------------------------------------------------------------

OPEN = "open"
CLOSED = "closed"
DERIVED = "derived"  # an inner node whose children carry the obligation


@dataclass
class ProofNode:
    id: int
    sequent: lg.Sequent
    rule: Optional[str] = None
    path: Optional[tuple[int, int]] = None
    inputs: dict = field(default_factory=dict)
    fresh: list[str] = field(default_factory=list)
    children: list[int] = field(default_factory=list)
    branch_label: str = ""
    reason: str = ""  # why an open goal is stuck, if known


@dataclass
class Settings:
    mode: str = "check"  # overflow handling
    step_budget: int = 10 ** 5
    branch_budget: int = 10 ** 4

    def to_json(self) -> dict:
        return {"mode": self.mode, "step_budget": self.step_budget,
                "branch_budget": self.branch_budget}


class ProverError(Exception):
    pass


class SourceMismatch(ProverError):
    pass


class ReplayDivergence(ProverError):
    def __init__(self, node_id: int, msg: str) -> None:
        super().__init__(f"replay diverged at node {node_id}: {msg}")
        self.node_id = node_id


class ProofState:
    """Single proof tree with its goal context and application history."""

    def __init__(self, root: lg.Sequent, ctx: GoalContext,
                 settings: Optional[Settings] = None) -> None:
        self.ctx = ctx
        self.settings = settings or Settings(mode=ctx.mode)
        self.nodes: dict[int, ProofNode] = {0: ProofNode(0, root)}
        self._next_id = 1
        self.steps = 0  # rule applications so far

    # -- queries -------------------------------------------------------------

    @property
    def root(self) -> ProofNode:
        return self.nodes[0]

    def node(self, nid: int) -> ProofNode:
        return self.nodes[nid]

    def status_of(self, nid: int) -> str:
        n = self.nodes[nid]
        if n.rule is None:
            return OPEN
        if not n.children:
            return CLOSED
        if all(self.status_of(c) == CLOSED for c in n.children):
            return CLOSED
        return DERIVED

    def open_goals(self) -> list[int]:
        out = []
        for nid in sorted(self.nodes):
            if self.nodes[nid].rule is None:
                out.append(nid)
        return out

    @property
    def closed(self) -> bool:
        return self.status_of(0) == CLOSED

    # -- mutation ------------------------------------------------------------

    def apply(self, goal_id: int, rule: str, path: tuple[int, int],
              inputs: Optional[dict] = None) -> list[int]:
        """Apply a rule to an open goal; returns the new goal ids."""
        n = self.nodes.get(goal_id)
        if n is None or n.rule is not None:
            raise NotApplicable(f"goal {goal_id} is not an open leaf")
        if len(self.nodes) >= self.settings.branch_budget:
            raise ProverError("branch budget exceeded")
        res = apply_any(n.sequent, rule, path, self.ctx, inputs)
        n.rule = rule
        n.path = path
        n.inputs = dict(inputs or {})
        n.fresh = list(res.fresh)
        new_ids = []
        for prem, label in zip(res.premises,
                               res.branch_labels or [""] * len(res.premises)):
            child = ProofNode(self._next_id, prem, branch_label=label)
            self.nodes[child.id] = child
            n.children.append(child.id)
            new_ids.append(child.id)
            self._next_id += 1
        self.steps += 1
        return new_ids


# ---------------------------------------------------------------------------
# Logical (non-execution) rules
# ---------------------------------------------------------------------------

LOGICAL_RULE_DESCRIPTIONS = {
    "simplify": "normalize the goal: fold constants and apply updates",
    "close": "close: a formula occurs on both sides, or is trivially true",
    "closeArith": "close by linear integer arithmetic",
    "andLeft": "split a conjunction in the antecedent",
    "andRight": "prove both conjuncts separately",
    "orLeft": "case split on a disjunction in the antecedent",
    "orRight": "split a disjunction in the succedent",
    "impLeft": "case split on an implication in the antecedent",
    "impRight": "assume the premise, prove the conclusion",
    "notLeft": "move a negated antecedent formula to the succedent",
    "notRight": "move a negated succedent formula to the antecedent",
    "iffLeft": "case split on an equivalence in the antecedent",
    "iffRight": "prove an equivalence in both directions",
    "forallRight": "prove a universal goal for an arbitrary fresh constant",
    "existsLeft": "name an existential witness with a fresh constant",
    "forallLeft": "instantiate a universal assumption with a term",
    "existsRight": "instantiate an existential goal with a term",
}

_ALPHA = {"andLeft", "impRight", "notLeft", "notRight", "orRight"}
_BETA = {"andRight", "orLeft", "impLeft", "iffLeft", "iffRight"}


def logical_rules(seq: lg.Sequent, path: tuple[int, int]) -> list[RuleSchema]:
    side, idx = path
    forms = seq.ante if side == 0 else seq.succ
    if not (0 <= idx < len(forms)):
        return []
    f = forms[idx]
    out: list[str] = []
    if side == 0:
        if isinstance(f, lg.And):
            out.append("andLeft")
        elif isinstance(f, lg.Or):
            out.append("orLeft")
        elif isinstance(f, lg.Imp):
            out.append("impLeft")
        elif isinstance(f, lg.Not):
            out.append("notLeft")
        elif isinstance(f, lg.Iff):
            out.append("iffLeft")
        elif isinstance(f, lg.Exists):
            out.append("existsLeft")
        elif isinstance(f, lg.Forall):
            out.append("forallLeft")
    else:
        if isinstance(f, lg.And):
            out.append("andRight")
        elif isinstance(f, lg.Or):
            out.append("orRight")
        elif isinstance(f, lg.Imp):
            out.append("impRight")
        elif isinstance(f, lg.Not):
            out.append("notRight")
        elif isinstance(f, lg.Iff):
            out.append("iffRight")
        elif isinstance(f, lg.Forall):
            out.append("forallRight")
        elif isinstance(f, lg.Exists):
            out.append("existsRight")
    schemas = [RuleSchema(r, ("term",) if r in ("forallLeft", "existsRight") else (),
                          LOGICAL_RULE_DESCRIPTIONS[r]) for r in out]
    return schemas


def _fresh_const_for(seq: lg.Sequent, var: lg.LogicVar) -> lg.Term:
    taken: set[str] = set()
    for g in seq.ante + seq.succ:
        taken |= lg.symbol_names(g)
    return lg.const(lg.fresh_name(var.name, taken), var.sort)


def apply_logical(seq: lg.Sequent, rule: str, path: tuple[int, int],
                  inputs: Optional[dict] = None,
                  ctx: Optional[GoalContext] = None) -> RuleResult:
    inputs = inputs or {}
    side, idx = path

    if rule == "simplify":
        s2 = simplify_sequent(seq)
        if s2 == seq:
            raise NotApplicable("goal is already in normal form")
        return RuleResult([s2], branch_labels=[""])
    if rule == "close":
        if not _trivially_closed(seq):
            raise NotApplicable("no closing formula found")
        return RuleResult([])
    if rule == "closeArith":
        if not close_arith(seq):
            raise NotApplicable("arithmetic closing failed")
        return RuleResult([])

    forms = seq.ante if side == 0 else seq.succ
    if not (0 <= idx < len(forms)):
        raise NotApplicable("path outside the sequent")
    f = forms[idx]

    def drop() -> tuple[tuple[lg.Formula, ...], tuple[lg.Formula, ...]]:
        if side == 0:
            return tuple(x for i, x in enumerate(seq.ante) if i != idx), seq.succ
        return seq.ante, tuple(x for i, x in enumerate(seq.succ) if i != idx)

    ante, succ = drop()

    def mk(extra_ante: Sequence[lg.Formula] = (),
           extra_succ: Sequence[lg.Formula] = ()) -> lg.Sequent:
        return lg.Sequent.of(ante + tuple(extra_ante), succ + tuple(extra_succ))

    if rule == "andLeft" and side == 0 and isinstance(f, lg.And):
        return RuleResult([mk(extra_ante=(f.left, f.right))], branch_labels=[""])
    if rule == "orRight" and side == 1 and isinstance(f, lg.Or):
        return RuleResult([mk(extra_succ=(f.left, f.right))], branch_labels=[""])
    if rule == "impRight" and side == 1 and isinstance(f, lg.Imp):
        return RuleResult([mk(extra_ante=(f.left,), extra_succ=(f.right,))],
                          branch_labels=[""])
    if rule == "notLeft" and side == 0 and isinstance(f, lg.Not):
        return RuleResult([mk(extra_succ=(f.operand,))], branch_labels=[""])
    if rule == "notRight" and side == 1 and isinstance(f, lg.Not):
        return RuleResult([mk(extra_ante=(f.operand,))], branch_labels=[""])
    if rule == "andRight" and side == 1 and isinstance(f, lg.And):
        return RuleResult([mk(extra_succ=(f.left,)), mk(extra_succ=(f.right,))],
                          branch_labels=["left", "right"])
    if rule == "orLeft" and side == 0 and isinstance(f, lg.Or):
        return RuleResult([mk(extra_ante=(f.left,)), mk(extra_ante=(f.right,))],
                          branch_labels=["left", "right"])
    if rule == "impLeft" and side == 0 and isinstance(f, lg.Imp):
        return RuleResult([mk(extra_succ=(f.left,)), mk(extra_ante=(f.right,))],
                          branch_labels=["premise", "conclusion"])
    if rule == "iffLeft" and side == 0 and isinstance(f, lg.Iff):
        return RuleResult([mk(extra_ante=(f.left, f.right)),
                           mk(extra_succ=(f.left, f.right))],
                          branch_labels=["both", "neither"])
    if rule == "iffRight" and side == 1 and isinstance(f, lg.Iff):
        return RuleResult([mk(extra_ante=(f.left,), extra_succ=(f.right,)),
                           mk(extra_ante=(f.right,), extra_succ=(f.left,))],
                          branch_labels=["forward", "backward"])
    if rule == "forallRight" and side == 1 and isinstance(f, lg.Forall):
        c = _fresh_const_for(seq, f.var)
        body = lg.subst_logic_var(f.body, f.var, c)
        return RuleResult([mk(extra_succ=(body,))], fresh=[c.sym.name],
                          branch_labels=[""])
    if rule == "existsLeft" and side == 0 and isinstance(f, lg.Exists):
        c = _fresh_const_for(seq, f.var)
        body = lg.subst_logic_var(f.body, f.var, c)
        return RuleResult([mk(extra_ante=(body,))], fresh=[c.sym.name],
                          branch_labels=[""])
    if rule in ("forallLeft", "existsRight"):
        term = inputs.get("term")
        if term is None:
            raise MissingSpec("instantiation term")
        if isinstance(term, str):
            if ctx is None:
                raise NotApplicable("no type context for the instantiation term")
            term = parse_spec_term(term, ctx.types)
        if rule == "forallLeft" and side == 0 and isinstance(f, lg.Forall):
            body = lg.subst_logic_var(f.body, f.var, term)
            # keep the quantified assumption available for further uses
            return RuleResult([lg.Sequent.of(seq.ante + (body,), seq.succ)],
                              branch_labels=[""])
        if rule == "existsRight" and side == 1 and isinstance(f, lg.Exists):
            body = lg.subst_logic_var(f.body, f.var, term)
            return RuleResult([lg.Sequent.of(seq.ante, seq.succ + (body,))],
                              branch_labels=[""])
    raise NotApplicable(f"rule {rule} does not apply at {path}")


def _trivially_closed(seq: lg.Sequent) -> bool:
    if any(isinstance(f, lg.Bottom) for f in seq.ante):
        return True
    if any(isinstance(f, lg.Top) for f in seq.succ):
        return True
    return any(a == s for a in seq.ante for s in seq.succ)


def all_rules(seq: lg.Sequent, path: tuple[int, int],
              ctx: GoalContext) -> list[RuleSchema]:
    """Everything applicable at a position: execution rules, then logical."""
    out = list(ca.applicable_rules(seq, path, ctx))
    out.extend(logical_rules(seq, path))
    if simplify_sequent(seq) != seq:
        out.append(RuleSchema("simplify", (), LOGICAL_RULE_DESCRIPTIONS["simplify"]))
    if _trivially_closed(seq):
        out.append(RuleSchema("close", (), LOGICAL_RULE_DESCRIPTIONS["close"]))
    out.append(RuleSchema("closeArith", (), LOGICAL_RULE_DESCRIPTIONS["closeArith"]))
    return out


def apply_any(seq: lg.Sequent, rule: str, path: tuple[int, int],
              ctx: GoalContext, inputs: Optional[dict] = None) -> RuleResult:
    if rule in LOGICAL_RULE_DESCRIPTIONS:
        return apply_logical(seq, rule, path, inputs, ctx)
    return ca.apply_rule(seq, rule, path, ctx, inputs)


# ---------------------------------------------------------------------------
# Arithmetic closing
# ---------------------------------------------------------------------------

# a polynomial maps monomials (sorted tuples of atom terms) to coefficients
Poly = dict[tuple, Fraction]

_MAX_CONSTRAINTS = 700
_MAX_ELIMS = 40
_MAX_SPLITS = 6


def close_arith(seq: lg.Sequent) -> bool:
    """True iff the sequent closes by polynomial normalization, equality
    substitution, and Fourier-Motzkin elimination with integer rounding.
    Incomplete outside the linear fragment; never diverges."""
    lits = _collect_literals(seq)
    if lits is None:  # closed during collection (e.g. FALSE assumption)
        return True
    return _refute(lits, _MAX_SPLITS)


@dataclass(frozen=True)
class _Lit:
    """A boolean atom with a required truth value."""

    kind: str
    atom: Optional[lg.Formula] = None
    value: bool = True


def _mono_key(m: tuple) -> tuple:
    return tuple(lg.pretty(a) for a in m)


def _padd(a: Poly, b: Poly, scale: Fraction = Fraction(1)) -> Poly:
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, Fraction(0)) + c * scale
        if out[m] == 0:
            del out[m]
    return out


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(sorted(m1 + m2, key=lg.pretty))
            out[m] = out.get(m, Fraction(0)) + c1 * c2
            if out[m] == 0:
                del out[m]
    return out


def _pneg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}


class _PolyBuilder:
    """Translates integer terms to polynomials, registering division atoms."""

    def __init__(self) -> None:
        self.divisions: list[tuple[lg.Term, Poly, int]] = []  # (atom, numerator, k)

    def of(self, t: lg.Term) -> Poly:
        if isinstance(t, lg.IntLit):
            return {(): Fraction(t.value)} if t.value else {}
        if isinstance(t, lg.App) and t.sym.name in ("+", "-", "*", "neg"):
            args = [self.of(a) for a in t.args]
            if t.sym.name == "+":
                return _padd(args[0], args[1])
            if t.sym.name == "-":
                return _padd(args[0], _pneg(args[1]))
            if t.sym.name == "*":
                return _pmul(args[0], args[1])
            return _pneg(args[0])
        if isinstance(t, lg.App) and t.sym.name in ("/", "%"):
            num, den = t.args
            if isinstance(den, lg.IntLit) and den.value > 0:
                div_atom = t if t.sym.name == "/" else lg.App(
                    lg.FuncSym("/", (lg.INT, lg.INT), lg.INT), (num, den))
                if all(a is not div_atom and lg.pretty(a) != lg.pretty(div_atom)
                       for a, _, _ in self.divisions):
                    self.divisions.append((div_atom, self.of(num), den.value))
                d = {(div_atom,): Fraction(1)}
                if t.sym.name == "/":
                    return d
                # t % k == t - k * (t / k)
                return _padd(self.of(num), d, Fraction(-den.value))
            return {(t,): Fraction(1)}
        if isinstance(t, lg.IteTerm):
            raise _IteFound(t)
        return {(t,): Fraction(1)}


class _IteFound(Exception):
    def __init__(self, term: lg.IteTerm) -> None:
        self.term = term


def _int_sorted(t: lg.Term) -> bool:
    return lg.term_sort(t) == lg.INT


def _collect_literals(seq: lg.Sequent) -> Optional[list]:
    """Literals whose conjunction must be refuted; None if already closed."""
    lits: list = []

    def formula(f: lg.Formula, positive: bool) -> None:
        if isinstance(f, lg.Top):
            if not positive:
                raise _Closed
            return
        if isinstance(f, lg.Bottom):
            if positive:
                raise _Closed
            return
        if isinstance(f, lg.Not):
            formula(f.operand, not positive)
            return
        if isinstance(f, lg.And) and positive:
            formula(f.left, True)
            formula(f.right, True)
            return
        if isinstance(f, lg.Or) and not positive:
            formula(f.left, False)
            formula(f.right, False)
            return
        if isinstance(f, lg.Imp) and not positive:
            formula(f.left, True)
            formula(f.right, False)
            return
        if isinstance(f, lg.And) and not positive:
            lits.append(("orf", [(f.left, False), (f.right, False)]))
            return
        if isinstance(f, lg.Or) and positive:
            lits.append(("orf", [(f.left, True), (f.right, True)]))
            return
        if isinstance(f, lg.Imp) and positive:
            lits.append(("orf", [(f.left, False), (f.right, True)]))
            return
        if isinstance(f, lg.Pred):
            pred(f, positive)
            return
        # modal or quantified structure: drop it (weakening, stays sound)

    def pred(p: lg.Pred, positive: bool) -> None:
        name = p.name
        if name == "inRange":
            ty = p.objtype
            t = p.args[0]
            if positive:
                pred(lg.le(lg.IntLit(ty.min), t), True)
                pred(lg.le(t, lg.IntLit(ty.max)), True)
            else:
                lits.append(("or", [_cmp(t, lg.IntLit(ty.min), "<"),
                                    _cmp(lg.IntLit(ty.max), t, "<")]))
            return
        if name not in ("=", "<", "<=", ">", ">="):
            return
        a, b = p.args
        if name in (">", ">="):
            a, b = b, a
            name = "<" if name == ">" else "<="
        if name == "=" and not _int_sorted(a):
            lits.append(_Lit("bool", atom=p, value=positive))
            return
        if not (_int_sorted(a) and _int_sorted(b)):
            lits.append(_Lit("bool", atom=p, value=positive))
            return
        if positive:
            lits.append(_cmp(a, b, name))
        else:
            if name == "=":
                lits.append(_cmp(a, b, "!="))
            elif name == "<":
                lits.append(_cmp(b, a, "<="))
            else:
                lits.append(_cmp(b, a, "<"))

    class _Closed(Exception):
        pass

    try:
        for f in seq.ante:
            formula(f, True)
        for f in seq.succ:
            formula(f, False)
    except _Closed:
        return None
    return lits


def _cmp(a: lg.Term, b: lg.Term, op: str):
    # deferred polynomialization: keep terms until ite splitting is done
    return ("cmp", a, b, op)


def _find_ite(t: lg.Term) -> Optional[lg.IteTerm]:
    for n in lg.walk(t):
        if isinstance(n, lg.IteTerm):
            return n
    return None


def _replace_term(t: lg.Term, old: lg.Term, new: lg.Term) -> lg.Term:
    if t == old:
        return new
    kids = lg.children(t)
    if not kids:
        return t
    new_kids = tuple(_replace_term(k, old, new) if isinstance(k, lg.Term) else k
                     for k in kids)
    if new_kids == kids:
        return t
    return lg.with_children(t, new_kids)


def _refute(lits: list, splits_left: int,
            axiomatized: frozenset = frozenset()) -> bool:
    """True iff the conjunction of the literals is unsatisfiable."""
    # resolve conditional terms by case splitting on their guards
    for i, lit in enumerate(lits):
        if isinstance(lit, tuple) and lit[0] == "cmp":
            for t in (lit[1], lit[2]):
                ite = _find_ite(t)
                if ite is None:
                    continue
                if splits_left <= 0:
                    return False
                then_lits = list(lits)
                else_lits = list(lits)
                then_lits[i] = ("cmp", _replace_term(lit[1], ite, ite.then),
                                _replace_term(lit[2], ite, ite.then), lit[3])
                else_lits[i] = ("cmp", _replace_term(lit[1], ite, ite.els),
                                _replace_term(lit[2], ite, ite.els), lit[3])
                cond_lits = _formula_lits(ite.cond, True)
                ncond_lits = _formula_lits(ite.cond, False)
                if cond_lits is None or ncond_lits is None:
                    return False
                return (_refute(then_lits + cond_lits, splits_left - 1, axiomatized)
                        and _refute(else_lits + ncond_lits, splits_left - 1,
                                    axiomatized))
        if isinstance(lit, tuple) and lit[0] == "or":
            if splits_left <= 0:
                return False
            rest = lits[:i] + lits[i + 1:]
            return all(_refute(rest + [alt], splits_left - 1, axiomatized)
                       for alt in lit[1])
        if isinstance(lit, tuple) and lit[0] == "orf":
            if splits_left <= 0:
                return False
            rest = lits[:i] + lits[i + 1:]
            for g, pos in lit[1]:
                branch = _formula_lits(g, pos)
                if branch is None:
                    continue  # that alternative is already contradictory
                if not _refute(rest + branch, splits_left - 1, axiomatized):
                    return False
            return True

    # boolean atoms: direct conflicts
    polarity: dict[str, bool] = {}
    for lit in lits:
        if isinstance(lit, _Lit) and lit.kind == "bool":
            key = lg.pretty(lit.atom)
            if key in polarity and polarity[key] != lit.value:
                return True
            polarity[key] = lit.value

    # build integer constraints
    pb = _PolyBuilder()
    eqs: list[Poly] = []
    ineqs: list[tuple[Poly, bool]] = []  # poly <= 0, strict flag
    neq_index = None
    try:
        for i, lit in enumerate(lits):
            if not (isinstance(lit, tuple) and lit[0] == "cmp"):
                continue
            a, b, op = lit[1], lit[2], lit[3]
            p = _padd(pb.of(a), _pneg(pb.of(b)))
            if op == "=":
                eqs.append(p)
            elif op == "<=":
                ineqs.append((p, False))
            elif op == "<":
                ineqs.append((p, True))
            elif neq_index is None:
                neq_index = i
    except _IteFound:
        return False

    # truncated division d = n / k (literal k > 0): split on the numerator's
    # sign and add k*d <= n <= k*d + k - 1 (mirrored for negative n)
    new_div = [(d, n, k) for d, n, k in pb.divisions
               if lg.pretty(d) not in axiomatized]
    if new_div:
        if splits_left <= 0:
            return False
        datom, _, k = new_div[0]
        n_term = datom.args[0]
        kd = lg.mul(lg.IntLit(k), datom)
        zero = lg.IntLit(0)
        pos = lits + [("cmp", zero, n_term, "<="),
                      ("cmp", kd, n_term, "<="),
                      ("cmp", n_term, lg.add(kd, lg.IntLit(k - 1)), "<="),
                      ("cmp", zero, datom, "<=")]
        neg = lits + [("cmp", n_term, zero, "<"),
                      ("cmp", n_term, kd, "<="),
                      ("cmp", kd, lg.add(n_term, lg.IntLit(k - 1)), "<="),
                      ("cmp", datom, zero, "<=")]
        marked = axiomatized | {lg.pretty(datom)}
        return (_refute(pos, splits_left - 1, marked)
                and _refute(neg, splits_left - 1, marked))

    # disequalities: split the first one into the two strict orders
    if neq_index is not None:
        if splits_left <= 0:
            return False
        _, a, b, _ = lits[neq_index]
        rest = lits[:neq_index] + lits[neq_index + 1:]
        return (_refute(rest + [("cmp", a, b, "<")], splits_left - 1, axiomatized)
                and _refute(rest + [("cmp", b, a, "<")], splits_left - 1,
                            axiomatized))

    return _solve(eqs, ineqs)


def _formula_lits(f: lg.Formula, positive: bool) -> Optional[list]:
    """Literals for a guard formula; None when out of fragment."""
    fake = lg.Sequent.of((f,), ()) if positive else lg.Sequent.of((), (f,))
    return _collect_literals(fake)


def _substitute_atom(p: Poly, atom: lg.Term, repl: Poly) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        count = sum(1 for a in m if a == atom)
        if count == 0:
            out[m] = out.get(m, Fraction(0)) + c
            continue
        rest = tuple(a for a in m if a != atom)
        piece: Poly = {rest: c}
        for _ in range(count):
            piece = _pmul(piece, repl)
        out = _padd(out, piece)
    return {m: c for m, c in out.items() if c != 0}


def _solve(eqs: list[Poly], ineqs: list[tuple[Poly, bool]]) -> bool:
    """Unsatisfiability over the integers of eqs = 0 and ineqs (<= / < 0)."""
    eqs = [dict(p) for p in eqs]
    ineqs = [(dict(p), s) for p, s in ineqs]

    # eliminate atoms defined by unit-coefficient equalities
    for _ in range(12):
        done = True
        for i, e in enumerate(eqs):
            cand = None
            for m, c in e.items():
                if len(m) == 1 and abs(c) == 1:
                    atom = m[0]
                    if any(atom in mm for mm in e if mm != m):
                        continue
                    cand = (m, c, atom)
                    break
            if cand is None:
                continue
            m, c, atom = cand
            repl = {mm: -cc / c for mm, cc in e.items() if mm != m}
            eqs = [_substitute_atom(p, atom, repl) for j, p in enumerate(eqs)
                   if j != i]
            ineqs = [(_substitute_atom(p, atom, repl), s) for p, s in ineqs]
            done = False
            break
        if done:
            break

    cons: list[dict] = []
    for e in eqs:
        if not _nonzero(e):
            continue
        cons.append(_tighten(e, False))
        cons.append(_tighten(_pneg(e), False))
    for p, s in ineqs:
        cons.append(_tighten(p, s))
    cons = [c for c in cons if c is not None]

    for _ in range(_MAX_ELIMS):
        for c in cons:
            if _const_only(c):
                if c.get((), Fraction(0)) > 0:
                    return True
        variables = sorted({m for c in cons for m in c if m != ()},
                           key=_mono_key)
        if not variables:
            break
        # pick the variable with the smallest product of bound counts
        best, best_cost = None, None
        for v in variables:
            pos = sum(1 for c in cons if c.get(v, 0) > 0)
            neg = sum(1 for c in cons if c.get(v, 0) < 0)
            cost = pos * neg - pos - neg
            if best_cost is None or cost < best_cost:
                best, best_cost = v, cost
        v = best
        pos = [c for c in cons if c.get(v, 0) > 0]
        neg = [c for c in cons if c.get(v, 0) < 0]
        rest = [c for c in cons if v not in c or c.get(v, 0) == 0]
        new = []
        for cp in pos:
            for cn in neg:
                a = cp[v]
                b = -cn[v]
                combined = _padd({m: c * b for m, c in cp.items()},
                                 {m: c * a for m, c in cn.items()})
                combined.pop(v, None)
                t = _tighten(combined, False)
                if t is not None:
                    new.append(t)
        cons = rest + new
        if len(cons) > _MAX_CONSTRAINTS:
            return False
    for c in cons:
        if _const_only(c) and c.get((), Fraction(0)) > 0:
            return True
    return False


def _nonzero(p: Poly) -> bool:
    return any(c != 0 for c in p.values())


def _const_only(p: Poly) -> bool:
    return all(m == () or c == 0 for m, c in p.items())


def _tighten(p: Poly, strict: bool) -> Optional[dict]:
    """Integerize p <= 0 (or < 0), divide by the gcd of variable
    coefficients, and round the constant."""
    p = {m: c for m, c in p.items() if c != 0}
    denoms = [c.denominator for c in p.values()] or [1]
    mult = 1
    for d in denoms:
        mult = mult * d // gcd(mult, d)
    q = {m: int(c * mult) for m, c in p.items()}
    if strict:
        q[()] = q.get((), 0) + 1  # integer-valued: p < 0 iff p + 1 <= 0
    varcoeffs = [abs(c) for m, c in q.items() if m != () and c != 0]
    if not varcoeffs:
        return {(): Fraction(q.get((), 0))}
    g = 0
    for c in varcoeffs:
        g = gcd(g, c)
    if g > 1:
        const = q.get((), 0)
        q = {m: c // g for m, c in q.items() if m != ()}
        # g*x + const <= 0  =>  x <= floor(-const/g)  =>  x + ceil(const/g) <= 0
        q[()] = -((-const) // g)
    return {m: Fraction(c) for m, c in q.items() if c != 0 or m == ()}


# ---------------------------------------------------------------------------
# Obligations
# ---------------------------------------------------------------------------


@dataclass
class Obligation:
    name: str
    sequent: lg.Sequent
    ctx: GoalContext


def _call_graph(fns: dict[str, FnDecl]) -> dict[str, set[str]]:
    edges: dict[str, set[str]] = {name: set() for name in fns}

    def expr(e: ol.Expr, out: set[str]) -> None:
        if isinstance(e, ol.CallExpr):
            out.add(e.name)
            for a in e.args:
                expr(a, out)
            return
        for attr in ("left", "right", "operand", "base", "index", "place",
                     "cond", "value"):
            sub = getattr(e, attr, None)
            if isinstance(sub, ol.Expr):
                expr(sub, out)
        for attr in ("then", "els", "body", "block"):
            sub = getattr(e, attr, None)
            if isinstance(sub, ol.Block):
                block(sub, out)

    def block(b: ol.Block, out: set[str]) -> None:
        for s in b.stmts:
            for attr in ("init", "value", "expr", "lvalue"):
                sub = getattr(s, attr, None)
                if isinstance(sub, ol.Expr):
                    expr(sub, out)
        if b.value is not None:
            expr(b.value, out)

    for name, fn in fns.items():
        block(fn.body, edges[name])
        edges[name] &= set(fns)
    return edges


def fn_obligation(unit: SourceUnit, name: str, mode: str = "check") -> Obligation:
    """The proof obligation for a normalized, contract-annotated function."""
    fns = {f.name: f for f in unit.functions}
    fn = fns[name]
    types = dict(fn.var_types)
    taken = set(types) | {n for f in fns.values() for n in f.var_types}
    res_name = "res" if "res" not in types else lg.fresh_name("res", taken)
    types[res_name] = fn.ret
    stmts: tuple[ol.Stmt, ...] = tuple(fn.body.stmts)
    value = fn.body.value if fn.body.value is not None else ol.UNIT_LIT
    stmts = stmts + (ol.AssignStmt(ol.Var(res_name), value),)

    pre: lg.Formula = lg.Top()
    post: lg.Formula = lg.Top()
    decreases = None
    if fn.contract is not None:
        pre = fn.contract.pre
        post = fn.contract.post
        decreases = fn.contract.decreases
    if res_name != "res":
        post = lg.subst_prog_vars(post, {lg.ProgVar("res", fn.ret):
                                         lg.ProgVar(res_name, fn.ret)})
    # Each mutable reference parameter points at some place owned by the
    # caller; exclusivity means it cannot alias any other variable in scope
    # here.  Model the borrowed place as a fresh lender variable so reads
    # and writes through the parameter resolve.
    lenders: list[lg.Update] = []
    lender_refs: dict[lg.ProgVar, lg.Term] = {}
    lender_ranges: list[lg.Formula] = []
    for pname, pty in fn.params:
        if isinstance(pty, ol.RefTy) and pty.mutable:
            lname = lg.fresh_name(pname + "_lend", taken)
            taken.add(lname)
            types[lname] = pty.inner
            lender = lg.ProgVar(lname, pty.inner)
            ref = lg.ref_mut(lg.place_of(lender), lg.sort_of_objtype(pty.inner))
            lenders.append(lg.ElemUpd(lg.ProgVar(pname, pty), ref))
            lender_refs[lg.ProgVar(pname, pty)] = ref
            if isinstance(pty.inner, ol.IntTy):
                lender_ranges.append(lg.in_range(pty.inner, lender))

    ante: list[lg.Formula] = []
    if not isinstance(pre, lg.Top):
        if lender_refs:
            pre = lg.subst_prog_vars(pre, lender_refs)
        ante.append(pre)
    for pname, pty in fn.params:
        if isinstance(pty, ol.IntTy):
            ante.append(lg.in_range(pty, lg.ProgVar(pname, pty)))
    ante.extend(lender_ranges)

    edges = _call_graph(fns)
    recursive: set[str] = set()
    if name in _reachable_via(edges, name):
        # every callee on a cycle through this function needs a decrease check
        recursive = {g for g in edges
                     if g in _reachable_via(edges, name)
                     and name in _reachable_via(edges, g)}
    measure = None
    if recursive:
        taken2 = set(taken) | {res_name}
        mby = lg.const(lg.fresh_name("mby", taken2), lg.INT)
        measure = mby
        if decreases is not None:
            ante.append(lg.eq(mby, decreases))
    ctx = GoalContext(types=types, mode=mode, fns=fns,
                      measure=measure, recursive=frozenset(recursive))
    goal: lg.Formula = lg.Box(stmts, post)
    if lenders:
        goal = lg.FormUpd(lg.par(lenders), goal)
    return Obligation(name, lg.Sequent.of(tuple(ante), (goal,)), ctx)


def _reachable_via(edges: dict[str, set[str]], start: str) -> set[str]:
    """Functions reachable from start through at least one call edge."""
    seen: set[str] = set()
    work = list(edges.get(start, ()))
    while work:
        g = work.pop()
        if g in seen:
            continue
        seen.add(g)
        work.extend(edges.get(g, ()))
    return seen


def rdl_obligation(problem: RdlProblem, mode: str = "check") -> Obligation:
    ctx = GoalContext(types=dict(problem.var_types), mode=mode, fns={})
    # declared variables hold values of their type
    ante = tuple(lg.in_range(ty, lg.ProgVar(name, ty))
                 for name, ty in sorted(problem.var_types.items())
                 if isinstance(ty, ol.IntTy))
    return Obligation("problem", lg.Sequent.of(ante, (problem.formula,)), ctx)


# ---------------------------------------------------------------------------
# Automated strategy
# ---------------------------------------------------------------------------


@dataclass
class AutoResult:
    status: str  # "Closed" | "Open" | "BudgetExceeded"
    open_goals: list[int]
    steps: int


def auto(proof: ProofState, budget: Optional[int] = None) -> AutoResult:
    """Drive the proof to closure: per goal, simplify, close, execute
    symbolically, decompose propositionally (non-branching rules first),
    then close arithmetically. Deterministic for a given input and budget."""
    budget = budget if budget is not None else proof.settings.step_budget
    start = proof.steps
    stuck: set[int] = set()
    while True:
        goals = [g for g in proof.open_goals() if g not in stuck]
        if not goals:
            break
        if proof.steps - start >= budget:
            return AutoResult("BudgetExceeded", proof.open_goals(),
                              proof.steps - start)
        gid = goals[0]
        step = _pick_step(proof, gid)
        if step is None:
            stuck.add(gid)
            continue
        rule, path, inputs, reason = step
        if rule is None:
            node = proof.node(gid)
            node.reason = reason
            stuck.add(gid)
            continue
        try:
            proof.apply(gid, rule, path, inputs)
        except ca.CalculusError as exc:
            proof.node(gid).reason = str(exc)
            stuck.add(gid)
        except ProverError:
            return AutoResult("BudgetExceeded", proof.open_goals(),
                              proof.steps - start)
    if proof.closed:
        return AutoResult("Closed", [], proof.steps - start)
    return AutoResult("Open", proof.open_goals(), proof.steps - start)


def _pick_step(proof: ProofState, gid: int):
    """(rule, path, inputs, reason) or None when the goal cannot progress."""
    seq = proof.node(gid).sequent
    ctx = proof.ctx
    if simplify_sequent(seq) != seq:
        return ("simplify", (1, 0), None, "")
    if _trivially_closed(seq):
        return ("close", (1, 0), None, "")
    # symbolic execution on the first succedent modality
    for idx, f in enumerate(seq.succ):
        if ca.split_modality(f) is None:
            continue
        try:
            rules = ca.applicable_rules(seq, (1, idx), ctx)
        except ca.CalculusError:
            rules = []
        if not rules:
            return (None, None, None, "no execution rule applies")
        schema = rules[0]
        if schema.needs:
            return (None, None, None,
                    f"needs {', '.join(schema.needs)} for rule {schema.name}")
        return (schema.name, (1, idx), None, "")
    # propositional: non-branching rules first, then branching ones
    for wanted in (_ALPHA | {"forallRight", "existsLeft"}, _BETA):
        for side, forms in ((0, seq.ante), (1, seq.succ)):
            for idx in range(len(forms)):
                for schema in logical_rules(seq, (side, idx)):
                    if schema.name in wanted:
                        return (schema.name, (side, idx), None, "")
    if close_arith(seq):
        return ("closeArith", (1, 0), None, "")
    return (None, None, None, "not closable by the automated strategy")


# ---------------------------------------------------------------------------
# Persistence and replay
# ---------------------------------------------------------------------------


def source_hash(source_text: str) -> str:
    return hashlib.sha256(source_text.encode("utf-8")).hexdigest()


def save_proof(proof: ProofState, source_text: str,
               extra_settings: Optional[dict] = None) -> bytes:
    nodes = []
    for nid in sorted(proof.nodes):
        n = proof.nodes[nid]
        if n.rule is None:
            continue
        nodes.append({
            "id": n.id,
            "rule": n.rule,
            "position-path": list(n.path) if n.path is not None else None,
            "instantiations": {k: v for k, v in n.inputs.items()
                               if isinstance(v, (str, int, float, bool))},
            "fresh": list(n.fresh),
        })
    doc = {
        "source_sha256": source_hash(source_text),
        "settings": dict(proof.settings.to_json(), **(extra_settings or {})),
        "nodes": nodes,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def replay(source_text: str, proof_bytes: bytes,
           make_obligation: Callable[[dict], Obligation]) -> ProofState:
    """Rebuild a proof from its file; make_obligation receives the stored
    settings and must return the same root obligation as the original run."""
    doc = json.loads(proof_bytes.decode("utf-8"))
    if doc.get("source_sha256") != source_hash(source_text):
        raise SourceMismatch("proof file was made from different source text")
    ob = make_obligation(doc.get("settings", {}))
    settings = Settings(mode=doc["settings"].get("mode", ob.ctx.mode),
                        step_budget=doc["settings"].get("step_budget", 10 ** 5),
                        branch_budget=doc["settings"].get("branch_budget", 10 ** 4))
    state = ProofState(ob.sequent, ob.ctx, settings)
    for entry in doc.get("nodes", []):
        nid = entry["id"]
        if nid not in state.nodes or state.nodes[nid].rule is not None:
            raise ReplayDivergence(nid, "node id does not name an open goal")
        path = tuple(entry["position-path"]) if entry.get("position-path") else (1, 0)
        try:
            state.apply(nid, entry["rule"], path, entry.get("instantiations") or {})
        except ca.CalculusError as exc:
            raise ReplayDivergence(nid, str(exc)) from exc
        got = state.nodes[nid]
        if got.fresh != entry.get("fresh", []):
            raise ReplayDivergence(nid, "fresh symbols differ")
    return state
