"""Random generators shared by the property and acceptance suites.

Everything is driven by an explicit random.Random so failures reproduce
from the seed alone.
"""

from __future__ import annotations

import random
from typing import Optional

from rustproof import interp as it
from rustproof import logic as lg
from rustproof import objlang as ol

I32 = ol.I32
VARS = ("a", "b", "c")


def pv(name: str) -> lg.ProgVar:
    return lg.ProgVar(name, I32)


# ---------------------------------------------------------------------------
# Ground updates / terms / states (update-semantics fuzz)
# ---------------------------------------------------------------------------


def random_state(rng: random.Random) -> it.ConcreteState:
    return it.ConcreteState({n: it.IntV(rng.randint(-8, 8)) for n in VARS})


def random_ground_term(rng: random.Random, depth: int = 3) -> lg.Term:
    if depth == 0 or rng.random() < 0.4:
        if rng.random() < 0.5:
            return pv(rng.choice(VARS))
        return lg.IntLit(rng.randint(-4, 4))
    op = rng.choice("+-*")
    return lg.arith(op, random_ground_term(rng, depth - 1),
                    random_ground_term(rng, depth - 1))


def random_ground_update(rng: random.Random, max_parts: int = 4) -> lg.Update:
    parts: list[lg.Update] = []
    for _ in range(rng.randint(1, max_parts)):
        kind = rng.random()
        target = pv(rng.choice(VARS))
        value = random_ground_term(rng, 2)
        if kind < 0.8:
            parts.append(lg.ElemUpd(target, value))
        else:
            ref = lg.ref_mut(lg.place_of(target), lg.INT)
            parts.append(lg.MutUpd(ref, value))
    if rng.random() < 0.1:
        parts.insert(rng.randrange(len(parts) + 1), lg.SKIP)
    if len(parts) == 1:
        return parts[0]
    return lg.par(parts)


# ---------------------------------------------------------------------------
# Small annotated programs (differential soundness suite)
# ---------------------------------------------------------------------------

_CMPS = ("==", "!=", "<", "<=", ">", ">=")


def _expr(rng: random.Random, names: list[str], depth: int) -> str:
    if depth == 0 or rng.random() < 0.5:
        if names and rng.random() < 0.7:
            return rng.choice(names)
        return str(rng.randint(0, 4))
    op = rng.choice(("+", "-", "*"))
    return f"({_expr(rng, names, depth - 1)} {op} {_expr(rng, names, depth - 1)})"


def _post(rng: random.Random, names: list[str]) -> str:
    lhs = _expr(rng, names + ["res"], 1)
    rhs = _expr(rng, names, 1)
    clause = f"{lhs} {rng.choice(_CMPS)} {rhs}"
    if rng.random() < 0.3:
        other = f"{_expr(rng, names, 1)} {rng.choice(_CMPS)} {_expr(rng, names, 1)}"
        joiner = rng.choice(("&&", "||"))
        return f"{clause} {joiner} {other}"
    return clause


def random_program(rng: random.Random) -> tuple[str, int]:
    """An annotated single-function source plus its parameter count."""
    n_params = rng.randint(1, 2)
    params = [f"p{i}" for i in range(n_params)]
    names = list(params)
    lines = []
    for i in range(rng.randint(1, 4)):
        name = f"v{i}"
        lines.append(f"    let mut {name}: i32 = {_expr(rng, names, 2)};")
        names.append(name)
    if rng.random() < 0.35:
        # a simple conditional reassignment
        tgt = rng.choice([n for n in names if n.startswith("v")])
        cond = f"{_expr(rng, names, 1)} {rng.choice(_CMPS)} {_expr(rng, names, 1)}"
        lines.append(f"    if {cond} {{ {tgt} = {_expr(rng, names, 1)}; }}"
                     f" else {{ {tgt} = {_expr(rng, names, 1)}; }}")
    loop = rng.random() < 0.25
    if loop:
        ctr = "i"
        bound = rng.randint(1, 3)
        body_tgt = rng.choice([n for n in names if n.startswith("v")])
        lines.append(f"    let mut {ctr}: i32 = 0;")
        lines.append(f"    //@ invariant 0 <= {ctr} && {ctr} <= {bound}")
        lines.append("    let w: i32 = loop {")
        lines.append(f"        if {ctr} >= {bound} {{ break {body_tgt}; }}")
        lines.append(f"        {body_tgt} = {body_tgt} + 1;")
        lines.append(f"        {ctr} = {ctr} + 1;")
        lines.append("    };")
        names.append("w")
    result = rng.choice(names)
    post = _post(rng, params)
    sig = ", ".join(f"{p}: i32" for p in params)
    body = "\n".join(lines)
    src = (f"//@ ensures {post}\n"
           f"fn f({sig}) -> i32 {{\n{body}\n    {result}\n}}\n")
    return src, n_params
