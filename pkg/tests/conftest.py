import pathlib

import pytest

from rustproof.frontend import normalize, parse_rdl, parse_unit
from rustproof.prover import (ProofState, Settings, auto, fn_obligation,
                              rdl_obligation)

ROOT = pathlib.Path(__file__).resolve().parent.parent

LOOP_PRODUCT = ROOT / "listings" / "loop_product.rs"
BINARY_SEARCH = ROOT / "examples" / "binary_search.rs"

SWAP_RDL = """\\vars { x: i32; y: i32; z: i32; }
\\problem { x == z -> [{ x = x + y; y = x - y; }] (y == z) }
"""

MUTATE_CHAIN_RDL = """\\vars { x: i32; y: &mut i32; }
\\problem { [{ x = 1; y = &mut x; *y = 3; }] (x == 3 && *y == 3) }
"""

MUL_SRC = """\
//@ ensures *c == a * b
fn mul(a: u64, b: u64, c: &mut u64) -> () {
    let p: u64 = a * b;
    *c = p;
}

//@ ensures *r == x * y
fn call_mul(x: u64, y: u64, r: &mut u64) -> () {
    mul(x, y, r);
}
"""


def load_unit(text: str):
    unit = normalize(parse_unit(text))
    assert not unit.errors, unit.errors
    return unit


def prove_fn(text: str, name: str, mode: str = "check"):
    """Parse, build the function obligation, run auto; returns the tree."""
    unit = load_unit(text)
    ob = fn_obligation(unit, name, mode)
    proof = ProofState(ob.sequent, ob.ctx, Settings(mode=mode))
    result = auto(proof)
    return proof, result


def prove_rdl(text: str, mode: str = "check", dia: bool = False):
    problem = parse_rdl(text)
    ob = rdl_obligation(problem, mode)
    proof = ProofState(ob.sequent, ob.ctx, Settings(mode=mode))
    result = auto(proof)
    return proof, result


@pytest.fixture
def loop_product_source() -> str:
    return LOOP_PRODUCT.read_text()


@pytest.fixture
def binary_search_source() -> str:
    return BINARY_SEARCH.read_text()
