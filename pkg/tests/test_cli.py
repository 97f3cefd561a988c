"""Command line interface: exit codes, verdict output, proof files."""

import json

import pytest

from rustproof.cli import main

from conftest import BINARY_SEARCH, LOOP_PRODUCT, MUL_SRC, ROOT, SWAP_RDL


@pytest.fixture
def swap_rdl(tmp_path):
    p = tmp_path / "swap.rdl"
    p.write_text(SWAP_RDL)
    return p


@pytest.fixture
def mul_rs(tmp_path):
    p = tmp_path / "mul.rs"
    p.write_text(MUL_SRC)
    return p


def test_verify_loop_product_example(capsys):
    code = main(["verify", str(LOOP_PRODUCT), "--auto", "--overflow", "ignore"])
    assert code == 0
    out = capsys.readouterr().out
    assert "product: Closed" in out


def test_verify_binary_search_example(capsys):
    code = main(["verify", str(BINARY_SEARCH), "--auto"])
    assert code == 0
    out = capsys.readouterr().out
    assert "binary_search: Closed" in out


def test_verify_open_goal_exits_1(swap_rdl, capsys):
    # check mode with no range assumptions on the sum leaves goals open
    code = main(["verify", str(swap_rdl), "--auto", "--max-steps", "3"])
    assert code == 1
    assert "Open" in capsys.readouterr().out


def test_verify_bad_syntax_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.rs"
    p.write_text("fn broken( {")
    assert main(["verify", str(p)]) == 2
    assert "error" in capsys.readouterr().err


def test_verify_missing_file_exits_2(tmp_path):
    assert main(["verify", str(tmp_path / "nope.rs")]) == 2


def test_verify_unknown_fn_exits_2(mul_rs):
    assert main(["verify", str(mul_rs), "--fn", "nosuch"]) == 2


def test_emit_and_replay_roundtrip(swap_rdl, tmp_path, capsys):
    proof = tmp_path / "swap.proof"
    assert main(["verify", str(swap_rdl), "--auto", "--overflow", "ignore",
                 "--emit-proof", str(proof)]) == 0
    capsys.readouterr()
    assert main(["verify", str(swap_rdl), "--replay", str(proof)]) == 0
    assert "Closed" in capsys.readouterr().out


def test_replay_rejects_edited_source(swap_rdl, tmp_path):
    proof = tmp_path / "swap.proof"
    main(["verify", str(swap_rdl), "--auto", "--overflow", "ignore",
          "--emit-proof", str(proof)])
    swap_rdl.write_text(SWAP_RDL + "\n")
    assert main(["verify", str(swap_rdl), "--replay", str(proof)]) == 2


def test_emit_proof_multi_function(mul_rs, tmp_path):
    proof = tmp_path / "mul.proof"
    main(["verify", str(mul_rs), "--auto", "--overflow", "ignore",
          "--emit-proof", str(proof)])
    doc = json.loads(proof.read_bytes())
    assert set(doc["proofs"]) == {"mul", "call_mul"}
    assert main(["verify", str(mul_rs), "--overflow", "ignore",
                 "--replay", str(proof)]) == 0


def test_diff_test_reports_counterexample(tmp_path, capsys):
    p = tmp_path / "wrong.rdl"
    p.write_text("\\vars { x: i32; }\n\\problem { x < x + 1 -> x < 0 }\n")
    code = main(["verify", str(p), "--auto", "--diff-test", "--domain=-4..4"])
    assert code == 1
    out = capsys.readouterr().out
    assert "counterexample" in out
    assert "DISCREPANCY" not in out


def test_diff_test_clean_on_valid(swap_rdl, capsys):
    code = main(["verify", str(swap_rdl), "--auto", "--overflow", "ignore",
                 "--diff-test", "--domain=-4..4"])
    assert code == 0
    assert "no counterexample" in capsys.readouterr().out


def test_run_normal_outcome(tmp_path, capsys):
    p = tmp_path / "add.rs"
    p.write_text("fn add(x: i32, y: i32) -> i32 { x + y }\n")
    code = main(["run", str(p), "--fn", "add", "--args", "3", "4"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["outcome"] == "normal"
    assert doc["value"] == 7


def test_run_panic_outcome(tmp_path, capsys):
    p = tmp_path / "div.rs"
    p.write_text("fn f(n: i32) -> i32 { 1 / n }\n")
    code = main(["run", str(p), "--fn", "f", "--args", "0"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["outcome"] == "panic"


def test_run_arity_mismatch_exits_2(tmp_path):
    p = tmp_path / "add.rs"
    p.write_text("fn add(x: i32, y: i32) -> i32 { x + y }\n")
    assert main(["run", str(p), "--fn", "add", "--args", "3"]) == 2
    assert main(["run", str(p), "--fn", "add", "--args", "3", "{oops"]) == 2


def test_examples_verify_clean(capsys):
    for name in ("swap.rdl",):
        path = ROOT / "examples" / name
        if not path.exists():
            continue
        assert main(["verify", str(path), "--auto",
                     "--overflow", "ignore"]) == 0
