import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from ordproof import calculus as C
from ordproof import ordinals as O
from ordproof import sexpr
from ordproof.cli import main
from ordproof.reducer import main_branch

import casefix as CF

FIX = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out.strip(), out.err.strip()


@pytest.fixture
def desk_proof(tmp_path, capsys):
    path = tmp_path / "desk.proof"
    code, _, _ = run(capsys, "embed", FIX / "desk.skel", "-o", path)
    assert code == 0
    return path


# ord

@pytest.mark.parametrize("argv,expected", [
    (["cmp", "w1", "r0"], "LT"),
    (["cmp", "(D1 0)", "(D0 r0)"], "GT"),
    (["g", "(w^ 0)", "(D1 w1)"], "{w1}"),
    (["nsum", "0", "(w^ 0)"], "(w^ 0)"),
    (["nprod", "2", "r0"], "(+ r0 r0)"),
    (["region", "(D1 0)"], "Middle"),
    (["region", "3"], "Finite(3)"),
])
def test_ord(capsys, argv, expected):
    code, out, _ = run(capsys, "ord", *argv)
    assert code == 0 and out == expected


def test_ord_parse_error(capsys):
    code, _, err = run(capsys, "ord", "cmp", "(w^", "1")
    assert code == 2 and err


def test_ord_arity_error(capsys):
    assert run(capsys, "ord", "region", "1", "2")[0] == 2


def test_ord_undecidable(capsys):
    code, _, err = run(capsys, "ord", "cmp", "(mu f 0)", "1")
    assert code == 3 and "undecidable" in err


def test_printed_ordinals_reparse(capsys):
    _, out, _ = run(capsys, "ord", "nsum", "(+ w1 1)", "(D1 (w^ r0))", "r0")
    assert O.to_str(O.parse(out)) == out


# embed and check

def test_embed_output(desk_proof):
    text = desk_proof.read_text()
    assert "; k = 10" in text
    p, st = C.loads(text)
    rules = [p[i].rule for i in main_branch(p)]
    assert rules == ["D0"] + ["h"] * 10 + ["D1"] + ["h"] * 10 + ["cut", "ax"]
    c0 = st[p.root]
    assert isinstance(c0, O.Sum) and c0.parts[-1] == O.ONE and len(c0.parts) == 2


def test_check_clean(capsys, desk_proof):
    code, out, _ = run(capsys, "check", desk_proof)
    assert code == 0 and out.startswith("ok  o = (D0 ")


def test_check_reports_h7(capsys, tmp_path, desk_proof):
    p, st = C.loads(desk_proof.read_text())
    h = C.ProofNode("hx", "h", p[p.root].concl, (p.root,))
    bad = tmp_path / "bad.proof"
    bad.write_text(C.dumps(C.ProofFigure({**p.nodes, "hx": h}, "hx"), st))
    code, out, _ = run(capsys, "check", bad)
    assert code == 1 and "[h7]" in out


def test_check_reports_nested_ind(capsys, tmp_path):
    from dataclasses import replace
    from ordproof import transforms as T
    p, st = CF.r3_unfold()
    ind = next(n for n in p.nodes.values() if n.rule == "ind")
    nodes, inner = T.copy_subtree(p, ind.id, C.IdGen(p.nodes.keys(), "c"))
    q = C.ProofFigure({**p.nodes, **nodes, ind.id: replace(ind, prem=(ind.prem[0], inner))}, p.root).pruned()
    path = tmp_path / "nested.proof"
    path.write_text(C.dumps(q, st))
    code, out, _ = run(capsys, "check", path)
    assert code == 1 and "[h4] nested" in out


def test_check_parse_error(capsys, tmp_path):
    path = tmp_path / "broken.proof"
    path.write_text("(proof :root a")
    assert run(capsys, "check", path)[0] == 2


def test_missing_file(capsys, tmp_path):
    assert run(capsys, "check", tmp_path / "nope.proof")[0] == 2


# reduce

def test_reduce_witness_and_trace(capsys, tmp_path, desk_proof):
    trace = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "reduce", desk_proof, "--trace", trace)
    assert code == 0
    assert out.splitlines()[-1].startswith("WITNESS x=0")
    recs = [json.loads(line) for line in trace.read_text().splitlines()]
    assert recs and all(r["v"] == 1 for r in recs)
    # independent re-check of every line with ord cmp
    for r in recs:
        assert run(capsys, "ord", "cmp", r["o_after"], r["o_before"])[1] == "LT"


def test_reduce_step_limit(capsys, desk_proof):
    code, out, _ = run(capsys, "--max-steps", "0", "reduce", desk_proof)
    assert code == 5 and "STEP-LIMIT" in out


def test_flags_after_subcommand(capsys, desk_proof):
    code, _, _ = run(capsys, "reduce", desk_proof, "--max-steps", "0", "--no-strict", "--pool", "w1,(D0 1)")
    assert code == 5


def test_reduce_stuck(capsys, tmp_path):
    p, st = CF.r1_psigma1()
    path = tmp_path / "s.proof"
    path.write_text(C.dumps(p, st))
    code, out, _ = run(capsys, "reduce", path)
    assert code == 4 and out.startswith("STUCK")


def test_reduce_refuses_invalid_proof(capsys, tmp_path, desk_proof):
    p, st = C.loads(desk_proof.read_text())
    path = tmp_path / "nostock.proof"
    path.write_text(C.dumps(p, {}))
    assert run(capsys, "reduce", path)[0] == 1


def test_axioms_flag(capsys, tmp_path):
    ax = tmp_path / "ax.txt"
    ax.write_text("(< x (+ x 1))\n")
    assert run(capsys, "--axioms", ax, "ord", "cmp", "0", "1")[1] == "LT"


def test_pool_splitting():
    from ordproof.cli import _split_pool
    assert _split_pool("w1, (+ w1 1),(D0 (+ 1 1))") == (
        O.OMEGA1, O.parse("(+ w1 1)"), O.parse("(D0 2)"))
    with pytest.raises(sexpr.ParseError):
        _split_pool("(w^")


@pytest.mark.skipif(shutil.which("ordproof") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["ordproof", "ord", "cmp", "w1", "r0"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "LT"


def test_module_entry():
    r = subprocess.run([sys.executable, "-m", "ordproof.cli", "ord", "nsum", "0", "(w^ 0)"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "(w^ 0)"
