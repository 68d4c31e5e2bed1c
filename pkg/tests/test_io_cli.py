import io
import json

import numpy as np
import pytest
from conftest import random_space
from hypothesis import given
from hypothesis import strategies as st

from surplex.acceptance import Shortfall, TestScenario, accepts
from surplex.cli import run
from surplex.errors import ParseError, SpaceMismatch, SpecError
from surplex.io import dump_spec, load_scenarios, load_spec, parse_spec_text, write_scenarios
from surplex.prob_core import RandVar, uniform_space
from surplex.risk_measures import Power


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return p
    return write


UNIFORM_CSV = "outcome,prob,X,Y\nw1,0.25,-1,0\nw2,0.25,2,0\nw3,0.25,3,-3\nw4,0.25,4,0\n"


def test_load_scenarios(files):
    space, cols = load_scenarios(files("s.csv", UNIFORM_CSV))
    assert space.n == 4 and space.labels == ("w1", "w2", "w3", "w4")
    assert list(cols) == ["X", "Y"] and cols["X"].tolist() == [-1, 2, 3, 4]


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("\n\n", 1),
    ("outcome,p,X\nw1,1,0\n", 1),
    ("outcome,prob,X\nw1,0.5,0\nw2,0.5\n", 3),
    ("outcome,prob,X\nw1,0.5,abc\nw2,0.5,1\n", 2),
    ("outcome,prob,X\n", 2),
])
def test_parse_errors_have_locations(files, text, line):
    with pytest.raises(ParseError) as info:
        load_scenarios(files("bad.csv", text))
    assert info.value.line == line
    assert "bad.csv" in str(info.value)


def test_prob_sum_needs_normalize(files):
    p = files("s.csv", "outcome,prob,X\na,0.3,1\nb,0.6,-1\n")
    with pytest.raises(ParseError, match="normalize"):
        load_scenarios(p)
    space, _ = load_scenarios(p, normalize=True)
    assert space.probs.sum() == pytest.approx(1.0, abs=1e-15)


@given(data=st.data())
def test_csv_roundtrip_bit_exact(data, tmp_path_factory):
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    sp = random_space(rng, int(rng.integers(1, 9)))
    digits = data.draw(st.integers(1, 15))
    cols = {f"c{j}": RandVar([float(f"{v:.{digits}g}") for v in rng.normal(0, 10, sp.n)], sp)
            for j in range(int(rng.integers(1, 4)))}
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    write_scenarios(path, sp, cols)
    sp2, cols2 = load_scenarios(path)
    assert sp2.probs.tobytes() == sp.probs.tobytes()
    for k in cols:
        assert cols2[k].values.tobytes() == cols[k].values.tobytes()


def test_spec_loading(files, u4):
    spec = parse_spec_text('{"family":"TestScenario","params":{"event":[0,1]}}', u4)
    assert spec == TestScenario(u4.event([0, 1]))
    sf = Shortfall(Power(2), 1.5)
    assert load_spec(files("sf.json", dump_spec(sf))) == sf
    with pytest.raises(ParseError) as info:
        parse_spec_text('{"family": "VaRLevel",\n "params": {alpha: 1}}')
    assert info.value.line == 2
    with pytest.raises(SpecError):
        parse_spec_text('{"family":"VaRLevel","params":{"alpha":1.5}}')
    with pytest.raises(SpecError):
        parse_spec_text('{"family":"TestScenario","params":{"event":[0]}}')


def test_spec_space_mismatch(u4):
    spec = parse_spec_text('{"family":"TestScenario","params":{"event":[0]}}', uniform_space(3))
    with pytest.raises(SpaceMismatch):
        accepts(spec, RandVar([0, 0, 0, 0], u4))


def test_cli_evaluate(files):
    s = files("s.csv", UNIFORM_CSV)
    v = files("var03.json", '{"family":"VaRLevel","params":{"alpha":0.3}}')
    code, out, _ = cli("evaluate", "--scenarios", s, "--spec", v)
    assert code == 0
    rep = json.loads(out)
    row = rep["results"]["positions"][0]
    assert row["name"] == "X" and row["accepted"] is True
    assert row["var"] == -2 and row["es"] == pytest.approx(0.5, abs=1e-12)
    assert rep["seed"] == 0 and rep["version"] and "timestamp" in rep
    assert rep["config"]["spec"] == str(v)


def test_cli_evaluate_text_and_output(files, tmp_path):
    s = files("s.csv", UNIFORM_CSV)
    v = files("v.json", '{"family":"VaRLevel","params":{"alpha":0.3}}')
    code, out, _ = cli("evaluate", "--scenarios", s, "--spec", v, "--format", "text")
    assert code == 0 and "accepted" in out and out.splitlines()[0].startswith("surplex")
    dest = tmp_path / "r.json"
    code, out, _ = cli("evaluate", "--scenarios", s, "--spec", v, "--output", dest)
    assert code == 0 and out == "" and json.loads(dest.read_text())["command"] == "evaluate"


def test_cli_check_etl(files):
    etl = files("etl.json", '{"family":"ExpectedTailLoss","params":{"alpha":0.3,"c":1}}')
    code, out, _ = cli("check", "--spec", etl, "--budget", 2000, "--seed", 7, "--deterministic")
    assert code == 0
    res = json.loads(out)["results"]
    assert res["summary"] == {"monotone": True, "convex": True, "cone": False,
                              "surplus_invariant": True, "numeraire_invariant": False}
    assert res["numeraire_equivalence_consistent"] is True
    code, _, _ = cli("check", "--spec", etl, "--budget", 500, "--strict", "--properties", "cone")
    assert code == 1
    code, _, _ = cli("check", "--spec", etl, "--budget", 500, "--strict", "--properties", "convex")
    assert code == 0


def test_cli_exit_codes(files):
    empty = files("empty.csv", "")
    v = files("v.json", '{"family":"VaRLevel","params":{"alpha":0.3}}')
    code, _, err = cli("evaluate", "--scenarios", empty, "--spec", v)
    assert code == 2 and "ParseError" in err
    assert cli("evaluate", "--scenarios", files("s.csv", UNIFORM_CSV), "--spec", files("b.json", "{"))[0] == 2
    assert cli("check")[0] == 2
    assert cli("nonsense")[0] == 2
    assert cli("check", "--spec", "no_such_file.json")[0] == 2


def test_cli_decompose(files):
    sf = files("sf.json", dump_spec(Shortfall(Power(2), 1.0)))
    code, out, _ = cli("decompose", "--spec", sf, "--budget", 300, "--deterministic")
    part = json.loads(out)["results"]["partition"]
    assert code == 0 and part["B"] == [0, 1, 2, 3]
    assert part["caps"] == pytest.approx([2.0] * 4, rel=1e-9)
    var = files("v.json", '{"family":"VaRLevel","params":{"alpha":0.3}}')
    code, out, _ = cli("decompose", "--spec", var, "--budget", 300, "--strict")
    res = json.loads(out)["results"]
    assert code == 1 and res["error"] == "DecompositionMismatch" and len(res["witness"]) == 4


def test_cli_bound(files):
    etl = files("etl.json", '{"family":"ExpectedTailLoss","params":{"alpha":0.3,"c":1}}')
    code, out, _ = cli("bound", "--spec", etl, "--verify", "--budget", 500, "--deterministic")
    res = json.loads(out)["results"]
    assert code == 0 and res["verification"]["holds"]
    assert res["bound"]["levels"][-1] == 1 and len(res["bound"]["breakpoints"]) == 512
    assert [q["alpha"] for q in res["quantiles"]] == [0.001, 0.01, 0.05, 0.1, 0.25, 0.5]
    mem = files("m.csv", "outcome,prob,a,b\nw1,0.5,-1,0\nw2,0.5,0,-3\n")
    code, out, _ = cli("bound", "--scenarios", mem)
    assert code == 0 and json.loads(out)["results"]["bound"] == {"breakpoints": [-3.0], "levels": [1.0]}
    assert cli("bound", "--scenarios", files("s.csv", UNIFORM_CSV))[0] == 2


def test_cli_dual(files):
    s = files("s.csv", "outcome,prob,X,M\nw1,0.25,-3,-1\nw2,0.25,0,-1\nw3,0.25,0,2\nw4,0.25,0,0\n")
    sf = files("sf.json", dump_spec(Shortfall(Power(2), 1.0)))
    code, out, _ = cli("dual", "--scenarios", s, "--spec", sf, "--refined", "--strict")
    rows = json.loads(out)["results"]["positions"]
    assert code == 0
    assert [r["dual_holds"] for r in rows] == [False, True]
    assert all(r["agrees"] for r in rows)


def test_cli_arbitrage(files):
    code, out, _ = cli("arbitrage", "--measure", "ES", "--alpha", 0.5, "--rate", "1,0.1,1,1", "--deterministic")
    res = json.loads(out)["results"]
    assert code == 0 and res["found"]
    w = res["witness"]
    assert set(w) == {"X", "R", "rho_before", "rho_after", "measure", "alpha"}
    code, out, _ = cli("arbitrage", "--measure", "VaR", "--alpha", 0.3, "--rate", "1,0.1,1,1",
                       "--budget", 300, "--strict")
    assert code == 0 and not json.loads(out)["results"]["found"]
    assert cli("arbitrage", "--alpha", 0.5, "--rate", "1,0,1,1")[0] == 2
    assert cli("arbitrage", "--rate", "1,1")[0] == 2
    s = files("r.csv", "outcome,prob,R\nw1,0.25,1\nw2,0.25,0.1\nw3,0.25,1\nw4,0.25,1\n")
    code, out, _ = cli("arbitrage", "--alpha", 0.5, "--scenarios", s, "--strict")
    assert code == 1 and json.loads(out)["results"]["found"]


def test_cli_witness_replays_through_evaluate(files, tmp_path):
    sf = files("sf.json", dump_spec(Shortfall(Power(2), 1.0)))
    code, out, _ = cli("check", "--spec", sf, "--properties", "cone", "--budget", 500, "--deterministic")
    w = json.loads(out)["results"]["verdicts"]["cone"]["witness"]
    sp = uniform_space(4)
    cols = {"member": RandVar(w["members"][0], sp), "violator": RandVar(w["violator"], sp)}
    path = tmp_path / "w.csv"
    write_scenarios(path, sp, cols)
    code, out, _ = cli("evaluate", "--scenarios", path, "--spec", sf, "--alpha", 0.3)
    rows = json.loads(out)["results"]["positions"]
    assert [r["accepted"] for r in rows] == [True, False]


def test_cli_deterministic_bytes(files):
    etl = files("etl.json", '{"family":"ExpectedTailLoss","params":{"alpha":0.3,"c":1}}')
    outs = {cli("check", "--spec", etl, "--budget", 300, "--seed", 3, "--deterministic")[1] for _ in range(3)}
    assert len(outs) == 1
    a = cli("check", "--spec", etl, "--budget", 300, "--seed", 3)[1]
    assert "timestamp" in json.loads(a)


def test_text_reports_abbreviate_long_lists(files):
    etl = files("etl.json", '{"family":"ExpectedTailLoss","params":{"alpha":0.3,"c":1}}')
    _, text, _ = cli("bound", "--spec", etl, "--format", "text")
    line = next(ln for ln in text.splitlines() if ln.strip().startswith("breakpoints:"))
    assert "... 506 more ..." in line
    _, out, _ = cli("bound", "--spec", etl)
    assert len(json.loads(out)["results"]["bound"]["breakpoints"]) == 512
