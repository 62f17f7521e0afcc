import json

import pytest

from grasspcp import cli
from grasspcp.csp import make_instance


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


@pytest.fixture
def eq_file(tmp_path):
    inst = make_instance(2, {"x": 2, "y": 2}, [(("x", "y"), [(0, 0), (1, 1)]), (("x", "y"), [(0, 1), (1, 0)])])
    p = tmp_path / "inst.json"
    p.write_text(json.dumps(inst.to_json()))
    return str(p)


def test_csp_value_prints_half(capsys, eq_file):
    code, rec = run(capsys, "csp-value", "--in", eq_file)
    assert code == 0
    assert rec["result"]["value_text"] == "1/2 (0.5)"
    assert rec["result"]["value"] == {"num": 1, "den": 2, "float": 0.5}


def test_gen_3lin_writes_instance(capsys, tmp_path):
    out = tmp_path / "g.json"
    code, rec = run(capsys, "gen-3lin", "--vars", "30", "--eqs", "40", "--eta", "0", "--seed", "7", "--out", str(out))
    assert code == 0
    assert rec["parameters"]["seed"] == 7
    saved = json.loads(out.read_text())
    assert len(saved["instance"]["equations"]) == 40


def test_counting_lemma_asserts(capsys):
    code, rec = run(capsys, "counting-lemma", "--n", "6", "--ltop", "2", "--lbot", "1", "--k", "2", "--seed", "1")
    assert code == 0
    statuses = {a["name"]: a["status"] for a in rec["assertions"]}
    assert statuses["edges_vs_inner_product"] == "pass"


def test_missing_seed_is_usage_error(capsys):
    assert cli.main(["gen-3lin", "--vars", "10", "--eqs", "5"]) == 1


def test_unknown_command_is_usage_error(capsys):
    assert cli.main(["frobnicate"]) == 1


def test_domain_error_exits_one(capsys, eq_file):
    assert cli.main(["reduce-regularize", "--in", eq_file, "--d", "1", "--seed", "1"]) == 1


def test_failed_assertion_exits_two(capsys, monkeypatch, eq_file):
    def bad(a):
        return {}, [cli.check("always_false", 1, 0, "<=")]
    monkeypatch.setattr(cli, "cmd_csp_value", bad)
    parser_fn = cli.build_parser
    monkeypatch.setattr(cli, "build_parser", lambda: _swap(parser_fn(), bad))
    assert cli.main(["csp-value", "--in", eq_file]) == 2
    assert "always_false" in capsys.readouterr().err


def _swap(parser, fn):
    for action in parser._subparsers._group_actions:
        action.choices["csp-value"].set_defaults(fn=fn)
    return parser


def test_vacuous_status():
    assert cli.check("x", 5, 1, "<=", asserted=False)["status"] == "vacuous"


def test_csv_output(capsys, eq_file):
    assert cli.main(["--format", "csv", "csp-value", "--in", eq_file]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "key,value"
    assert "result.value,0.5" in out


def test_repeat_runs_identical(capsys):
    argv = ["covering", "--kind", "advice", "--J", "2", "--beta", "0.1", "--r1", "1", "--samples", "500", "--seed", "3"]
    _, a = run(capsys, *argv)
    _, b = run(capsys, *argv)
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b
