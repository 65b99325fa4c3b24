import json
import shutil
import subprocess

import pytest

from ballspace.cli import main

NORM = {"space": {"space": "BergmanType", "l": 1.5}, "function": {"poly": [[[0, 0], 1, 0]]}}
GAP = {
    "series": {"lacunary": {"freqs": "2^k", "coeffs": "2^(k*0.3)", "kmax": 30}},
    "params_list": [{"n": 1, "p": 2, "q": 1, "s": 0.6}, {"n": 1, "p": 2, "q": 1, "s": 0.9}],
}


def invoke(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def body(text):
    return "\n".join(text.splitlines()[1:])


def test_norm_of_constant(capsys):
    code, out, _ = invoke(capsys, "norm", "--json", json.dumps(NORM))
    assert code == 0 and out.startswith("# ballspace report generated")
    report = json.loads(body(out))
    assert report["result"]["rows"][0]["value"] == 1.0
    assert report["config"]["budget"] == 200000


def test_gap_verdicts(capsys):
    code, out, _ = invoke(capsys, "gap", "--json", json.dumps(GAP))
    rows = json.loads(body(out))["result"]["verdicts"]
    assert code == 0
    assert [r["verdict"] for r in rows] == ["diverges", "converges"]


def test_reports_are_reproducible_and_round_trip(capsys, tmp_path):
    _, first, _ = invoke(capsys, "gap", "--json", json.dumps(GAP))
    _, second, _ = invoke(capsys, "gap", "--json", json.dumps(GAP))
    assert body(first) == body(second)
    report = tmp_path / "report.json"
    report.write_text(first)
    _, third, _ = invoke(capsys, "gap", "--config", str(report))
    assert body(third) == body(first)


def test_csv_format_and_round_trip(capsys, tmp_path):
    code, out, _ = invoke(capsys, "norm", "--json", json.dumps(NORM), "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[1].startswith("# config: ")
    assert lines[2] == "space,function_id,value,std_error,argmax,verdict"
    path = tmp_path / "report.csv"
    path.write_text(out)
    _, again, _ = invoke(capsys, "norm", "--config", str(path))
    assert body(again) == body(out)


def test_flags_override_config(capsys, tmp_path):
    out_file = tmp_path / "r.json"
    code, _, err = invoke(capsys, "norm", "--json", json.dumps(NORM), "--seed", "9", "--budget", "1000",
                          "--out", str(out_file))
    assert code == 0 and "wrote" in err
    config = json.loads(body(out_file.read_text()))["config"]
    assert config["seed"] == 9 and config["budget"] == 1000


def test_threads_do_not_change_results(capsys):
    cfg = {"space": {"space": "N", "n": 1, "p": 2, "q": 1, "s": 0.8},
           "function": {"poly": [[[1], 1, 0], [[3], 0, 0.5]]}, "grid": {"refine": False}}
    _, one, _ = invoke(capsys, "norm", "--json", json.dumps(cfg), "--budget", "20000", "--threads", "1")
    _, four, _ = invoke(capsys, "norm", "--json", json.dumps(cfg), "--budget", "20000", "--threads", "4")
    assert json.loads(body(one))["result"] == json.loads(body(four))["result"]


@pytest.mark.parametrize("argv", [[], ["frobnicate"]])
def test_unknown_command(capsys, argv):
    code, out, err = invoke(capsys, *argv)
    assert code == 64 and out == "" and "usage" in err.lower()


def test_malformed_json_reports_position(capsys):
    code, _, err = invoke(capsys, "norm", "--json", '{"space": {"space": "N",}}')
    assert code == 2 and "line 1 column" in err


def test_bad_field_is_named(capsys):
    cfg = {"space": {"space": "N", "n": 1, "p": 2, "q": 1, "s": -1}, "function": {"poly": [[[0], 1, 0]]}}
    code, _, err = invoke(capsys, "norm", "--json", json.dumps(cfg))
    assert code == 2 and "space" in err


def test_bad_atomic_exponent(capsys):
    cfg = {"atomic": {"b": 0.1, "atoms": [[1, 0, [[0.5, 0]]]]}, "params": {"n": 1, "p": 2, "q": 1, "s": 0.8}}
    assert invoke(capsys, "atomic", "--json", json.dumps(cfg))[0] == 2


def test_argparse_error(capsys):
    assert invoke(capsys, "norm", "--budget", "lots")[0] == 2


def test_inconclusive_exit(capsys):
    cfg = {"space": {"space": "N", "n": 1, "p": 2, "q": 1, "s": 0.8},
           "function": {"lacunary": {"freqs": "2^k", "coeffs": "2^(k/2)", "kmax": 12}},
           "grid": {"refine": False}}
    code, out, _ = invoke(capsys, "membership", "--json", json.dumps(cfg), "--budget", "20000")
    assert code in (0, 3)
    verdict = json.loads(body(out))["result"]["reports"][0]["verdict"]
    assert (code == 3) == (verdict == "inconclusive")


@pytest.mark.skipif(shutil.which("ballspace") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["ballspace", "norm", "--json", json.dumps(NORM)], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(body(proc.stdout))["result"]["rows"][0]["value"] == 1.0
