import json
import shutil
import subprocess

import pytest
from hypothesis import given, strategies as st

from critheat import cli
from critheat.errors import ConfigurationError
from critheat.records import Record, read_config, read_jsonl, write_jsonl


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    monkeypatch.delenv(cli.ENV_OUT, raising=False)
    monkeypatch.chdir(tmp_path)


def lines(path):
    return path.read_text().splitlines()


# ---- dispatch contract ----------------------------------------------------

def test_lambda_envelope_plus(tmp_path):
    assert cli.dispatch(["lambda", "--n1", "16", "--jmax", "5", "--D", "envelope+", "--out", "o"]) == 0
    out = tmp_path / "o"
    assert lines(out / "lambda_trajectory.csv")[0] == "tau,loglambda,branch"
    assert lines(out / "lambda_verdicts.csv")[0] == "j,parity,bound,lhs,rhs,pass"
    recs = read_jsonl(out / "verdicts.jsonl")
    assert recs and all(r["pass"] for r in recs)
    assert {"check", "pass", "lhs", "rhs", "tol", "anchor"} <= set(recs[0])
    assert all(r["anchor"] for r in recs)
    # the even/odd alternating bounds for j = 2..5 are all present
    js = {r["check"] for r in recs if r["check"].startswith("alternating")}
    assert len(js) == 4


def test_tail_oscillating_windows(tmp_path):
    assert cli.dispatch(["tail", "--datum", "oscillating", "--windows", "1..3", "--out", "o"]) == 0
    rows = lines(tmp_path / "o" / "tail_windows.csv")
    assert rows[0] == "j,logsqrt_t,sign,ratio_to_A1,deviation_times_logt"
    assert {r.split(",")[0] for r in rows[1:]} == {"1", "2", "3"}


def test_tail_monotone_literal_fails_companion_passes():
    assert cli.dispatch(["tail", "--out", "lit"]) == 1
    assert cli.dispatch(["tail", "--log-base", "sqrt", "--out", "half"]) == 0


def test_spectrum_small(tmp_path):
    assert cli.dispatch(["spectrum", "--R", "10,20", "--n-per-R", "50", "--out", "o"]) == 0
    assert lines(tmp_path / "o" / "spectrum.csv")[0] == "R,N,mu1,mu2R4,mu3R3,psi1_decay_fit,psi2_decay_fit"


def test_simulate_run(tmp_path):
    assert cli.dispatch(["simulate", "--horizon", "1", "--out", "o"]) == 0
    assert lines(tmp_path / "o" / "simulation.csv")[0] == "t,u0,lambda_est,energy,dt"
    assert lines(tmp_path / "o" / "snapshot.csv")[0] == "r,u"


def test_duhamel_single_case(tmp_path):
    argv = ["duhamel", "--gamma", "2", "--q", "0", "--region", "outer", "--t", "1e4,1e5",
            "--xi", "2", "--out", "o"]
    assert cli.dispatch(argv) == 0
    for t0 in ("10", "20"):
        rows = lines(tmp_path / "o" / f"duhamel_t0_{t0}.csv")
        assert rows[0] == "gamma,q,K1,logt,x,u,bound,Cemp" and len(rows) == 3


@pytest.mark.parametrize("argv", [
    ["lambda", "--bogus"],
    [],
    ["nosuch"],
    ["tail", "--beta", "1.5"],
    ["lambda", "--n1", "2"],
    ["spectrum", "--R", "20,10"],
    ["tail", "--windows", "0..2"],
    ["simulate", "--kappa", "0.7"],
    ["duhamel", "--gamma", "1"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert cli.dispatch(argv) == 2
    assert "usage error" in capsys.readouterr().err


def test_module_error_exit_1(capsys):
    # passes flag validation, rejected by the discretization (too few nodes per unit radius)
    assert cli.dispatch(["spectrum", "--R", "10,20", "--n-per-R", "20", "--out", "o"]) == 1
    err = capsys.readouterr().err
    assert "ConfigurationError" in err


def test_rerun_is_byte_identical(tmp_path):
    argv = ["lambda", "--n1", "8", "--jmax", "4", "--D", "random", "--seed", "3"]
    assert cli.dispatch(argv + ["--out", "a"]) == 0
    assert cli.dispatch(argv + ["--out", "b"]) == 0
    for name in ("lambda_trajectory.csv", "lambda_verdicts.csv", "verdicts.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# ---- configuration --------------------------------------------------------

def test_config_file_and_flag_precedence(tmp_path):
    (tmp_path / "run.cfg").write_text("# demo\nn1 = 8\njmax = 3\n\nD = envelope-  # comment\nout = cfgout\n")
    assert cli.dispatch(["--config", "run.cfg", "lambda"]) == 0
    first = lines(tmp_path / "cfgout" / "lambda_verdicts.csv")
    assert [r.split(",")[0] for r in first[1:3]] == ["2", "3"]
    rc = cli.parse(["lambda", "--config", "run.cfg", "--n1", "10"])
    assert rc.params["n1"] == 10 and rc.params["jmax"] == 3 and rc.params["D"] == "envelope-"


def test_output_directory_precedence(tmp_path, monkeypatch):
    (tmp_path / "c.cfg").write_text("out = from_cfg\n")
    assert cli.parse(["lambda"]).out.name == cli.DEFAULT_OUT
    assert cli.parse(["lambda", "--config", "c.cfg"]).out.name == "from_cfg"
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "from_env"))
    assert cli.parse(["lambda", "--config", "c.cfg"]).out.name == "from_env"
    assert cli.parse(["lambda", "--out", "flag", "--config", "c.cfg"]).out.name == "flag"


@pytest.mark.parametrize("text", ["nonsense = 1\n", "n1 = many\n", "D = sideways\n"])
def test_bad_config_values(tmp_path, text):
    (tmp_path / "bad.cfg").write_text(text)
    assert cli.dispatch(["lambda", "--config", "bad.cfg"]) == 2


def test_read_config_rejects_malformed(tmp_path):
    (tmp_path / "m.cfg").write_text("n1 16\n")
    with pytest.raises(ConfigurationError):
        read_config(tmp_path / "m.cfg")
    with pytest.raises(ConfigurationError):
        read_config(tmp_path / "missing.cfg")


def test_read_config_normalises_keys(tmp_path):
    (tmp_path / "k.cfg").write_text("beta-prime = 1.5\n  seed=4\n")
    assert read_config(tmp_path / "k.cfg") == {"beta_prime": "1.5", "seed": "4"}


@given(st.integers(1, 50), st.integers(0, 20))
def test_int_range_parses(a, k):
    assert cli.int_range(f"{a}..{a + k}") == list(range(a, a + k + 1))


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=6))
def test_float_list_round_trip(xs):
    assert cli.float_list(",".join(repr(x) for x in xs)) == xs


@pytest.mark.parametrize("text,value", [("true", True), ("0", False), ("Yes", True), ("off", False)])
def test_boolean(text, value):
    assert cli.boolean(text) is value


# ---- records --------------------------------------------------------------

def test_jsonl_one_object_per_line_and_nonfinite(tmp_path):
    recs = [Record("a", True, 1.0, 2.0, 0.0, "x"), Record("b", False, float("inf"), float("nan"))]
    write_jsonl(tmp_path / "v.jsonl", recs)
    raw = lines(tmp_path / "v.jsonl")
    assert len(raw) == 2
    b = json.loads(raw[1])
    assert b["pass"] is False and b["lhs"] is None and b["rhs"] is None


# ---- verify-all aggregation (checks stubbed, the real run is the acceptance suite)

def _fake_criteria(results):
    def gen(beta=0.75, quick=False):
        for n, ok in results:
            yield n, [Record(f"c{n}", ok, 0.0, 1.0, 0.0, "stub", f"criterion {n}")]
    return gen


def test_verify_all_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli.checks, "all_criteria", _fake_criteria([(1, True), (2, True)]))
    assert cli.dispatch(["verify-all", "--quick", "--out", "v"]) == 0
    assert lines(tmp_path / "v" / "summary.csv") == ["criterion,pass,checks", "1,1,1", "2,1,1"]
    monkeypatch.setattr(cli.checks, "all_criteria", _fake_criteria([(1, True), (2, False)]))
    assert cli.dispatch(["verify-all", "--out", "w"]) == 1
    out = capsys.readouterr().out
    assert "criterion  2: FAIL" in out
    assert len(read_jsonl(tmp_path / "w" / "verdicts.jsonl")) == 2


@pytest.mark.skipif(shutil.which("critheat") is None, reason="console script not installed")
def test_console_script_help():
    res = subprocess.run(["critheat", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "verify-all" in res.stdout
