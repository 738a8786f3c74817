import json

import numpy as np
import pytest

from maxstein import __version__
from maxstein.cli import main, packaged_laws, resolve_law
from maxstein.measures import write_law
from maxstein.report import ExperimentReport, render, write_report


def run(argv, tmp_path, name="out.csv"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out.read_text() if out.exists() else None


# report ------------------------------------------------------------------------

def test_empty_report_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    write_report(ExperimentReport(["a", "b"], meta={"seed": 1}), path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2 and lines[1] == "a,b"
    meta = json.loads(lines[0].removeprefix("# meta: "))
    assert meta == {"seed": 1, "version": __version__}


def test_report_formatting():
    rep = ExperimentReport(["name", "x", "v", "ok"], meta={"arr": np.arange(2), "f": np.float64(0.1)})
    rep.add('a,"b"', 0.1, np.array([1.0, 2.5]), True)
    text = render(rep)
    assert text.splitlines()[2] == '"a,""b""",0.1,1.0 2.5,true'
    assert '"arr":[0,1]' in text
    assert rep.column("x") == [0.1]
    with pytest.raises(ValueError):
        rep.add(1)


def test_report_to_stdout(capsys):
    write_report(ExperimentReport(["a"]), "-")
    assert capsys.readouterr().out.splitlines()[1] == "a"


# cli ---------------------------------------------------------------------------

def test_packaged_laws():
    assert packaged_laws() == ["dep2.law", "indep2.law", "mix2.law"]
    assert resolve_law("indep2").alpha == 2.0


def test_cdf_example(capsys):
    assert main(["cdf", "--law", "indep2", "--z", "1,1"]) == 0
    assert capsys.readouterr().out.strip() == "0.1353353"


def test_cdf_from_path(tmp_path, capsys):
    law_file = tmp_path / "x.law"
    write_law(resolve_law("dep2"), law_file)
    assert main(["cdf", "--law", str(law_file), "--z", "1,1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(np.exp(-1), rel=1e-6)


def test_stein_check_indicator(tmp_path):
    code, text = run(["stein-check", "--law", "dep2", "--mode", "indicator", "--z", "1,1", "--points", "1000",
                      "--seed", "7"], tmp_path)
    assert code == 0
    meta = json.loads(text.splitlines()[0].removeprefix("# meta: "))
    assert meta["max_residual"] <= 1e-10
    assert len(text.splitlines()) == 1002


def test_stein_check_tolerance_failure(tmp_path):
    code, _ = run(["stein-check", "--law", "dep2", "--mode", "indicator", "--z", "1,1", "--points", "100",
                   "--tol", "-1"], tmp_path)
    assert code == 1


def test_stein_check_smooth(tmp_path):
    code, text = run(["stein-check", "--law", "mix2", "--mode", "smooth", "--points", "20000", "--seed", "3"], tmp_path)
    assert code == 0
    assert len(text.splitlines()) == 2 + 14


def test_usage_errors(capsys):
    assert main([]) == 2
    with pytest.raises(SystemExit) as info:
        main(["cdf", "--law", "indep2", "--z", "1,1", "--bogus"])
    assert info.value.code == 2
    assert main(["cdf", "--law", "nope", "--z", "1,1"]) == 2
    assert main(["cdf", "--law", "indep2", "--z", "1,x"]) == 2
    assert main(["cdf", "--law", "indep2", "--z", "1,1,1"]) == 2
    assert main(["constants", "--law", "indep2", "--alpha1", "3", "--alpha2", "2"]) == 2
    assert main(["stein-check", "--law", "dep2", "--mode", "indicator"]) == 2
    assert main(["semigroup", "--law", "indep2", "--t", "1", "--x", "1,1"]) == 2
    err = capsys.readouterr().err
    assert "nope" in err and "--z" in err


def test_lepage_rate_fit_refused(tmp_path):
    code, text = run(["lepage-rate", "--law", "indep2", "--n-grid", "8:64:geometric", "--big-n", "1024",
                      "--reps", "2000", "--fit"], tmp_path)
    assert code == 1
    assert text.splitlines()[1] == "n,estimate,std_error,theoretical"
    assert "fit_error" in text.splitlines()[0]


def test_constants_output(tmp_path):
    code, text = run(["constants", "--law", "indep2", "--alpha1", "2", "--alpha2", "3"], tmp_path)
    assert code == 0
    row = text.splitlines()[2].split(",")
    assert row[0] == "CK" and float(row[1]) == pytest.approx(2 * 1.7926922696758778, rel=1e-9)


DETERMINISM = [
    ["sample", "--law", "mix2", "--n", "3000"],
    ["sample", "--law", "dep2", "--n", "200", "--method", "lepage", "--big-n", "200"],
    ["cdf", "--law", "indep2", "--z", "1,2"],
    ["semigroup", "--law", "mix2", "--t", "0.5", "--x", "1,1", "--indicator", "1,1.5", "--reps", "70000"],
    ["semigroup", "--law", "indep2", "--t", "0.5", "--x", "1,1", "--bank", "smooth", "--reps", "5000",
     "--method", "chaos"],
    ["stein-check", "--law", "dep2", "--mode", "indicator", "--z", "1,1", "--points", "500"],
    ["stein-check", "--law", "indep2", "--mode", "smooth", "--points", "3000"],
    ["law-distance", "--law1", "indep2", "--law2", "mix2", "--metric", "kolmogorov", "--grid", "16"],
    ["law-distance", "--law1", "indep2", "--law2", "mix2", "--metric", "d2", "--reps", "70000"],
    ["constants", "--law", "mix2", "--alpha1", "1.5", "--alpha2", "2.5", "--metric", "W"],
    ["lepage-rate", "--law", "indep2", "--n-grid", "2:32:geometric", "--big-n", "1024", "--reps", "70000",
     "--metric", "kolmogorov"],
]


@pytest.mark.parametrize("argv", DETERMINISM, ids=lambda a: a[0])
def test_cli_deterministic(argv, tmp_path):
    outs = []
    for i, threads in enumerate(("1", "1", "8")):
        code, text = run(argv + ["--seed", "11", "--threads", threads], tmp_path, f"run{i}.csv")
        assert code == 0
        outs.append(text)
    assert outs[0] == outs[1] == outs[2]
