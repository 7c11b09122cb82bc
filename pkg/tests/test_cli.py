import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from tiercomp import analytic
from tiercomp.cli import config_to_mapping, main
from tiercomp.model import Scheme, default_config


@pytest.fixture
def config_file(tmp_path):
    def write(**changes):
        doc = config_to_mapping(default_config())
        for k, v in changes.items():
            if v is None:
                doc.pop(k, None)
            else:
                doc[k] = v
        path = tmp_path / f"cfg{len(list(tmp_path.iterdir()))}.json"
        path.write_text(json.dumps(doc))
        return str(path)

    return write


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_analyze_traditional(config_file, capsys):
    code, out, err = run(["analyze", config_file(), "--scheme", "tr", "--metrics", "outage"], capsys)
    assert code == 0
    rep = json.loads(out)["reports"][0]
    assert rep["scheme"] == "tr"
    assert rep["outage"] == pytest.approx(analytic.outage_overall(Scheme.TRADITIONAL, default_config()), abs=1e-12)
    assert rep["outage"] == pytest.approx(0.43996, abs=1e-5)
    assert "resolved config" in err and "beta_linear" in err


def test_beta_zero_db_lactc_equals_traditional(config_file, capsys):
    path = config_file(beta_db=0.0)
    _, a, _ = run(["analyze", path, "--scheme", "lactc"], capsys)
    _, b, _ = run(["analyze", path, "--scheme", "tr"], capsys)
    ra, rb = json.loads(a)["reports"][0], json.loads(b)["reports"][0]
    ra.pop("scheme"), rb.pop("scheme")
    assert ra == rb


def test_beta_linear_key_and_cli_override(config_file, capsys):
    _, a, _ = run(["analyze", config_file(beta_db=None, beta_linear=10**0.8), "--metrics", "modes"], capsys)
    _, b, _ = run(["analyze", config_file(), "--beta-db", "8", "--metrics", "modes"], capsys)
    assert json.loads(a)["reports"][0]["q_comp"] == pytest.approx(json.loads(b)["reports"][0]["q_comp"], rel=1e-12)


def test_output_file(config_file, tmp_path, capsys):
    out = tmp_path / "report.json"
    code, stdout, _ = run(["analyze", config_file(), "--metrics", "modes", "-o", str(out)], capsys)
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["reports"][0]["q_macro"] == pytest.approx(0.4718404, abs=1e-6)


def test_missing_config_is_io_error(tmp_path, capsys):
    code, _, err = run(["analyze", str(tmp_path / "nope.json")], capsys)
    assert code == 1 and "cannot read" in err


def test_malformed_json_is_io_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(["analyze", str(path)], capsys)[0] == 1


@pytest.mark.parametrize(
    "changes",
    [
        {"beta_linear": 2.0},  # both beta keys
        {"beta_db": None},  # no beta at all
        {"macro.alpha": None},
        {"extra": 1},
        {"beta_db": -3.0},
        {"pico.alpha": 2.0},
        {"noise_dbm": "loud"},
    ],
)
def test_invalid_configs_exit_2(config_file, capsys, changes):
    code, _, err = run(["analyze", config_file(**changes)], capsys)
    assert code == 2
    assert "ERROR" in err


def test_numerical_failure_exit_3(config_file, capsys):
    code, _, _ = run(["analyze", config_file(**{"pico.intensity_per_m2": 0.0}), "--scheme", "lactc"], capsys)
    assert code == 3


def test_simulate_is_byte_identical_across_runs_and_workers(config_file, capsys):
    path = config_file()
    base = ["simulate", path, "--iterations", "400", "--seed", "42", "--scheme", "all", "-q"]
    _, a, _ = run(base, capsys)
    _, b, _ = run(base, capsys)
    _, c, _ = run(base + ["--workers", "3"], capsys)
    assert a == b == c
    doc = json.loads(a)
    assert "workers" not in a
    assert doc["settings"]["iterations"] == 400
    assert [r["scheme"] for r in doc["reports"]] == ["fc", "lactc", "tr", "re"]
    assert doc["reports"][1]["ci_half_width"]["outage"] > 0


def test_simulate_window_and_model_flags(config_file, capsys):
    code, out, _ = run(
        ["simulate", config_file(), "--iterations", "50", "--window-km", "6", "--interference-model", "coherent-pairs", "-q"],
        capsys,
    )
    assert code == 0
    settings = json.loads(out)["settings"]
    assert settings["window_half_width_m"] == 3000.0
    assert settings["interference_model"] == "coherent-pairs"


def test_validate_single_point(config_file, capsys):
    code, out, _ = run(["validate", config_file(), "--variable", "tau_db", "--values", "0", "--iterations", "1500", "--seed", "3", "-q"], capsys)
    table = rows(out)
    assert code == 0
    assert table[0] == ["variable", "scheme", "metric", "analytic", "simulated", "ci_half_width", "z", "verdict"]
    assert len(table) == 2 and table[1][-1] == "pass"


def test_validate_adds_ordering_rows(config_file, capsys):
    code, out, _ = run(
        ["validate", config_file(), "--variable", "beta_db", "--values", "0,6", "--schemes", "all", "--iterations", "1500", "--seed", "3", "-q"],
        capsys,
    )
    table = rows(out)[1:]
    ordering = [r for r in table if r[1] == "ordering"]
    # the ordering check only applies when beta > 1
    assert [r[0] for r in ordering] == ["6"]
    assert ordering[0][-1] == "pass"
    assert code == 0


def test_validate_failure_exit_code(config_file, capsys):
    code, out, _ = run(
        ["validate", config_file(), "--variable", "tau_db", "--values", "0", "--iterations", "300", "--tolerance-sigma", "0", "-q"], capsys
    )
    assert code == 2
    assert rows(out)[1][-1] == "fail"


def test_sweep_layout_and_formatting(config_file, capsys):
    code, out, _ = run(
        ["sweep", config_file(), "--variable", "tau_db", "--grid=-4:4:3", "--schemes", "lactc,tr", "--metrics", "outage,q_comp", "-q"],
        capsys,
    )
    table = rows(out)
    assert code == 0
    assert table[0] == ["variable", "scheme", "metric", "value", "ci_half_width"]
    keys = [tuple(r[:3]) for r in table[1:]]
    assert keys == [(v, s, m) for v in ("-4", "0", "4") for s in ("lactc", "tr") for m in ("outage", "q_comp")]
    assert all(r[4] == "" for r in table[1:])
    for r in table[1:]:
        digits = r[3].replace("-", "").replace(".", "").split("e")[0].lstrip("0")
        assert len(digits) <= 6 and "," not in r[3]


def test_sweep_empty_metrics_is_header_only(config_file, capsys):
    code, out, _ = run(["sweep", config_file(), "--variable", "beta_db", "--values", "3", "--metrics", "", "-q"], capsys)
    assert code == 0 and out == "variable,scheme,metric,value,ci_half_width\n"


def test_sweep_simulation_engine_fills_ci(config_file, capsys):
    code, out, _ = run(
        ["sweep", config_file(), "--variable", "tau_db", "--values", "0,3", "--engine", "simulation", "--iterations", "300", "--metrics", "outage", "-q"],
        capsys,
    )
    table = rows(out)[1:]
    assert code == 0 and len(table) == 2
    assert all(float(r[4]) > 0 for r in table)


@pytest.mark.parametrize(
    "extra",
    [["--metrics", "bogus"], ["--grid", "1:2"], ["--schemes", "xyz"]],
)
def test_sweep_bad_arguments(config_file, capsys, extra):
    argv = ["sweep", config_file(), "--variable", "beta_db", "-q"]
    if "--grid" not in extra:
        argv += ["--values", "3"]
    assert run(argv + extra, capsys)[0] == 2


def test_sweep_invalid_point_is_rejected(config_file, capsys):
    assert run(["sweep", config_file(), "--variable", "alpha1", "--values", "2", "-q"], capsys)[0] == 2


def _sweep(config_file, capsys, metrics, schemes, values):
    _, out, _ = run(["sweep", config_file(), "--variable", "beta_db", "--values", values, "--schemes", schemes, "--metrics", metrics, "-q"], capsys)
    data = {}
    for v, s, m, val, _ in rows(out)[1:]:
        data.setdefault((s, m), []).append(float(val))
    return data


def test_load_sweep_trends(config_file, capsys):
    data = _sweep(config_file, capsys, "macro_load,pico_load", "lactc,re,fc", "0,2,4,6,8,10,12")
    assert np.all(np.diff(data["re", "macro_load"]) < 0)
    assert np.ptp(data["fc", "macro_load"]) == 0 and np.ptp(data["fc", "pico_load"]) == 0
    lam1 = default_config().macro.intensity
    q = analytic.mode_probabilities(default_config())
    expected = default_config().user_intensity / lam1 * (q.q_macro + q.q_comp)
    assert np.allclose(data["lactc", "macro_load"], expected, rtol=1e-5)


def test_min_rate_sweep_trends(config_file, capsys):
    data = _sweep(config_file, capsys, "min_user_rate", "lactc,re", "0,2,4,6,8,10,12,14,16")
    re = np.array(data["re", "min_user_rate"])
    k = int(np.argmax(re))
    assert 0 < k < re.size - 1
    lactc = np.array(data["lactc", "min_user_rate"])
    m = int(np.argmax(lactc))
    assert np.all(np.diff(lactc[m:]) >= -1e-3)


def test_module_entry_point(config_file):
    res = subprocess.run([sys.executable, "-m", "tiercomp", "analyze", config_file(), "--metrics", "modes", "-q"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["reports"][0]["engine"] == "analytic"
