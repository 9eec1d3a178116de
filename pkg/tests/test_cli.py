import csv
import json
import math
from pathlib import Path

import pytest

from symmetrize.cli import main

ROOT = Path(__file__).resolve().parents[1]


def write_cfg(tmp_path, cfg, name="cfg.json"):
    cfg = dict(cfg)
    cfg.setdefault("output", str(tmp_path / "out"))
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(tmp_path, verb, cfg, *extra):
    return main([verb, write_cfg(tmp_path, cfg), *extra])


def read_summary(tmp_path, sub="out"):
    return json.loads((tmp_path / sub / "summary.json").read_text())


def test_constant_function_passes_everything(tmp_path):
    ids = ["oscillation", "oscillation_concave", "rearranged_gradient", "capacitary_oscillation",
           "poincare", "gaussian_isoperimetric", "reiteration"]
    cfg = {"resolution": 512, "functions": [{"f": "1.5", "grad": "0"}],
           "inequalities": [{"id": i} for i in ids]}
    assert run(tmp_path, "verify", cfg) == 0
    s = read_summary(tmp_path)
    assert s["total"] == len(ids) and s["passed"] == len(ids)
    assert sorted(s["by_inequality"]) == sorted(ids)


def test_unknown_inequality_is_config_error(tmp_path, capsys):
    cfg = {"functions": [{"f": "x", "grad": "1"}], "inequalities": [{"id": "no_such_check"}]}
    assert run(tmp_path, "verify", cfg) == 2
    assert "no_such_check" in capsys.readouterr().err


def test_bad_json_reports_position(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "resolution": 64,\n  "tol": ,\n}\n')
    assert main(["verify", str(p)]) == 2
    assert ":3:10:" in capsys.readouterr().err


def test_unknown_key_and_bad_expression(tmp_path):
    assert run(tmp_path, "verify", {"resolutoin": 10}) == 2
    cfg = {"functions": [{"f": "x +* 2", "grad": "1"}], "inequalities": [{"id": "oscillation"}]}
    assert run(tmp_path, "verify", cfg) == 2
    cfg = {"space": {"kind": "unit_interval"}, "profile": "unit",
           "functions": [{"f": "log(x - 0.5)", "grad": "1"}], "inequalities": ["oscillation"]}
    assert run(tmp_path, "verify", cfg) == 2


def test_overflow_exit_code(tmp_path):
    cfg = {"space": {"kind": "unit_interval"}, "profile": "unit", "resolution": 256,
           "functions": [{"f": "exp(1000*x)", "grad": "1"}],
           "inequalities": [{"id": "oscillation", "q": 2}]}
    assert run(tmp_path, "verify", cfg) == 3


def test_failure_exit_code(tmp_path):
    # a gradient far below the true one cannot control the oscillation
    cfg = {"space": {"kind": "unit_interval"}, "profile": "unit", "resolution": 256,
           "functions": [{"f": "x", "grad": "0.01"}], "inequalities": [{"id": "oscillation"}]}
    assert run(tmp_path, "verify", cfg) == 1
    s = read_summary(tmp_path)
    assert s["passed"] == 0 and s["by_inequality"]["oscillation"]["worst_margin"] < -0.5


def test_reruns_are_byte_identical(tmp_path):
    cfg = {"resolution": 512, "functions": {"family": "smooth", "count": 6, "seed": 3},
           "inequalities": [{"id": "oscillation", "q": 2}, {"id": "rearranged_gradient", "q": 1}]}
    outs = []
    for k, workers in enumerate((4, 1, 4)):
        c = dict(cfg, workers=workers, output=str(tmp_path / f"run{k}"))
        assert main(["verify", write_cfg(tmp_path, c, f"c{k}.json")]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted((tmp_path / f"run{k}").iterdir())})
    assert len(outs[0]) == 2 * 6 * 2 + 1
    assert outs[0] == outs[1] == outs[2]


def test_seed_override_changes_family(tmp_path):
    cfg = {"resolution": 256, "functions": {"family": "smooth", "count": 2, "seed": 3},
           "inequalities": [{"id": "oscillation"}]}
    p = write_cfg(tmp_path, cfg)
    main(["verify", p, "--out", str(tmp_path / "a")])
    main(["verify", p, "--out", str(tmp_path / "b"), "--seed", "4"])
    a = json.loads((tmp_path / "a" / "oscillation_f000.json").read_text())
    b = json.loads((tmp_path / "b" / "oscillation_f000.json").read_text())
    assert a["function"] != b["function"]


def read_profile(tmp_path):
    with open(tmp_path / "out" / "profile.csv") as fh:
        return list(csv.reader(fh))


def test_profile_unit(tmp_path):
    cfg = {"profile": "unit", "grid": [0.1, 0.25, 0.75]}
    assert run(tmp_path, "profile", cfg) == 0
    rows = read_profile(tmp_path)
    assert rows[0] == ["t", "I", "w1", "w2", "cap1_half"]
    for r in rows[1:]:
        t, I, w1, w2, cap = r
        t = float(t)
        assert float(I) == 1.0
        assert float(w1) == pytest.approx(1 / t, rel=1e-9)
        assert float(w2) == pytest.approx(math.sqrt(3) / t, rel=1e-6)
    assert rows[1][4] != "nan" and rows[3][4] == "nan"


def test_profile_gaussian_half(tmp_path):
    assert run(tmp_path, "profile", {"profile": "gaussian", "grid": [0.5]}) == 0
    assert float(read_profile(tmp_path)[1][1]) == pytest.approx(0.3989, abs=1e-4)


def test_profile_empty_grid(tmp_path):
    assert run(tmp_path, "profile", {"grid": []}) == 0
    assert read_profile(tmp_path) == [["t", "I", "w1", "w2", "cap1_half"]]


def test_profile_overflow_sentinel(tmp_path, caplog):
    assert run(tmp_path, "profile", {"profile": "power:0.5", "grid": [1e-300, 0.25]}) == 0
    rows = read_profile(tmp_path)
    assert "inf" in rows[1] and "inf" not in rows[2]
    assert "overflow" in caplog.text


def test_kfunc_config(tmp_path):
    assert main(["kfunc", str(ROOT / "configs" / "kfunc_interval.json"), "--out", str(tmp_path / "out")]) == 0
    s = read_summary(tmp_path)
    assert s["passed"] == s["total"] == 2
    head = (tmp_path / "out" / "kfunc_f000.csv").read_text().splitlines()[0]
    assert head == "t,K,K_over_t,dK_dt,identity_residual"


def test_martingale_verb(tmp_path):
    cfg = {"seed": 5, "martingale": {"depth": 6, "count": 20}}
    assert run(tmp_path, "martingale", cfg) == 0
    s = read_summary(tmp_path)
    assert s["total"] == 40 and s["herz_sup_ratio"] <= s["herz_threshold"]
    assert len(json.loads((tmp_path / "out" / "herz_reports.json").read_text())) == 20
    assert run(tmp_path, "martingale", {"martingale": {"depth": 0}}) == 2


def test_gaussian_suite_summary_ids(tmp_path):
    cfg = str(ROOT / "configs" / "gaussian_suite.json")
    assert main(["verify", cfg, "--out", str(tmp_path / "out")]) == 0
    s = read_summary(tmp_path)
    assert set(s["by_inequality"]) == {"oscillation", "rearranged_gradient", "gaussian_isoperimetric",
                                       "poincare", "capacitary_oscillation"}
    assert s["passed"] == s["total"] == 350
