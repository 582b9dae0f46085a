import csv
import json
from fractions import Fraction as F

import pytest

from dofcast.cli import ExperimentConfig, UsageError, main


def _rows(path):
    text = path.read_text()
    assert "\r" not in text and text.endswith("\n")
    return list(csv.DictReader(text.splitlines()))


def _rat(doc):
    return F(int(doc["num"]), int(doc["den"]))


def test_region_vertices(tmp_path, capsys):
    assert main(["region", "--K", "2", "--N", "1", "--gamma", "1", "--dm", "0",
                 "--out", str(tmp_path), "--exact"]) == 0
    rows = _rows(tmp_path / "region.csv")
    assert {"d1": "2/3", "d2": "2/3"} in [{"d1": r["d1"], "d2": r["d2"]} for r in rows]
    doc = json.loads((tmp_path / "manifest.json").read_text())
    v = [[_rat(a), _rat(b)] for a, b in doc["vertices"]]
    assert [F(2, 3), F(2, 3)] in v
    assert abs(doc["vertices"][0][0]["decimal"] - 0) < 1e-12
    assert len(doc["inequalities"]) == 5


def test_region_corner_coincidence_and_square(tmp_path):
    main(["region", "--K", "2", "--N", "1", "--gamma", "1", "--dm", "2", "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert [F(2), F(2)] in [[_rat(a), _rat(b)] for a, b in doc["vertices"]]
    main(["region", "--K", "2", "--N", "1", "--gamma", "0", "--dm", "0", "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert max(_rat(a) + _rat(b) for a, b in doc["vertices"]) == 2


def test_region_rejects_three_users(capsys):
    assert main(["region", "--K", "3", "--gamma", "1", "--dm", "1"]) == 2
    assert "K=2" in capsys.readouterr().err


@pytest.mark.parametrize("args,lower,upper,tight", [
    (["--K", "3", "--gamma", "1", "--dm", "6"], F(9), F(9), True),
    (["--K", "2", "--gamma", "1", "--dm", "1"], F(8, 3), F(8, 3), True),
    (["--K", "3", "--gamma", "1", "--dm", "1"], F(3), None, False),
])
def test_sumdof(tmp_path, args, lower, upper, tight):
    assert main(["sumdof", *args, "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "manifest.json").read_text())["result"]
    assert _rat(res["lower"]) == lower and res["tight"] is tight
    if upper is not None:
        assert _rat(res["upper"]) == upper
    else:
        assert _rat(res["upper"]) > lower


def test_sweep_three_user_tightness(tmp_path):
    assert main(["sweep", "--K", "3", "--gamma", "1", "--variable", "d_m", "--start", "0",
                 "--stop", "7", "--steps", "64", "--exact", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "sweep.csv")
    assert len(rows) == 64 and list(rows[0])[:3] == ["variable", "lower", "upper"]
    for r in rows:
        d = F(r["variable"])
        assert (r["tight"] == "true") == (d <= F(2, 9) or d >= 6), d


def test_sweep_two_user_kink_and_gamma(tmp_path, capsys):
    assert main(["sweep", "--K", "2", "--gamma", "1", "--variable", "d_m", "--start", "0",
                 "--stop", "3", "--steps", "7", "--exact"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    for r in rows:
        d = F(r["variable"])
        assert (F(r["lower"]) == 2 + d) == (d >= 2)
    assert main(["sweep", "--K", "3", "--dm", "1", "--variable", "gamma", "--steps", "11"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    lows = [float(r["lower"]) for r in rows]
    ups = [float(r["upper"]) for r in rows]
    assert all(a >= b - 1e-12 for a, b in zip(lows, lows[1:]))
    assert all(a >= b - 1e-12 for a, b in zip(ups, ups[1:]))


def test_sweep_usage_errors():
    assert main(["sweep", "--K", "2", "--gamma", "1", "--start", "3", "--stop", "1"]) == 2
    assert main(["sweep", "--K", "2", "--variable", "N"]) == 2


def test_simulate_writes_outputs(tmp_path):
    code = main(["simulate", "--K", "2", "--N", "1", "--gamma", "1", "--dm", "2",
                 "--scheme", "overload", "--trials", "40", "--grid-db", "30,40,50,60",
                 "--seed", "7", "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert code == (0 if doc["verdict"]["passed"] else 1)
    assert _rat(doc["plan"]["predicted_sum"]) == 4
    assert doc["seed"] == 7 and "1" in doc["beta"]
    rows = _rows(tmp_path / "rates.csv")
    assert [float(r["P_db"]) for r in rows] == [30, 40, 50, 60]


def test_simulate_infeasible_is_usage_error(capsys):
    assert main(["simulate", "--K", "2", "--gamma", "1", "--dm", "1", "--scheme", "overload"]) == 2
    assert "cannot run" in capsys.readouterr().err


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"K": 2, "N": 1, "gamma": "1/2", "d_m": "0.5"}))
    assert main(["sumdof", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert _rat(doc["config"]["gamma"]) == F(1, 2)
    assert main(["sumdof", "--config", str(cfg), "--dm", "1", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert _rat(doc["config"]["d_m"]) == 1


def test_unknown_keys_and_bad_values(tmp_path):
    with pytest.raises(UsageError):
        ExperimentConfig.from_dict({"K": 2, "colour": "red"})
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"K": 2, "bogus": 1}))
    assert main(["sumdof", "--config", str(bad)]) == 2
    assert main(["sumdof", "--gamma", "3/2"]) == 2
    assert main(["sumdof", "--gamma", "x"]) == 2
    assert main(["nope"]) == 2
    assert main([]) == 2
