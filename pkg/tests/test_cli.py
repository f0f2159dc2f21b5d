"""Command-line runs: exit codes, determinism and output formats."""

import json
import math

import numpy as np
import pytest

from hcgrowth import make_spec
from hcgrowth.cli import InputError, build_parser, config_from_dict, main
from hcgrowth.serialize import SCHEMA_VERSION, curve_csv, curve_from_dict, curve_to_dict, dumps, rows_csv
from hcgrowth.transform import TransformCurve, TransformPoint, sample_curve


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    inst = {"n": 2, "points": [{"weight": 0.5, "conditional": [0.7, 0.3]},
                               {"weight": 0.5, "conditional": [0.2, 0.8]}]}
    hset = {"kind": "explicit-list", "tables": [[[0.5], [-0.5]], [[1.0], [1.0]], [[-0.2], [0.3]]],
            "closure": "complete"}
    return {
        "spec": write(tmp_path / "spec.json", {"family": "margin", "phi_id": "exponential"}),
        "hinge": write(tmp_path / "hinge.json", {"family": "margin", "phi_id": "hinge"}),
        "csq": write(tmp_path / "csq.json", {"family": "constrained", "phi_id": "constrained-square", "n": 5}),
        "instance": write(tmp_path / "inst.json", inst),
        "hset": write(tmp_path / "hset.json", hset),
        "sample": write(tmp_path / "sample.json", {"instance": inst, "sample": [[0, 0], [1, 1], [1, 0], [0, 0]]}),
        "dir": tmp_path,
    }


class TestExitCodes:
    def test_transform_then_growth(self, files, capsys):
        d = files["dir"]
        assert main(["transform", "--spec", files["spec"], "--t-grid", "log:1e-3:0.1:12",
                     "--out", str(d / "c.json"), "--csv", str(d / "c.csv")]) == 0
        curve = json.loads((d / "c.json").read_text())
        assert curve["schema"] == SCHEMA_VERSION and len(curve["samples"]) == 12
        assert (d / "c.csv").read_text().splitlines()[0] == "t,T,a_star,tau_star"
        assert main(["growth", "--curve", str(d / "c.json"), "--out", str(d / "g.json")]) == 0
        rep = json.loads((d / "g.json").read_text())
        assert rep["verdict"] == "quadratic"

    def test_check_gamma_failure_exits_one(self, files, capsys):
        d = files["dir"]
        assert main(["transform", "--spec", files["csq"], "--t-grid", "lin:0.05:0.5:6",
                     "--out", str(d / "c.json")]) == 0
        assert main(["check-gamma", "--curve", str(d / "c.json"), "--out", str(d / "x.json")]) == 1
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["exit"] == 1 and err["error"] == "invariant-violation"
        assert main(["check-gamma", "--curve", str(d / "c.json"), "--variant", "rescaled",
                     "--out", str(d / "x.json")]) == 0

    def test_malformed_instance_names_field(self, files, capsys):
        bad = write(files["dir"] / "bad.json", {"points": [{"weight": 1.0}]})
        assert main(["mingap", "--instance", bad, "--hset", files["hset"], "--spec", files["spec"]]) == 2
        err = json.loads(capsys.readouterr().err.strip())
        assert err["exit"] == 2 and "conditional" in err["message"]

    def test_unknown_instance_key(self, files, capsys):
        bad = write(files["dir"] / "bad.json", {"points": [{"weight": 1.0, "conditional": [1, 0]}], "colour": 3})
        assert main(["mingap", "--instance", bad, "--hset", files["hset"], "--spec", files["spec"]]) == 2
        assert "colour" in capsys.readouterr().err

    def test_missing_file_and_bad_json(self, files, capsys):
        assert main(["growth", "--curve", str(files["dir"] / "nope.json")]) == 2
        (files["dir"] / "junk.json").write_text("{not json")
        assert main(["growth", "--curve", str(files["dir"] / "junk.json")]) == 2

    def test_no_command_prints_help(self, capsys):
        assert main([]) == 2
        assert "Exit status" in capsys.readouterr().out

    def test_mingap(self, files, capsys):
        assert main(["mingap", "--instance", files["instance"], "--hset", files["hset"],
                     "--spec", files["spec"]]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["mingap"] == pytest.approx(rep["approx_error"] - rep["pointwise_diff"], abs=1e-12)

    def test_verify_small(self, capsys):
        assert main(["verify", "--seed", "5", "--draws", "30", "--gamma-variant", "rescaled"]) == 0
        assert json.loads(capsys.readouterr().out)["violations"] == 0

    def test_radbound(self, files, capsys):
        assert main(["radbound", "--sample", files["sample"], "--hset", files["hset"], "--spec", files["spec"]]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["m"] == 4 and rep["rademacher"]["method"] == "exact-enumeration"
        assert math.isfinite(rep["bound"])

    def test_radbound_label_out_of_range(self, files, capsys):
        s = write(files["dir"] / "s.json", {"instance": json.loads(open(files["instance"]).read()),
                                            "sample": [[0, 2]]})
        assert main(["radbound", "--sample", s, "--hset", files["hset"], "--spec", files["spec"]]) == 2
        assert "label" in capsys.readouterr().err


class TestHelp:
    @pytest.mark.parametrize("cmd,phrase", [("transform", "Square-root bounds"), ("verify", "E01(h)"),
                                            ("mingap", "minimizability gap"), ("radbound", "1 - delta")])
    def test_help_describes_result(self, cmd, phrase, capsys):
        with pytest.raises(SystemExit):
            main([cmd, "--help"])
        assert phrase in capsys.readouterr().out


class TestConfig:
    def test_config_file_runs(self, files, capsys):
        cfg = write(files["dir"] / "cfg.json", {"command": "transform", "spec": files["hinge"],
                                                "t-grid": "lin:0.1:0.5:5"})
        assert main(["--config", cfg]) == 0
        curve = json.loads(capsys.readouterr().out)
        np.testing.assert_allclose([s["T"] for s in curve["samples"]], np.linspace(0.1, 0.5, 5), atol=1e-12)

    def test_unknown_key_rejected(self):
        with pytest.raises(InputError, match="seeds"):
            config_from_dict({"command": "verify", "seeds": 3}, build_parser())

    def test_paths_resolved(self, files):
        cfg = config_from_dict({"command": "growth", "curve": "rel/c.json"}, build_parser())
        assert cfg.options["curve"].startswith("/")

    def test_same_config_twice_is_byte_identical(self, files):
        d = files["dir"]
        outs = []
        for k in range(2):
            out = d / f"run{k}.json"
            cfg = write(d / f"cfg{k}.json", {"command": "verify", "seed": 11, "draws": 40, "out": str(out)})
            main(["--config", cfg])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_transform_twice_is_byte_identical(self, files):
        d = files["dir"]
        for k in range(2):
            main(["transform", "--spec", files["spec"], "--t-grid", "log:1e-3:0.3:6",
                  "--out", str(d / f"t{k}.json"), "--csv", str(d / f"t{k}.csv")])
        assert (d / "t0.json").read_bytes() == (d / "t1.json").read_bytes()
        assert (d / "t0.csv").read_bytes() == (d / "t1.csv").read_bytes()


class TestSerialize:
    def test_dumps_stable(self):
        text = dumps({"b": np.float64(0.1), "a": [np.int64(3), float("nan")], "c": np.array([1.5, np.inf])})
        assert text == dumps(json.loads(text))
        obj = json.loads(text)
        assert obj == {"schema": 1, "a": [3, None], "b": 0.1, "c": [1.5, None]}
        assert text.endswith("\n") and "NaN" not in text

    def test_shortest_repr(self):
        assert '"x": 0.1' in dumps({"x": 0.1})

    def test_curve_round_trip(self):
        curve = sample_curve(make_spec("comp-sum", "neg-log", 3), "log:1e-3:0.5:5")
        again = curve_from_dict(json.loads(dumps(curve_to_dict(curve))))
        np.testing.assert_array_equal(again.T, curve.T)
        assert again.spec.to_dict() == curve.spec.to_dict()

    def test_nan_becomes_empty_cell(self):
        curve = TransformCurve(make_spec("margin", "hinge"),
                               [TransformPoint(0.1, 0.1, 1.0), TransformPoint(0.2, float("nan"), None)], {})
        lines = curve_csv(curve).splitlines()
        assert lines[1].startswith("0.1,0.1,1.0")
        assert lines[2] == "0.2,,,"
        back = curve_from_dict(json.loads(dumps(curve_to_dict(curve))))
        assert math.isnan(back.T[1])

    def test_rows_csv(self):
        text = rows_csv([{"a": 1, "b": 0.5}, {"a": 2, "b": None}], ["a", "b"])
        assert text.splitlines() == ["a,b", "1,0.5", "2,"]
