import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from mixability import Normal, Uniform
from mixability.cli import run
from mixability.serialization import SchemaError, loads, parse_specs, to_json

F = Fraction
COIN_THIRD = [{"type": "discrete", "points": [0, 1], "weights": ["2/3", "1/3"]}]


def mix(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, name, content):
    path = tmp_path / name
    path.write_text(content if isinstance(content, str) else json.dumps(content))
    return str(path)


class TestSpecParsing:
    def test_uniform(self):
        specs, mode = parse_specs('[{"type": "uniform", "a": 0, "b": 1}]')
        assert specs == [Uniform(0, 1)] and mode == "rational"

    def test_weights_must_sum_to_one(self):
        with pytest.raises(SchemaError, match="weights must sum to 1"):
            parse_specs('[{"type": "discrete", "points": [0, 1], "weights": [0.49, 0.49]}]')

    def test_normal_forces_float(self):
        specs, mode = parse_specs(json.dumps([
            {"type": "discrete", "points": [0, 1], "weights": ["1/2", "1/2"]},
            {"type": "normal", "mu": 0, "sigma": 1},
        ]))
        assert mode == "float" and len(specs) == 2
        assert isinstance(specs[1], Normal)
        assert not specs[0].exact

    def test_rational_mode_rejects_normal(self):
        with pytest.raises(SchemaError):
            parse_specs('[{"type": "normal", "mu": 0, "sigma": 1}]', "rational")

    def test_duplicate_keys(self):
        with pytest.raises(SchemaError):
            loads('{"type": "uniform", "a": 0, "a": 1, "b": 2}')

    def test_decimal_literals_are_exact(self):
        specs, _ = parse_specs('[{"type": "discrete", "points": [0.1, 0.3], "weights": [0.25, 0.75]}]')
        assert specs[0].points == (F(1, 10), F(3, 10))

    def test_num_den_objects(self):
        specs, _ = parse_specs('[{"type": "uniform", "a": {"num": 1, "den": 3}, "b": 1}]')
        assert specs[0].a == F(1, 3)

    def test_exact_output_round_trip(self):
        assert to_json(F(2, 3)) == {"num": 2, "den": 3}

    @pytest.mark.parametrize("text", [
        "[]",
        '[{"type": "banana"}]',
        '[{"type": "uniform", "a": 2, "b": 1}]',
        '[{"type": "uniform", "a": 0}]',
        "not json",
    ])
    def test_schema_errors(self, text):
        with pytest.raises(SchemaError):
            parse_specs(text)


class TestCommands:
    def test_check_uniform_pair(self, tmp_path):
        path = write(tmp_path, "u.json", [{"type": "uniform", "a": 0, "b": 1}])
        code, out, _ = mix("check", path, "--n", "2")
        assert code == 0
        assert json.loads(out)["verdict"]["status"] == "mixable"

    def test_check_with_norm_grid(self, tmp_path):
        path = write(tmp_path, "c.json", COIN_THIRD)
        code, out, _ = mix("check", path, "--n", "2", "--p-grid", "1,2,inf", "--verify")
        report = json.loads(out)
        assert code == 1 and report["verified"]
        assert report["norm_check"]["p_grid"] == [1, 2, "inf"]

    def test_decide_lp_certificate(self, tmp_path):
        path = write(tmp_path, "c.json", COIN_THIRD)
        code, out, _ = mix("decide-lp", path, "--n", "2", "--verify")
        report = json.loads(out)
        assert code == 1
        assert report["verdict"]["certificate"]["kind"] == "dual_certificate"
        assert report["verified"] is True

    def test_decide_lp_float_input_is_unknown(self, tmp_path):
        path = write(tmp_path, "c.json", COIN_THIRD)
        code, out, _ = mix("decide-lp", path, "--n", "2", "--float")
        assert code == 2 and json.loads(out)["verdict"]["reason"] == "inexact_input"

    def test_solve_matrix(self, tmp_path):
        path = write(tmp_path, "m.csv", "0,0,0\n1,1,1\n2,2,2\n")
        code, out, _ = mix("solve", path, "--verify")
        result = json.loads(out)["result"]
        assert code == 0 and result["T"] == 3 and result["exact_mix"]

    def test_oracle_matrix(self, tmp_path):
        path = write(tmp_path, "m.csv", "a,b,c\n0,1,0\n0,1,2\n3,1,2\n")
        code, out, _ = mix("oracle", path)
        assert code == 0 and json.loads(out)["result"]["T"] == 4

    def test_decompose_and_sample(self, tmp_path):
        spec = write(tmp_path, "b.json", [{"type": "discrete", "points": [0, 1, 2],
                                           "weights": ["1/4", "1/2", "1/4"]}])
        code, out, _ = mix("decompose", spec, "--n", "2", "--verify")
        assert code == 0
        cert = write(tmp_path, "cert.json", out)
        code, csv_text, _ = mix("sample", cert, "--count", "20", "--seed", "3")
        lines = csv_text.strip().splitlines()
        assert code == 0 and lines[0] == "x1,x2" and len(lines) == 21
        assert all(sum(int(v) for v in line.split(",")) == 2 for line in lines[1:])

    def test_sample_to_file(self, tmp_path):
        code, out, _ = mix("gaussian-mix", "--sigmas", "1,2,3")
        cert = write(tmp_path, "g.json", out)
        target = tmp_path / "rows.csv"
        code, out, _ = mix("sample", cert, "--count", "100", "--out", str(target), "--verify")
        assert code == 0
        rows = [list(map(float, line.split(","))) for line in target.read_text().splitlines()[1:]]
        assert len(rows) == 100 and max(abs(sum(r)) for r in rows) <= 1e-8

    def test_sample_rejects_tampered_pmf(self, tmp_path):
        cert = {"kind": "joint_pmf", "K": 1, "grid": [[0, 1], [1, 1]], "masses": ["1/2", "1/2"]}
        path = write(tmp_path, "bad.json", cert)
        code, _, err = mix("sample", path, "--count", "5", "--verify")
        assert code == 6 and "off_hyperplane" in err

    def test_gaussian_not_mixable(self):
        code, out, _ = mix("gaussian-mix", "--sigmas", "1,1,3")
        assert code == 1

    def test_var_bounds(self, tmp_path):
        path = write(tmp_path, "u.json", [{"type": "uniform", "a": 0, "b": 1}] * 2)
        code, out, _ = mix("var-bounds", path, "--p", "1/2", "--N", "200", "--restarts", "5")
        result = json.loads(out)["result"]
        assert code == 0
        assert result["worst"]["phi"] == {"num": 3, "den": 2}
        assert result["best"]["phi"] == {"num": 1, "den": 2}


class TestExitCodes:
    def test_unknown_command(self):
        assert mix("frobnicate")[0] == 3

    def test_missing_command(self):
        assert mix()[0] == 3

    def test_missing_file(self, tmp_path):
        assert mix("check", str(tmp_path / "nope.json"))[0] == 5

    def test_bad_weights(self, tmp_path):
        path = write(tmp_path, "w.json", [{"type": "discrete", "points": [0, 1], "weights": [0.5, 0.48]}])
        code, _, err = mix("check", path)
        assert code == 5 and "weights must sum to 1" in err

    def test_budget_flag(self, tmp_path):
        path = write(tmp_path, "m.csv", "\n".join(f"{i},{i},{i}" for i in range(9)) + "\n")
        assert mix("oracle", path, "--budget", "100")[0] == 4

    def test_budget_environment(self, tmp_path, monkeypatch):
        path = write(tmp_path, "m.csv", "\n".join(f"{i},{i},{i}" for i in range(9)) + "\n")
        monkeypatch.setenv("MIX_BUDGET", "100")
        assert mix("oracle", path)[0] == 4

    def test_nonpositive_n(self, tmp_path):
        path = write(tmp_path, "u.json", [{"type": "uniform", "a": 0, "b": 1}])
        assert mix("check", path, "--n", "0")[0] == 3


class TestReports:
    def test_byte_identical(self, tmp_path):
        path = write(tmp_path, "m.csv", "3,1,4\n1,5,9\n2,6,5\n3,5,8\n")
        first = mix("solve", path, "--seed", "7", "--restarts", "5")
        second = mix("solve", path, "--seed", "7", "--restarts", "5")
        assert first == second

    def test_digest_tracks_input_bytes(self, tmp_path):
        a = write(tmp_path, "a.csv", "1,2\n3,4\n")
        b = write(tmp_path, "b.csv", "1,2\n3,5\n")
        c = write(tmp_path, "c.csv", "1,2\n3,4\n")
        digest = [json.loads(mix("solve", p)[1])["inputs_digest"] for p in (a, b, c)]
        assert digest[0] != digest[1] and digest[0] == digest[2]

    def test_timing_is_opt_in(self, tmp_path):
        path = write(tmp_path, "a.csv", "1,2\n3,4\n")
        assert "timing_seconds" not in json.loads(mix("solve", path)[1])
        assert "timing_seconds" in json.loads(mix("solve", path, "--timing")[1])

    def test_module_entry_point(self, tmp_path):
        path = write(tmp_path, "c.json", COIN_THIRD)
        proc = subprocess.run([sys.executable, "-m", "mixability", "decide-lp", path, "--n", "2"],
                              capture_output=True, text=True)
        assert proc.returncode == 1
        assert json.loads(proc.stdout)["verdict"]["status"] == "not_mixable"
