import json

import numpy as np
import pytest

from smalleig import __version__
from smalleig.cache import EnvelopeCache, canonical_key
from smalleig.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSigmaCommand:
    def test_json_envelope(self, capsys):
        code, out, _ = run_cli(capsys, "sigma", "--m", "2", "--window", "-8,0")
        assert code == 0
        body = json.loads(out)
        assert np.allclose(body["outputs"]["elements"], [-7, -5, -3, -1], atol=1e-6)
        assert body["schema_version"] == 1

    def test_csv_format(self, capsys):
        code, out, _ = run_cli(capsys, "sigma", "--m", "2", "--window", "-4,0",
                               "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "element"
        assert float(lines[-1]) == pytest.approx(-1.0, abs=1e-6)


class TestDecideCommand:
    def test_not_on_sigma(self, capsys):
        code, out, _ = run_cli(capsys, "decide", "--m", "2", "--a0", "-0.5",
                               "--order", "4")
        assert code == 0
        assert json.loads(out)["outputs"]["verdict"] == "NotOnSigma_Solvable"

    def test_witness(self, capsys):
        code, out, _ = run_cli(capsys, "decide", "--m", "2", "--a0", "-1",
                               "--taylor", "1,0", "--order", "4")
        body = json.loads(out)
        assert body["outputs"]["witness_order"] == 2

    def test_order_four_obstruction(self, capsys):
        # with a'=a''=1 the second order vanishes but the fourth does not:
        # the exact order-4 polynomial is a4/32 - a2^2/32 - a1 a3/8 + a1^2 a2/8,
        # which is 3/32 here, so the instance is a solvability witness at 4
        code, out, _ = run_cli(capsys, "decide", "--m", "2", "--a0", "-1",
                               "--taylor", "1,1", "--order", "4")
        body = json.loads(out)
        assert body["outputs"]["verdict"] == "Solvable"
        assert body["outputs"]["witness_order"] == 4
        assert abs(body["outputs"]["lambda_value"] - 3.0 / 32.0) < 1e-8


class TestExactFlag:
    def test_exact_polys(self, capsys):
        code, out, _ = run_cli(capsys, "polys", "--m", "2", "--a0", "-1",
                               "--order", "2", "--exact")
        body = json.loads(out)
        terms = body["outputs"]["polynomials"][1]["terms"]
        assert {"exponents": [0, 1], "coeff": "1/4"} in terms
        assert {"exponents": [2, 0], "coeff": "-1/4"} in terms

    def test_exact_needs_m2(self, capsys):
        code, _, err = run_cli(capsys, "lambda", "--m", "3", "--a0", "-1.5",
                               "--order", "2", "--exact")
        assert code == 2
        assert json.loads(err)["error"]["code"] == "precondition"


class TestUsageErrors:
    def test_bad_number_list(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["decide", "--m", "2", "--a0", "-1", "--taylor", "1,zap"])
        assert exc.value.code == 2
        err = capsys.readouterr().err
        assert json.loads(err)["error"]["code"] == "usage"

    def test_missing_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2


class TestReproducibility:
    def test_identical_runs_identical_envelopes(self, capsys):
        _, out1, _ = run_cli(capsys, "lambda", "--m", "2", "--a0", "-1",
                             "--taylor", "0.3,0.2", "--order", "4")
        _, out2, _ = run_cli(capsys, "lambda", "--m", "2", "--a0", "-1",
                             "--taylor", "0.3,0.2", "--order", "4")
        a, b = json.loads(out1), json.loads(out2)
        a["provenance"].pop("wall_time_s")
        b["provenance"].pop("wall_time_s")
        assert a == b


class TestOutFile:
    def test_written_copy_matches_stdout(self, capsys, tmp_path):
        target = tmp_path / "result.json"
        code, out, _ = run_cli(capsys, "moments", "--m", "2", "--a0", "-1",
                               "--jmax", "4", "--out", str(target))
        assert code == 0
        assert target.read_text().strip() == out.strip()


class TestCache:
    def test_store_then_load_bitwise(self, tmp_path):
        cache = EnvelopeCache(tmp_path, __version__)
        envelope = {"schema_version": 1, "command": "sigma",
                    "inputs": {"m": 2}, "outputs": {"elements": [-1.0]},
                    "provenance": {"version": __version__, "wall_time_s": 0.1}}
        key = canonical_key("sigma", envelope["inputs"])
        cache.put(key, envelope)
        assert cache.get(key) == envelope

    def test_version_bump_misses(self, tmp_path):
        cache = EnvelopeCache(tmp_path, "0.0.1")
        key = canonical_key("sigma", {"m": 2})
        cache.put(key, {"schema_version": 1})
        newer = EnvelopeCache(tmp_path, "0.0.2")
        assert newer.get(key) is None

    def test_corrupt_entry_recovers_with_warning(self, tmp_path):
        cache = EnvelopeCache(tmp_path, __version__)
        key = canonical_key("sigma", {"m": 2})
        cache.put(key, {"schema_version": 1})
        (tmp_path / f"{key}.json").write_text("{ not json")
        with pytest.warns(UserWarning, match="unreadable"):
            assert cache.get(key) is None

    def test_missing_dir_created_on_demand(self, tmp_path):
        target = tmp_path / "deep" / "cache"
        cache = EnvelopeCache(target, __version__)
        key = canonical_key("x", {})
        cache.put(key, {"schema_version": 1})
        assert target.is_dir() and cache.get(key) == {"schema_version": 1}

    def test_cli_cache_flag(self, capsys, tmp_path):
        args = ["sigma", "--m", "2", "--window", "-4,0", "--cache", str(tmp_path)]
        _, out1, _ = run_cli(capsys, *args)
        assert list(tmp_path.glob("*.json"))
        _, out2, _ = run_cli(capsys, *args)
        assert out1 == out2


class TestWitnessGridDump:
    def test_grid_csv_written(self, capsys, tmp_path):
        target = tmp_path / "packet.csv"
        code, out, _ = run_cli(capsys, "witness", "--m", "2", "--a0", "-1",
                               "--lambdas", "64", "--A", "2",
                               "--grid-csv", str(target))
        assert code == 0
        body = json.loads(out)
        assert len(body["outputs"]["points"]) == 1
        lines = target.read_text().splitlines()
        assert lines[0].startswith(",")  # header row carries the t grid
        cell = lines[len(lines) // 2].split(",")[1]
        complex(cell)  # body cells parse as complex literals

    def test_grid_csv_rejected_remotely(self, capsys):
        code, _, err = run_cli(capsys, "--server", "http://nowhere",
                               "witness", "--m", "2", "--a0", "-1",
                               "--lambdas", "64", "--grid-csv", "x.csv")
        assert code == 2
        assert "local mode" in json.loads(err)["error"]["message"]


class TestRemoteMode:
    def test_server_flag_uses_http(self, capsys, monkeypatch):
        import httpx
        from fastapi.testclient import TestClient

        from smalleig.service import app

        def patched(*args, **kwargs):
            return TestClient(app, base_url=kwargs.get("base_url", "http://service"))

        monkeypatch.setattr(httpx, "Client", patched)
        code, out, _ = run_cli(capsys, "--server", "http://service",
                               "decide", "--m", "2", "--a0", "-0.5", "--order", "2")
        assert code == 0
        assert json.loads(out)["outputs"]["verdict"] == "NotOnSigma_Solvable"
