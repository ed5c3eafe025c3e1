import csv
import io
import json
import os
import re
import subprocess
import sys
from pathlib import Path

import pytest

from harqiso import cli, sim
from harqiso.cli import EXIT_DOMAIN, EXIT_IO, EXIT_OK, EXIT_USAGE, UsageError, parse_args

SNAPSHOTS = Path(__file__).parent / "snapshots"
TURBO_GEO = ["--k-info", "2048", "--dk", "16", "--n-base", "6192", "--dn", "142"]


def run_cli(capsys, argv):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestParse:
    def test_stability_geometric(self):
        spec = parse_args(["stability", "--p-1", "0.4", "--h", "0.5", "--g", "1", "--servers", "1"])
        assert spec.command == "stability"
        assert spec.parameters["p_minus1"] == 0.4 and spec.parameters["h"] == 0.5
        series = cli.build_series(spec.parameters)
        assert series.p(0) == pytest.approx(0.2)

    def test_snr_db(self):
        spec = parse_args(["exponent", "--snr-db", "-4.64"])
        assert cli._channel(spec.parameters).a_linear == pytest.approx(10 ** -0.464, rel=1e-12)

    def test_exclusive_snr(self):
        with pytest.raises(UsageError):
            parse_args(["simulate", "--snr-db", "-4.64", "--snr-linear", "0.3453"])

    @pytest.mark.parametrize("argv,flag", [
        (["stability", "--p-1", "1.5", "--h", "0.5"], "--p-1"),
        (["simulate", "--p-1", "0.4", "--h", "0.5", "--slots", "0"], "--slots"),
        (["optimize", "--k0", "1.2"], "--k0"),
        (["stability", "--p-1", "0.4"], "--h"),
        (["simulate", "--p-1", "0.4", "--h", "0.5", "--algorithm", "A", "--servers", "2"], "--algorithm"),
        (["sweep", "--snr-db-min", "-5", "--snr-db-max", "-6", *TURBO_GEO], "--snr-db-max"),
    ])
    def test_validation_names_flag(self, argv, flag):
        with pytest.raises(UsageError, match=re.escape(flag)):
            parse_args(argv)

    def test_algorithm_default_follows_servers(self):
        spec = parse_args(["simulate", "--p-1", "0.4", "--h", "0.5", "--servers", "3"])
        assert spec.parameters["algorithm"] == "B"

    def test_env_seed(self, monkeypatch):
        monkeypatch.setenv("HARQISO_SEED", "77")
        assert parse_args(["simulate", "--p-1", "0.4", "--h", "0.5"]).parameters["seed"] == 77
        assert parse_args(["simulate", "--p-1", "0.4", "--h", "0.5", "--seed", "5"]).parameters["seed"] == 5

    def test_config_file_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# sim settings\np-1=0.3\nh=0.6\nslots=500\nno-boost=true\n")
        spec = parse_args(["simulate", "--config", str(cfg), "--slots", "800", "--p-1", "0.35"])
        p = spec.parameters
        assert p["slots"] == 800 and p["p_minus1"] == 0.35 and p["h"] == 0.6
        assert p["no_boost"] is True

    def test_config_yields_to_exclusive_partner(self, tmp_path):
        cfg = tmp_path / "ch.cfg"
        cfg.write_text("snr_db=-4\n")
        p = parse_args(["exponent", "--config", str(cfg), "--snr-linear", "0.3"]).parameters
        assert p["snr_db"] is None and p["snr_linear"] == 0.3
        assert parse_args(["exponent", "--config", str(cfg)]).parameters["snr_db"] == -4

    def test_bad_config_line(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("slots 100\n")
        with pytest.raises(UsageError):
            parse_args(["simulate", "--p-1", "0.4", "--h", "0.5", "--config", str(cfg)])


class TestExitCodes:
    def test_usage(self, capsys):
        code, _, err = run_cli(capsys, ["simulate", "--snr-db", "-4.64", "--snr-linear", "0.3453"])
        assert code == EXIT_USAGE and "usage error" in err

    def test_unknown_command(self, capsys):
        assert run_cli(capsys, ["frobnicate"])[0] == EXIT_USAGE

    def test_domain(self, capsys):
        code, _, err = run_cli(capsys, ["exponent", "--snr-linear", "0.3453", "--rate", "0.9"])
        assert code == EXIT_DOMAIN

    def test_convergence(self, capsys, tmp_path):
        table = tmp_path / "flat.csv"
        table.write_text("index,wer\n-1,0.5\n0,0.5\n")
        code, _, _ = run_cli(capsys, ["stability", "--series-file", str(table)])
        assert code == EXIT_DOMAIN

    def test_unwritable(self, capsys, tmp_path):
        out = tmp_path / "missing" / "dir" / "x.json"
        code, _, err = run_cli(capsys, ["stability", "--p-1", "0.4", "--h", "0.5", "--out", str(out)])
        assert code == EXIT_IO and code != EXIT_USAGE

    def test_missing_input(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, ["stability", "--series-file", str(tmp_path / "nope.csv")])
        assert code == EXIT_IO


class TestCommands:
    def test_exponent(self, capsys):
        code, out, _ = run_cli(capsys, ["exponent", "--snr-linear", "0.3453", "--rate", "0.3333333333333333",
                                        "--n-coded", "6144"])
        d = json.loads(out)
        assert code == EXIT_OK
        assert d["capacity"] == pytest.approx(0.296617036509, rel=1e-11)
        assert d["wer_bound"] == pytest.approx(5.2136948589e-15, rel=1e-8)

    def test_series(self, capsys):
        code, out, _ = run_cli(capsys, ["series", "--p-1", "0.5", "--h", "0.5", "--g", "0.8",
                                        "--terms", "4", "--format", "csv"])
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r["index"] for r in rows] == ["-1", "0", "1", "2"]
        assert float(rows[3]["wer"]) == pytest.approx(0.032)

    def test_stability_csv_single_row(self, capsys):
        code, out, _ = run_cli(capsys, ["stability", "--p-1", "0.4", "--h", "0.5", "--format", "csv"])
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 1
        assert rows[0]["stable"] == "true" and float(rows[0]["stability_sum"]) == pytest.approx(0.8)

    def test_optimize(self, capsys):
        code, out, _ = run_cli(capsys, ["optimize", "--p0", "0.25", "--h", "0.5", "--g", "0.8",
                                        "--theta", "0.02", "--dn-bas", "142"])
        d = json.loads(out)
        assert code == EXIT_OK and not d["at_bound"] and 0.1 < d["r_star"] < 8
        assert d["dn_star"] == round(d["r_star"] * 142)

    def test_optimize_from_table(self, capsys, tmp_path):
        table = tmp_path / "w.csv"
        table.write_text("index,wer\n-1,0.5\n0,0.25\n1,0.1\n2,0.032\n")
        code, out, _ = run_cli(capsys, ["optimize", "--series-file", str(table)])
        d = json.loads(out)
        assert d["h_hat"] == pytest.approx(0.5) and d["g_hat"] == pytest.approx(0.8)

    def test_design(self, capsys):
        code, out, _ = run_cli(capsys, ["optimize", "--k0", "0.9", "--servers", "2"])
        d = json.loads(out)
        assert d["h_star"] == pytest.approx(4 / 9)

    def test_simulate_json_has_all_fields(self, capsys):
        code, out, _ = run_cli(capsys, ["simulate", "--p-1", "0.45", "--h", "0.5", "--slots", "2000"])
        d = json.loads(out)
        expected = set(sim.SimMetrics.__dataclass_fields__) - {"queue_history", "trace"}
        assert set(d) == expected

    def test_simulate_trace(self, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        code, _, _ = run_cli(capsys, ["simulate", "--p-1", "0.6", "--h", "0.5", "--slots", "500",
                                      "--trace", str(trace), "--trace-slots", "20"])
        assert code == EXIT_OK
        assert trace.read_text().startswith("slot,event,packet_id,code_index,queue_len\n")

    def test_csv_round_trip(self, capsys, tmp_path):
        path = tmp_path / "sim.csv"
        code, _, _ = run_cli(capsys, ["simulate", "--p-1", "0.45", "--h", "0.5", "--g", "0.9",
                                      "--slots", "5000", "--format", "csv", "--out", str(path)])
        row = next(csv.DictReader(path.open()))
        direct = sim.run(sim.SimConfig(cli.build_series(
            {"p_minus1": 0.45, "h": 0.5, "g": 0.9}), 5000)).to_dict()
        for key in ("throughput", "mean_queue_len", "service_rate_empirical", "mean_t_out"):
            assert float(row[key]) == pytest.approx(direct[key], rel=1e-11)
        assert json.loads(row["delay_histogram"]) == direct["delay_histogram"]


class TestSweep:
    def test_crossing(self, capsys):
        code, out, _ = run_cli(capsys, ["sweep", "--snr-db-min", "-5.9", "--snr-db-max", "-5.5",
                                        "--snr-db-step", "0.1", *TURBO_GEO, "--simulate",
                                        "--slots", "20000", "--format", "csv"])
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [float(r["snr_db"]) for r in rows] == [-5.9, -5.8, -5.7, -5.6, -5.5]
        assert rows[0]["error"] and not rows[0]["throughput_sim"]
        ok = rows[1:]
        stable = [r["stable"] == "true" for r in ok]
        assert stable == [False, True, True, True]
        assert float(ok[0]["throughput_sim"]) < 0.9
        assert all(float(r["throughput_sim"]) >= 0.99 for r in ok[1:])

    def test_single_point_matches_simulate(self, capsys):
        common = ["--slots", "3000", "--seed", "4"]
        _, out, _ = run_cli(capsys, ["sweep", "--snr-db-min", "-5.7", "--snr-db-max", "-5.7",
                                     *TURBO_GEO, "--simulate", *common])
        row = json.loads(out)[0]
        _, out, _ = run_cli(capsys, ["simulate", "--snr-db", "-5.7", *TURBO_GEO, *common])
        d = json.loads(out)
        assert row["throughput_sim"] == d["throughput"]
        assert row["mean_delay"] == d["mean_delay"] and row["t_eps0"] == d["t_eps0"]

    def test_grid(self):
        assert cli.sweep_grid(-1.0, -0.5, 0.1) == [-1.0, -0.9, -0.8, -0.7, -0.6, -0.5]


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["simulate", "--p-1", "0.45", "--h", "0.5", "--slots", "20000", "--seed", "9", "--dk", "3"],
        ["sweep", "--snr-db-min", "-5.8", "--snr-db-max", "-5.6", *TURBO_GEO, "--simulate",
         "--slots", "5000", "--format", "csv"],
    ])
    def test_byte_identical(self, argv):
        outs = [subprocess.run([sys.executable, "-m", "harqiso", *argv], capture_output=True,
                               check=True).stdout for _ in range(2)]
        assert outs[0] == outs[1] and outs[0]


@pytest.mark.parametrize("command", cli.COMMANDS)
def test_help_snapshot(command, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([command, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert text == (SNAPSHOTS / f"help_{command}.txt").read_text()
    parser = cli.build_parser()
    sub = parser._subparsers._group_actions[0].choices[command]
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in text
