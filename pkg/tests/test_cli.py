"""CLI scenarios: config handling, CSV/SVG output, exit codes, verify suite."""

import csv
import math

import pytest

from mwadversary import ModelParams, optimal_value, policy_value
from mwadversary.cli import ConfigError, main, parse_config_file, resolve_config
from mwadversary.exact_eval import value_block_policy
from mwadversary.policies import OfflinePolicy, block_form
from mwadversary.verify import check_oracle_equivalence, run_all

E = math.e


def read_csv(path):
    with open(path) as fh:
        comment = fh.readline()
        rows = list(csv.reader(fh))
    return comment, rows[0], rows[1:]


class TestConfig:
    def test_file_parsing(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\n[sweep]\nN = 4,6\nmu = 0.4\nseed = 9\n")
        values = parse_config_file(str(cfg))
        assert values == {"N": "4,6", "mu": "0.4", "seed": "9"}

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("frobnicate = 1\n")
        with pytest.raises(ConfigError):
            parse_config_file(str(cfg))

    def test_missing_equals(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just words\n")
        with pytest.raises(ConfigError):
            parse_config_file(str(cfg))

    def test_cli_overrides_file_overrides_default(self):
        cfg = resolve_config("compare", {"N": "4", "seed": "5"}, {"seed": "6"})
        assert cfg.horizons == [4]
        assert cfg.seed == 6
        assert cfg.epsilon == pytest.approx(math.exp(-1))

    def test_mu_rho_pairing(self):
        cfg = resolve_config("compare", {"mu": "0.3,0.5", "rho0": "0.5"}, {})
        assert cfg.mu_rho_pairs == [(0.3, 0.5), (0.5, 0.5)]
        bad = resolve_config("compare", {"mu": "0.3,0.5", "rho0": "0.5,0.6,0.7"}, {})
        with pytest.raises(ConfigError):
            bad.mu_rho_pairs

    def test_exit_code_invalid_config(self, tmp_path):
        assert main(["compare", "--mu", "1.5", "--out", str(tmp_path / "x.csv")]) == 2
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nonsense = 1\n")
        assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "y.csv")]) == 2

    def test_exit_code_guard_violation(self, tmp_path):
        rc = main(
            ["multi-expert", "--N", "30", "--exact_dp_max_n", "40",
             "--out", str(tmp_path / "g.csv")]
        )
        assert rc == 3


class TestCompareScenario:
    def test_rows_and_dominance(self, tmp_path):
        out = tmp_path / "cmp.csv"
        assert main(["compare", "--N", "6,10,12", "--out", str(out)]) == 0
        comment, header, rows = read_csv(str(out))
        assert comment.startswith("# mwadversary")
        assert "config_sha256=" in comment and "seed=" in comment
        assert header == [
            "N", "mu", "rho0", "epsilon", "v_false", "v_true", "v_ratio",
            "v_offline_opt", "v_online", "v_no_adversary", "v_no_info",
        ]
        assert [r[0] for r in rows] == ["6", "10", "12"]
        for row in rows:
            v_false, v_true = float(row[4]), float(row[5])
            v_ratio, v_opt, v_online = float(row[6]), float(row[7]), float(row[8])
            v_noadv, v_noinfo = float(row[9]), float(row[10])
            assert v_online >= max(v_false, v_ratio, v_opt) - 1e-9
            assert v_opt >= max(v_false, v_ratio) - 1e-9
            assert min(v_false, v_ratio) >= v_noinfo - 1e-9 >= v_true - 1e-9
            assert v_noadv == pytest.approx(0.5 * int(row[0]), abs=1e-9)

    def test_offline_column_blank_beyond_budget(self, tmp_path):
        out = tmp_path / "cmp.csv"
        assert main(["compare", "--N", "4,16", "--offline_opt_max_n", "8", "--out", str(out)]) == 0
        _, _, rows = read_csv(str(out))
        assert rows[0][7] != ""
        assert rows[1][7] == ""

    def test_svg_emitted(self, tmp_path):
        out = tmp_path / "cmp.csv"
        assert main(["compare", "--N", "4,8", "--svg", "--out", str(out)]) == 0
        svg = tmp_path / "cmp_mu0.5_rho0.5.svg"
        text = svg.read_text()
        assert text.startswith("<svg") and "<polyline" in text


class TestEvalOfflineScenario:
    def test_values_match_library(self, tmp_path):
        out = tmp_path / "ev.csv"
        rc = main(["eval-offline", "--N", "9", "--policy", "false,true,FTFFTFFFT",
                   "--out", str(out)])
        assert rc == 0
        _, header, rows = read_csv(str(out))
        p = ModelParams(epsilon=1 / E, mu=0.5, horizon=9)
        by_name = {row[4]: row for row in rows}
        assert float(by_name["false"][6]) == pytest.approx(
            policy_value(OfflinePolicy.from_text("F" * 9), p), abs=1e-12
        )
        explicit = by_name["explicit"]
        assert explicit[5] == "FTFFTFFFT"
        assert float(explicit[6]) == pytest.approx(
            value_block_policy(block_form(OfflinePolicy.from_text("FTFFTFFFT")), p), abs=1e-12
        )

    def test_explicit_policy_horizon_mismatch(self, tmp_path):
        rc = main(["eval-offline", "--N", "5", "--policy", "FT", "--out",
                   str(tmp_path / "e.csv")])
        assert rc == 2


class TestSolveOnlineScenario:
    def test_with_simulation(self, tmp_path):
        out = tmp_path / "so.csv"
        assert main(["solve-online", "--N", "15", "--trials", "400", "--seed", "3",
                     "--out", str(out)]) == 0
        _, header, rows = read_csv(str(out))
        assert header[:5] == ["N", "mu", "rho0", "epsilon", "v_online"]
        row = rows[0]
        p = ModelParams(epsilon=1 / E, mu=0.5, horizon=15)
        assert float(row[4]) == pytest.approx(optimal_value(p), abs=1e-9)
        assert abs(float(row[5]) - float(row[4])) <= 5 * float(row[6])


class TestMultiExpertScenario:
    def test_columns_and_budget(self, tmp_path):
        out = tmp_path / "me.csv"
        rc = main(["multi-expert", "--N", "5,20", "--trials", "40", "--seed", "8",
                   "--exact_dp_max_n", "8", "--out", str(out)])
        assert rc == 0
        _, header, rows = read_csv(str(out))
        assert header[0] == "N" and "v_k_exact_dp" in header
        exact_col = header.index("v_k_exact_dp")
        assert rows[0][exact_col] != ""   # N=5 within budget
        assert rows[1][exact_col] == ""   # N=20 above budget
        assert rows[0][header.index("rho_adv")] == "0.2"

    def test_heterogeneous_accuracies(self, tmp_path):
        out = tmp_path / "het.csv"
        rc = main(["multi-expert", "--N", "6", "--trials", "30",
                   "--accuracies", "0.3,0.4,0.6,0.7", "--out", str(out)])
        assert rc == 0
        _, header, rows = read_csv(str(out))
        assert rows[0][header.index("mu_mean")] == "0.5"


class TestVerifyScenario:
    def test_green_run(self, tmp_path, capsys):
        out = tmp_path / "verify.csv"
        assert main(["verify", "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert stdout.count("[PASS]") == 6
        assert "[FAIL]" not in stdout
        _, header, rows = read_csv(str(out))
        assert header == ["check", "passed", "measured", "tolerance", "detail"]
        assert all(row[1] == "true" for row in rows)

    def test_detects_perturbed_evaluator(self):
        """An epsilon perturbation injected into the evaluator must trip the
        oracle-equivalence check."""
        def perturbed(policy, p):
            skewed = ModelParams(
                epsilon=p.epsilon * 1.01, mu=p.mu, horizon=p.horizon, rho0=p.rho0
            )
            return value_block_policy(block_form(policy), skewed)

        result = check_oracle_equivalence(evaluator=perturbed)
        assert not result.passed
        assert result.measured > result.tolerance

    def test_all_checks_report_margin(self):
        for res in run_all():
            assert res.passed
            assert res.measured <= res.tolerance


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["compare", "--N", "4,8,12", "--seed", "77"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
