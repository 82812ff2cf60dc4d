import json
from pathlib import Path

import pytest

from carleson_lab import cli
from carleson_lab import experiments as ex
from carleson_lab.tables import DecayTable

SMALL = {
    "gauss-vanishing": {"q_max": 16},
    "kernel-identity": {"s_values": [1], "log2_grid": 16, "y_max": 16},
    "factorization": {"s_values": [1, 2], "samples": 50},
    "multiplier-approx": {"j_min": 4, "j_max": 5, "t_values": [0.5, 1.0]},
    "weyl-decay": {"j_min": 5, "j_max": 7, "min_factor": 0.5},
    "rademacher-menshov": {"trials": 200, "s_max": 4},
    "carleson-exactness": {"J_trunc": 3, "N": 32},
    "parabola-fourier": {"N": 16, "fields": 2, "J_trunc": 2},
    "ttstar": {"j_min": 1, "j_max": 3, "pair_samples": 50},
    "carleson-norm": {"n_min": 2, "n_max": 3, "trials": 2, "J_trunc": 3},
}


def cfg(name, seed=1, **params):
    return ex.ExperimentConfig(name, params, seed=seed)


# --- config validation -----------------------------------------------------------------

def test_every_experiment_has_a_runner():
    assert set(ex.RUNNERS) == set(ex.SCHEMAS) == set(ex.EXPERIMENTS)


def test_defaults_filled_and_optional_none():
    c = cfg("exceptional-set")
    assert c.params["kappa"] == 2.0 and c.params["delta0"] is None


@pytest.mark.parametrize("params", [{"bogus": 1}, {"q_max": "ten"}, {"q_max": 1.5}, {"d_values": 3},
                                    {"d_values": [1, "x"]}, {"tol": True}])
def test_bad_params_rejected(params):
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig("gauss-vanishing", params)


def test_int_promoted_to_float():
    assert cfg("gauss-vanishing", tol=1).params["tol"] == 1.0


def test_unknown_experiment():
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig("nope")


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig("gauss-vanishing", seed=seed)


def test_seed_u64_max_accepted():
    assert ex.ExperimentConfig("gauss-vanishing", seed=2**64 - 1).seed == 2**64 - 1


def test_randomized_needs_seed():
    with pytest.raises(ex.ConfigError, match="seed"):
        ex.ExperimentConfig("ttstar")


def test_threads_positive():
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig("gauss-vanishing", threads=0)


def test_from_toml_roundtrip_and_overrides():
    text = 'experiment = "ttstar"\nseed = 5\n[params]\nj_max = 2\n'
    c = ex.ExperimentConfig.from_toml(text)
    assert c.experiment == "ttstar" and c.seed == 5 and c.params["j_max"] == 2
    c2 = ex.ExperimentConfig.from_toml(text, "ttstar", seed=9, threads=3)
    assert c2.seed == 9 and c2.threads == 3


@pytest.mark.parametrize("text", ['colour = "red"\n', 'seed = "5"\n', "params = 3\n", "[params\n",
                                  'experiment = "ttstar"\n', "[params]\nq_max = 4\nextra = 1\n"])
def test_from_toml_errors(text):
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig.from_toml(text, "gauss-vanishing")


def test_from_toml_needs_experiment():
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig.from_toml("")


# --- helpers ------------------------------------------------------------------------------

def test_parse_real():
    from fractions import Fraction
    assert ex.parse_real("1/3") == Fraction(1, 3)
    assert ex.parse_real("golden") == pytest.approx(0.6180339887498949)
    assert ex.parse_real("0.25") == 0.25
    with pytest.raises(ex.ConfigError):
        ex.parse_real("pi")


def test_pmap_keeps_order():
    assert ex._pmap(lambda v: v * v, range(20), 4) == [v * v for v in range(20)]


def test_sample_alphas_integer_padding():
    got = ex.sample_alphas(1, 3)
    assert [(a.a, a.q) for a in got] == [(0, 1), (1, 1), (2, 1)]


# --- runs ----------------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(SMALL))
def test_small_runs_pass(name):
    rep = ex.run_experiment(cfg(name, **SMALL[name]))
    assert rep.passed, [a.line() for a in rep.assertions if not a.passed]
    assert rep.assertions


def test_empty_range_is_vacuous_pass():
    rep = ex.run_experiment(cfg("multiplier-approx", j_min=6, j_max=5))
    assert rep.passed and all(a.vacuous for a in rep.assertions)
    rep = ex.run_experiment(cfg("rademacher-menshov", trials=0))
    assert rep.passed and rep.assertions[0].vacuous


def test_guard_error_for_coarse_grid():
    with pytest.raises(ex.GuardError):
        ex.run_experiment(cfg("kernel-identity", M=2.0, log2_grid=16))


def test_report_files(tmp_path):
    c = ex.ExperimentConfig("weyl-decay", SMALL["weyl-decay"], out=tmp_path)
    rep = ex.run_experiment(c)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert "weyl-decay__report.json" in names
    csvs = [n for n in names if n.endswith(".csv")]
    assert csvs
    for n in csvs:
        table = DecayTable.from_csv((tmp_path / n).read_text())
        if len(table):
            assert n[:-4] + ".svg" in names
            assert (tmp_path / (n[:-4] + ".svg")).read_text().lstrip().startswith("<?xml")
    summary = json.loads((tmp_path / "weyl-decay__report.json").read_text())
    assert summary["passed"] == rep.passed
    assert summary["config"]["params"]["j_max"] == 7
    assert {"package", "version", "commit"} <= set(summary["version"])


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        ex.run_experiment(ex.ExperimentConfig("carleson-norm", SMALL["carleson-norm"], seed=42, out=d))
    for p in a.glob("*.csv"):
        assert p.read_bytes() == (b / p.name).read_bytes()
    for p in a.glob("*.svg"):
        assert p.read_bytes() == (b / p.name).read_bytes()


def test_seed_changes_randomized_output(tmp_path):
    t1 = ex.run_experiment(cfg("carleson-norm", 1, **SMALL["carleson-norm"])).tables
    t2 = ex.run_experiment(cfg("carleson-norm", 2, **SMALL["carleson-norm"])).tables
    assert any(t1[k].to_csv() != t2[k].to_csv() for k in t1)


def test_threads_do_not_change_results():
    p = SMALL["carleson-norm"]
    t1 = ex.run_experiment(ex.ExperimentConfig("carleson-norm", p, seed=3, threads=1)).tables
    t4 = ex.run_experiment(ex.ExperimentConfig("carleson-norm", p, seed=3, threads=4)).tables
    assert {k: v.to_csv() for k, v in t1.items()} == {k: v.to_csv() for k, v in t4.items()}


# --- CLI -------------------------------------------------------------------------------

def write_toml(path: Path, body: str) -> Path:
    path.write_text(body)
    return path


def test_cli_exit_zero(tmp_path, capsys):
    conf = write_toml(tmp_path / "c.toml", "[params]\nq_max = 12\n")
    code = cli.main(["gauss-vanishing", "--config", str(conf), "--out", str(tmp_path / "o"), "-q"])
    assert code == 0
    assert capsys.readouterr().out.startswith("PASS gauss-vanishing")
    assert (tmp_path / "o" / "gauss-vanishing__report.json").exists()


def test_cli_exit_one_on_failed_assertion(tmp_path, capsys):
    conf = write_toml(tmp_path / "c.toml", "[params]\nq_max = 16\nmodulus = 4\nresidue = 0\n")
    code = cli.main(["gauss-modulus", "--config", str(conf), "--out", str(tmp_path / "o")])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL gauss-modulus" in out


def test_cli_exit_two_on_config_error(tmp_path, capsys):
    conf = write_toml(tmp_path / "c.toml", "[params]\nnot_a_key = 1\n")
    assert cli.main(["gauss-vanishing", "--config", str(conf), "--out", str(tmp_path)]) == 2
    assert "not_a_key" in capsys.readouterr().err


def test_cli_exit_two_on_missing_file(tmp_path):
    assert cli.main(["gauss-vanishing", "--config", str(tmp_path / "missing.toml")]) == 2


def test_cli_exit_two_on_mismatched_experiment(tmp_path):
    conf = write_toml(tmp_path / "c.toml", 'experiment = "ttstar"\n')
    assert cli.main(["gauss-vanishing", "--config", str(conf), "--out", str(tmp_path)]) == 2


def test_cli_missing_seed_is_config_error(tmp_path):
    assert cli.main(["rademacher-menshov", "--out", str(tmp_path)]) == 2


def test_cli_seed_override_and_hex(tmp_path):
    conf = write_toml(tmp_path / "c.toml", "seed = 1\n[params]\ntrials = 10\ns_max = 2\n")
    assert cli.main(["rademacher-menshov", "--config", str(conf), "--seed", "0xff",
                     "--out", str(tmp_path / "o"), "-q"]) == 0
    summary = json.loads((tmp_path / "o" / "rademacher-menshov__report.json").read_text())
    assert summary["config"]["seed"] == 255


@pytest.mark.parametrize("argv", [["gauss-vanishing", "--seed", "-3"], ["gauss-vanishing", "--seed", str(2**64)],
                                  ["gauss-vanishing", "--threads", "0"], ["no-such-experiment"], []])
def test_cli_argument_errors(argv):
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code == 2


def test_cli_lists_every_experiment(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    out = capsys.readouterr().out
    assert all(name in out for name in ex.EXPERIMENTS)
