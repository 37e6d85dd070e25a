import pytest

from ltbarrier.cli import run_cli
from ltbarrier.config import load_experiments
from ltbarrier.errors import ConfigError
from ltbarrier.harness import read_csv

TINY = """
[defaults]
methods = QMC_LT QMC_LT_CS
baseline = QMC_LT
compare = QMC_LT_CS
n = 128
shifts = 4
n_mc = 512
seed = 3

[two_asset_binary]
s0 = 1 1
sigma = 0.4 0.6
corr = 1 -0.72 ; -0.72 1
rate = 0.08
horizon = 1
steps = 2
family = binary_asian
strike = 1
barriers = up out 1.1 @1
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return str(path)


def test_load_experiments(tiny_config):
    configs, options = load_experiments(tiny_config)
    assert len(configs) == 1
    config = configs[0]
    assert config.name == "two_asset_binary"
    assert config.market.n_assets == 2
    assert config.contract.barriers[0].level == 1.1
    assert config.n_points == 128 and config.n_shifts == 4
    assert options["baseline"] == "QMC_LT"


def test_parse_error_names_field_and_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("[exp]\ns0 = 100\nsigma = fast\n")
    with pytest.raises(ConfigError, match=r"bad\.cfg:3.*'sigma'"):
        load_experiments(str(path))


def test_parse_error_unknown_field(tmp_path):
    path = tmp_path / "bad2.cfg"
    path.write_text("[exp]\nnotional = 1\n")
    with pytest.raises(ConfigError, match=r"bad2\.cfg:2.*'notional'"):
        load_experiments(str(path))


def test_parse_error_missing_required(tmp_path):
    path = tmp_path / "bad3.cfg"
    path.write_text("[exp]\ns0 = 100\n")
    with pytest.raises(ConfigError, match=r"\[exp\].*'sigma'"):
        load_experiments(str(path))


def test_cli_price_writes_csv(tiny_config, tmp_path, capsys):
    out = tmp_path / "price.csv"
    code = run_cli(["price", "--config", tiny_config, "--out", str(out)])
    assert code == 0
    rows = read_csv(str(out))
    assert {r["method"] for r in rows} == {"QMC_LT", "QMC_LT_CS"}
    assert all(isinstance(r["mean"], float) for r in rows)


def test_cli_price_rejects_single_shift(tmp_path, capsys):
    path = tmp_path / "one_shift.cfg"
    path.write_text(TINY.replace("shifts = 4", "shifts = 1"))
    code = run_cli(["price", "--config", str(path)])
    captured = capsys.readouterr()
    assert code == 2
    assert "at least 2" in captured.err


def test_cli_table_row_per_config_and_method(tmp_path):
    # one comparison method per section: one CSV row per section
    body = "[defaults]\nmethods = QMC_LT QMC_LT_CS\nbaseline = QMC_LT\n" \
           "compare = QMC_LT_CS\nn = 64\nshifts = 3\nseed = 1\n"
    for k in range(14):
        body += (f"\n[case{k:02d}]\ns0 = 100\nsigma = 0.3\nrate = 0\n"
                 f"horizon = 0.25\nsteps = 2\nfamily = binary\nstrike = 1\n"
                 f"barriers = up out {104 + k}\n")
    path = tmp_path / "grid.cfg"
    path.write_text(body)
    out = tmp_path / "table.csv"
    assert run_cli(["table", "--config", str(path), "--out", str(out)]) == 0
    rows = read_csv(str(out))
    assert len(rows) == 14
    assert list(rows[0]) == ["config", "method", "sigma", "ratio_pct"]


def test_cli_convergence(tiny_config, tmp_path):
    out = tmp_path / "conv.csv"
    code = run_cli(["convergence", "--config", tiny_config, "--method",
                    "QMC_LT_CS", "--grid", "32,64,128,256", "--out",
                    str(out)])
    assert code == 0
    rows = read_csv(str(out))
    assert [int(r["n"]) for r in rows] == [32, 64, 128, 256]


def test_cli_unknown_section(tiny_config, capsys):
    code = run_cli(["price", "--config", tiny_config, "--section", "nope"])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_cli_malformed_config_reports_line(tmp_path, capsys):
    path = tmp_path / "broken.cfg"
    path.write_text("[exp\n")
    code = run_cli(["price", "--config", str(path)])
    assert code == 2
    assert "broken.cfg:1" in capsys.readouterr().err


def test_cli_seed_override_changes_result(tiny_config, tmp_path):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    run_cli(["price", "--config", tiny_config, "--out", str(out_a)])
    run_cli(["price", "--config", tiny_config, "--seed", "99", "--out",
             str(out_b)])
    a = read_csv(str(out_a))
    b = read_csv(str(out_b))
    assert a[0]["mean"] != b[0]["mean"]


def test_bundled_configs_parse():
    import glob
    import os
    root = os.path.join(os.path.dirname(os.path.dirname(
        os.path.abspath(__file__))), "configs")
    files = glob.glob(os.path.join(root, "*.cfg"))
    assert len(files) >= 8
    for path in files:
        configs, options = load_experiments(path)
        assert configs
        assert options["baseline"]


def test_selftest_passes():
    assert run_cli(["selftest"]) == 0
