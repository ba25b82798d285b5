import io
import shutil
from pathlib import Path

import pytest

from segqueue.cli import SWEEP_COLUMNS, main
from segqueue.config import format_config, load_config, parse_capacity, parse_config
from segqueue.errors import ConfigError

GOLDEN = Path(__file__).parent / "golden"

BATCH_CFG = """\
[distribution]
kind = deterministic
size = 100

[link]
capacity = 8 bps
header = 0

[traffic]
lambda = 0.005

[payload]
ell_d = 40
min = 40
max = 100
points_per_decade = 3

[sim]
warmup_messages = 1000
measured_messages = 20000
replications = 4
base_seed = 5
"""


@pytest.fixture
def batch_cfg(tmp_path):
    p = tmp_path / "batch.cfg"
    p.write_text(BATCH_CFG)
    return p


def run_cli(*argv):
    out = io.StringIO()
    code = main(list(map(str, argv)), out=out)
    return code, out.getvalue()


# --- config --------------------------------------------------------------

@pytest.mark.parametrize("text,expected", [("54 Mbps", 6_750_000.0), ("8 bps", 1.0), ("1 kbps", 125.0), ("2 Gbps", 2.5e8), ("1500 Bps", 1500.0)])
def test_capacity_units(text, expected):
    value, unit = parse_capacity(text)
    cfg = parse_config(BATCH_CFG.replace("8 bps", text))
    assert cfg.link.capacity == expected


def test_shipped_config(paper_cfg):
    cfg = load_config(paper_cfg)
    assert cfg.link.capacity == 6_750_000
    assert cfg.link.header == 38
    assert cfg.distribution.mu == pytest.approx(6.34, abs=0.02)
    assert cfg.distribution.sigma == pytest.approx(2.07, abs=0.02)
    assert cfg.ell_d == 1500


def test_config_golden_and_round_trip(paper_cfg):
    cfg = load_config(paper_cfg)
    text = format_config(cfg)
    assert text == (GOLDEN / "web80211g.formatted.cfg").read_text()
    again = parse_config(text)
    assert again == cfg
    assert format_config(again) == text


@pytest.mark.parametrize(
    "old,new,line",
    [
        ("capacity = 8 bps", "capacity = 8 Mibps", 6),
        ("size = 100", "size = -3", 3),
        ("lambda = 0.005", "lambda = fast", 10),
        ("kind = deterministic", "kind = pareto", 2),
        ("replications = 4", "replications = 1", 21),
        ("ell_d = 40", "ell_d = 40\nbogus = 1", 14),
    ],
)
def test_config_errors_carry_line_numbers(old, new, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(BATCH_CFG.replace(old, new))
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_config_missing_section():
    with pytest.raises(ConfigError, match="traffic"):
        parse_config(BATCH_CFG.replace("[traffic]\nlambda = 0.005\n", ""))


def test_empirical_config(tmp_path):
    (tmp_path / "sizes.txt").write_text("100\n300\n")
    p = tmp_path / "emp.cfg"
    p.write_text(BATCH_CFG.replace("kind = deterministic\nsize = 100", "kind = empirical\npath = sizes.txt"))
    cfg = load_config(p)
    assert cfg.distribution.mean == 200


# --- commands ------------------------------------------------------------

def test_analyze_report_and_csv(batch_cfg, tmp_path):
    csv_path = tmp_path / "a.csv"
    code, out = run_cli("analyze", "--config", batch_cfg, "--csv", csv_path)
    assert code == 0
    assert "mean response E[R]" in out and "164.6666667" in out
    header, row = csv_path.read_text().splitlines()
    values = dict(zip(header.split(","), row.split(",")))
    assert float(values["ER"]) == pytest.approx(164.6666666667)


def test_analyze_paper_scenario(paper_cfg):
    code, out = run_cli("analyze", "--config", paper_cfg)
    assert code == 0
    assert "offered load a                   0.49" in out


def test_analyze_unstable_exit(batch_cfg):
    code, _ = run_cli("analyze", "--config", batch_cfg, "--lambda", 0.02)
    assert code == 3


def test_bad_unit_exit(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text(BATCH_CFG.replace("8 bps", "8 furlongs"))
    code, _ = run_cli("analyze", "--config", p)
    assert code == 2
    assert "line 6" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert run_cli("analyze", "--config", tmp_path / "nope.cfg")[0] == 2


def test_truncation_exit(tmp_path, paper_cfg):
    p = tmp_path / "t.cfg"
    p.write_text(paper_cfg.read_text().replace("n_max = 4194304", "n_max = 10"))
    assert run_cli("analyze", "--config", p)[0] == 4


def test_sweep_csv(paper_cfg, tmp_path):
    path = tmp_path / "s.csv"
    code, _ = run_cli("sweep", "--config", paper_cfg, "--lambda", 200, "--lambda", 800, "--csv", path)
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    cfg = load_config(paper_cfg)
    assert len(lines) - 1 == 2 * len(cfg.grid)
    rows = [dict(zip(SWEEP_COLUMNS, l.split(","))) for l in lines[1:]]
    n = len(cfg.grid)
    for lo, hi in zip(rows[:n], rows[n:]):
        assert lo["ell_d"] == hi["ell_d"]
        assert float(hi["ER"]) > float(lo["ER"])


def test_sweep_all_unstable(batch_cfg):
    code, out = run_cli("sweep", "--config", batch_cfg, "--lambda", 1.0)
    assert code == 0
    rows = out.strip().splitlines()[1:]
    assert rows and all(r.endswith(",unstable") for r in rows)


def test_simulate_report(batch_cfg, tmp_path):
    path = tmp_path / "sim.csv"
    code, out = run_cli("simulate", "--config", batch_cfg, "--csv", path)
    assert code == 0
    assert "EW2" in out and "EW1_batch_workload" in out
    header = path.read_text().splitlines()[0]
    assert header == "quantity,analytic,sim_mean,half_width,inside_ci"


def test_simulate_needs_sim_block(tmp_path, paper_cfg):
    p = tmp_path / "nosim.cfg"
    text = paper_cfg.read_text()
    p.write_text(text[: text.index("[sim]")])
    assert run_cli("simulate", "--config", p)[0] == 2


def test_optimize(batch_cfg):
    code, out = run_cli("optimize", "--config", batch_cfg, "--refine", 0)
    assert code == 0
    assert "optimum: ell_d* = 100 B" in out
    assert run_cli("optimize", "--config", batch_cfg, "--refine", 0) == (code, out)


def test_optimize_no_stable_point(batch_cfg):
    assert run_cli("optimize", "--config", batch_cfg, "--lambda", 1.0)[0] == 3


def test_seed_override_changes_simulation(batch_cfg, tmp_path):
    a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
    run_cli("simulate", "--config", batch_cfg, "--csv", a)
    run_cli("simulate", "--config", batch_cfg, "--csv", b, "--seed", 5)
    run_cli("simulate", "--config", batch_cfg, "--csv", c, "--seed", 6)
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()
