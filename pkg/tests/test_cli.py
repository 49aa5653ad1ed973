import csv
import re
from pathlib import Path

import pytest

from cetsim.calibration import default_calibration_path
from cetsim.cli import main
from cetsim.engine import EventKind, Trace
from cetsim.experiment import CSV_HEADER, ConfigError, parse_config

SMALL = """\
[experiment]
seed = 7
rounds_per_point = 3

[sweep.day]
scenario = Daytime
snr_db = 25
variants = GFM, PIM(P+M)
"""


def write(tmp_path: Path, text: str, name="cfg.ini") -> Path:
    p = tmp_path / name
    p.write_text(text)
    return p


def rows(path: Path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_small_sweep(tmp_path, capsys):
    assert main(["simulate", "--config", str(write(tmp_path, SMALL)), "--out", str(tmp_path / "out")]) == 0
    out = tmp_path / "out"
    assert (out / "results.csv").read_text().splitlines()[0] == CSV_HEADER
    data = rows(out / "results.csv")
    assert len(data) == 6
    gfm = [r for r in data if r["variant"] == "GFM"]
    pim = [r for r in data if r["variant"] == "PIM(P+M)"]
    assert all(float(r["accuracy"]) <= 0.769 + 1e-9 for r in gfm)
    assert all(5.0 <= float(r["total_ms"]) <= 10.0 for r in pim)
    assert {r["seed"] for r in data} == {"7"} and [r["round"] for r in gfm] == ["0", "1", "2"]
    assert "calibration_sha256" in (out / "manifest.ini").read_text()


def test_seed_override_and_sampled_outcomes(tmp_path):
    cfg = str(write(tmp_path, SMALL))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "99", "--sample-outcomes"]) == 0
    data = rows(tmp_path / "a" / "results.csv")
    assert {r["seed"] for r in data} == {"99"}
    assert {r["accuracy"] for r in data} <= {"0", "1"}


def test_manifest_reproduces_run(tmp_path):
    attacks = SMALL + "\n[attacks]\nSemanticTamper = probability=0.5 severity=0.5\n"
    main(["simulate", "--config", str(write(tmp_path, attacks)), "--out", str(tmp_path / "a")])
    main(["simulate", "--config", str(tmp_path / "a" / "manifest.ini"), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
    assert (tmp_path / "a" / "manifest.ini").read_text() == (tmp_path / "b" / "manifest.ini").read_text()


def test_thread_pool_keeps_canonical_order(tmp_path, monkeypatch):
    cfg = str(write(tmp_path, SMALL.replace("snr_db = 25", "snr_db = 0, 10, 25").replace("GFM, PIM(P+M)", "all")))
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "one")])
    monkeypatch.setenv("CETSIM_THREADS", "4")
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "four")])
    assert (tmp_path / "one" / "results.csv").read_bytes() == (tmp_path / "four" / "results.csv").read_bytes()
    assert len(rows(tmp_path / "one" / "results.csv")) == 3 * 7 * 3


def test_auto_sweep_logs_decisions(tmp_path):
    text = SMALL.replace("variants = GFM, PIM(P+M)", "variants = auto") + (
        "\n[controller]\nterminal = 2\nlatency_budget_s = 0.02\n"
    )
    assert main(["simulate", "--config", str(write(tmp_path, text)), "--out", str(tmp_path / "o"), "--traces"]) == 0
    data = rows(tmp_path / "o" / "results.csv")
    assert data and all(r["mode"] == "PIM" for r in data)
    blocks = (tmp_path / "o" / "traces.log").read_text()
    decisions = [e for e in Trace.from_text(blocks).events if e.kind is EventKind.DECISION and "ranking=" in e.detail]
    assert len(decisions) == 3


@pytest.mark.parametrize(
    "text,line",
    [
        (SMALL.replace("seed = 7", "seed = 7\nbogus = 1"), 3),
        (SMALL + "\n[mystery]\nx = 1\n", 10),
        (SMALL.replace("variants = GFM, PIM(P+M)", "variants = PIM(P+I+C)"), 8),
        (SMALL.replace("snr_db = 25", "snr_db = 45"), 7),
    ],
)
def test_config_errors_exit_2_with_line(tmp_path, capsys, text, line):
    code = main(["simulate", "--config", str(write(tmp_path, text)), "--out", str(tmp_path / "o")])
    assert code == 2
    assert re.search(rf"cfg\.ini:{line}:", capsys.readouterr().err)


def test_config_links_and_codecs_parse():
    text = SMALL + """
[nodes]
0 = Cloud
1 = Edge
2 = Terminal P,I,C,M
3 = Terminal P,M

[links]
1-0 = CloudUplink bandwidth_bits_per_s=1e8
2-1 = EdgeLocal
3-1 = EdgeLocal up=false
2-3 = PeerD2D propagation_s=0.0002

[codecs]
I = compression_ratio=0.1
"""
    cfg = parse_config(text)
    assert cfg.topology.link(0, 1).bandwidth_bits_per_s == 1e8
    assert not cfg.topology.link(1, 3).up
    assert cfg.topology.link(2, 3).propagation_s == 0.0002
    assert cfg.codecs[next(m for m in cfg.codecs if m.tag == "I")].compression_ratio == 0.1
    with pytest.raises(ConfigError):
        parse_config(text.replace("up=false", "speed=3"))


def test_bad_calibration_exits_3(tmp_path, capsys):
    bad = default_calibration_path().read_text().replace("PIM(P+I)@Daytime = 0.66", "PIM(P+I)@Daytime = 0.79")
    cal = write(tmp_path, bad, "cal.ini")
    cfg = write(tmp_path, SMALL.replace("rounds_per_point = 3", f"rounds_per_point = 3\ncalibration = {cal}"))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "subset-monotonicity" in capsys.readouterr().err


def test_validate_calibration(tmp_path, capsys):
    assert main(["validate-calibration", str(default_calibration_path())]) == 0
    report = capsys.readouterr().out
    assert report.count("PASS") == 5 and "FAIL" not in report

    text = default_calibration_path().read_text()
    bad = write(tmp_path, text.replace("PIM(P+I)@Daytime = 0.66", "PIM(P+I)@Daytime = 0.79"), "bad.ini")
    assert main(["validate-calibration", str(bad)]) == 3
    cap = capsys.readouterr()
    assert "FAIL subset-monotonicity" in cap.out and "first violated constraint: subset-monotonicity" in cap.err

    missing = write(tmp_path, text.replace("CRM(P+C+M) = 8.46e+00, 1.06e+02, 3.42e+01\n", ""), "missing.ini")
    assert main(["validate-calibration", str(missing)]) == 3
    assert "MissingVariant" in capsys.readouterr().err


def test_plot_outputs_are_deterministic(tmp_path):
    cfg = write(tmp_path, SMALL.replace("GFM, PIM(P+M)", "all") + "\n[sweep.night]\nscenario = Nighttime\nsnr_db = 0, 25\nvariants = all\n")
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "run")])
    csv_in = str(tmp_path / "run" / "results.csv")
    assert main(["plot", "--in", csv_in, "--out", str(tmp_path / "p1")]) == 0
    assert main(["plot", "--in", csv_in, "--out", str(tmp_path / "p2")]) == 0
    names = sorted(p.name for p in (tmp_path / "p1").iterdir())
    assert names == ["accuracy_vs_snr_daytime.svg", "accuracy_vs_snr_nighttime.svg", "complexity_table.csv"]
    for n in names:
        assert (tmp_path / "p1" / n).read_bytes() == (tmp_path / "p2" / n).read_bytes()
    svg = (tmp_path / "p1" / "accuracy_vs_snr_daytime.svg").read_text()
    assert len(re.findall(r'id="series-', svg)) == 7


def test_plot_single_series(tmp_path):
    cfg = write(tmp_path, SMALL.replace("GFM, PIM(P+M)", "PIM(P+M)"))
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "run")])
    main(["plot", "--in", str(tmp_path / "run" / "results.csv"), "--out", str(tmp_path / "p")])
    svg = (tmp_path / "p" / "accuracy_vs_snr_daytime.svg").read_text()
    assert re.findall(r'id="series-([^"]+)"', svg) == ["PIM(P+M)"]


def test_plot_schema_mismatch_exits_2(tmp_path):
    bad = write(tmp_path, "mode,variant\nGFM,GFM\n", "bad.csv")
    assert main(["plot", "--in", str(bad), "--out", str(tmp_path / "p")]) == 2
