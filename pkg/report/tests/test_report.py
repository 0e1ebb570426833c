"""Report generator: determinism, schema validation, figure outputs."""

import os
import subprocess
import sys

import pytest

from dplimit_report.cli import main
from dplimit_report.figures import ReportSpec, SchemaError, make_figures, read_table

SWEEP_ROWS = [
    "family,k,epsilon,n,target,trials,successes,success_rate",
    "sperner,4,0.5,4,1,100,20,0.2",
    "sperner,4,0.5,16,1,100,70,0.7",
    "sperner,4,0.5,16,2,100,68,0.68",
    "sperner,4,2,4,1,100,60,0.6",
    "sperner,4,2,16,1,100,95,0.95",
    "sperner,6,2,16,1,100,80,0.8",
    "sperner,6,2,32,1,100,90,0.9",
]

STEP_ROWS = [
    "run_id,t,epoch,output,correct,mistake,epsilon_cum,seed",
    "r-s0,1,0,1,0,1,0,0",
    "r-s0,2,1,2,1,0,0.6,0",
    "r-s0,3,1,2,1,0,0.6,0",
    "r-s0,4,2,2,1,0,0.75,0",
    "r-s1,1,0,1,0,1,0,1",
    "r-s1,2,1,1,0,1,0.6,1",
    "r-s1,3,1,2,1,0,0.6,1",
    "r-s1,4,2,2,1,0,0.75,1",
]

AUDIT_ROWS = [
    "kind,release,budget,measured,certified,passed",
    "uniform_finite,pair0,1,0.42,0.42,1",
    "uniform_finite,pair1,1,0.61,0.61,1",
    "uniform_finite,pair2,1,0.12,0.12,1",
    "alg2,pair0/s1,0.61,0.4,0.4,1",
]


@pytest.fixture
def runs_dir(tmp_path):
    d = tmp_path / "runs"
    d.mkdir()
    (d / "sweep.csv").write_text("\n".join(SWEEP_ROWS) + "\n")
    (d / "steps.csv").write_text("\n".join(STEP_ROWS) + "\n")
    (d / "audit.csv").write_text("\n".join(AUDIT_ROWS) + "\n")
    return d


def test_make_figures_writes_all_kinds_and_index(runs_dir, tmp_path):
    out = tmp_path / "figs"
    spec = ReportSpec(inputs={"sweep": str(runs_dir / "sweep.csv"),
                              "steps": str(runs_dir / "steps.csv"),
                              "audit": str(runs_dir / "audit.csv")},
                      out_dir=str(out))
    written = make_figures(spec)
    names = sorted(os.path.basename(p) for p in written)
    assert names == ["audit_hist.png", "frontier.png", "index.md",
                     "mistake_decay.png", "success_vs_n.png"]
    index = (out / "index.md").read_text()
    table = read_table(str(runs_dir / "sweep.csv"), "sweep")
    assert table.sha256 in index
    assert "![frontier](frontier.png)" in index


def test_two_invocations_byte_identical(runs_dir, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        code = main(["--in", str(runs_dir), "--out", str(out)])
        assert code == 0
    for name in ("success_vs_n.png", "frontier.png", "mistake_decay.png",
                 "audit_hist.png", "index.md"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_schema_violation_names_column_and_exits_nonzero(runs_dir, tmp_path,
                                                         capsys):
    broken = "\n".join(line.replace(",success_rate", ",rate")
                       for line in SWEEP_ROWS) + "\n"
    (runs_dir / "sweep.csv").write_text(broken)
    out = tmp_path / "figs"
    code = main(["--in", str(runs_dir), "--out", str(out)])
    assert code != 0
    err = capsys.readouterr().err
    assert "success_rate" in err
    assert not out.exists() or not list(out.iterdir())


def test_empty_rows_error_without_partial_files(runs_dir, tmp_path):
    (runs_dir / "sweep.csv").write_text(SWEEP_ROWS[0] + "\n")
    out = tmp_path / "figs"
    code = main(["--in", str(runs_dir), "--out", str(out)])
    assert code != 0
    assert not out.exists() or not list(out.iterdir())


def test_figure_subset_selection(runs_dir, tmp_path):
    out = tmp_path / "figs"
    code = main(["--in", str(runs_dir), "--out", str(out),
                 "--figures", "audit_hist"])
    assert code == 0
    assert sorted(os.listdir(out)) == ["audit_hist.png", "index.md"]


def test_missing_input_for_requested_figure(runs_dir, tmp_path):
    os.unlink(runs_dir / "audit.csv")
    out = tmp_path / "figs"
    code = main(["--in", str(runs_dir), "--out", str(out),
                 "--figures", "audit_hist"])
    assert code != 0


def test_unknown_figure_kind_rejected(runs_dir, tmp_path):
    code = main(["--in", str(runs_dir), "--out", str(tmp_path / "f"),
                 "--figures", "nope"])
    assert code != 0


def test_console_entry_point_deterministic_across_processes(runs_dir, tmp_path):
    outs = (tmp_path / "figs_a", tmp_path / "figs_b")
    for out in outs:
        proc = subprocess.run(
            [sys.executable, "-m", "dplimit_report.cli", "--in", str(runs_dir),
             "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert (out / "index.md").exists()
    for name in ("success_vs_n.png", "frontier.png", "mistake_decay.png",
                 "audit_hist.png", "index.md"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
