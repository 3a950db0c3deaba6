import subprocess
import sys

from mulink_plots import preset_names
from mulink_plots.cli import main


def test_cli_renders_every_sample_preset(samples, tmp_path, capsys):
    assert main(["--in", str(samples), "--out", str(tmp_path)]) == 0
    for preset in preset_names():
        assert (tmp_path / f"{preset}.svg").exists()
        assert (tmp_path / f"{preset}.png").exists()
    out = capsys.readouterr().out
    assert out.count("wrote ") == len(preset_names())


def test_cli_renders_a_single_named_preset(samples, tmp_path):
    assert main(["--in", str(samples), "--out", str(tmp_path),
                 "--preset", "fig_cell"]) == 0
    written = sorted(p.name for p in tmp_path.iterdir())
    assert written == ["fig_cell.png", "fig_cell.svg"]


def test_cli_rejects_unknown_presets(samples, tmp_path, capsys):
    assert main(["--in", str(samples), "--out", str(tmp_path),
                 "--preset", "fig_nope"]) == 2
    assert "unknown preset" in capsys.readouterr().err


def test_cli_requires_input_csvs(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["--in", str(empty), "--out", str(tmp_path)]) == 2
    assert "no <preset>.csv files" in capsys.readouterr().err


def test_cli_reports_missing_named_csv(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["--in", str(empty), "--out", str(tmp_path),
                 "--preset", "fig_cell"]) == 2
    assert "no such file" in capsys.readouterr().err


def test_help_runs_as_a_module():
    proc = subprocess.run(
        [sys.executable, "-m", "mulink_plots.cli", "--help"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "render-figures" in proc.stdout
