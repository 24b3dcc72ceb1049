"""Command-line interface: stage commands, profiles, exit codes."""

import os

import numpy as np
import pytest

from mpirecon.cli import main
from mpirecon.fileio import load_image

VACUUM_PERMEABILITY = 4e-7 * np.pi


@pytest.fixture
def config_file(tmp_path):
    out = tmp_path / "out"
    h_sat = 0.75 * 1.2e-3 / VACUUM_PERMEABILITY
    text = f"""
[pipeline]
stages = simulate,core,deconvolve
out = {out}
seed = 0

[grid]
height = 21
width = 21
extent_x_mm = 24.0
extent_y_mm = 24.0

[scanner]
gradient_x_t_per_m = -1.0
gradient_y_t_per_m = -1.0
drive_amplitude_x_mt = 12.0
drive_amplitude_y_mt = 12.0
drive_frequency_x_hz = 41.0
drive_frequency_y_hz = 40.0
sample_rate_hz = 14112
repetition_time_s = 1.0

[kernel]
h_sat_a_per_m = {h_sat}

[pnp]
nu0 = 1e-5
iterations = 5
cg_tolerance = 1e-8
denoiser = total-variation
tv_iterations = 40

[phantom]
kind = two-bar
separation_mm = 3.6
bar_length_a_mm = 12.0
bar_length_b_mm = 12.0
bar_width_mm = 1.2
margin_mm = 2.4
"""
    path = tmp_path / "pipeline.ini"
    path.write_text(text)
    return str(path), str(out)


class TestCommands:
    def test_run(self, config_file, capsys):
        path, out = config_file
        assert main(["run", "--config", path]) == 0
        assert os.path.exists(os.path.join(out, "recon.float.txt"))
        assert "artifacts" in capsys.readouterr().out

    def test_phantom_only(self, config_file):
        path, out = config_file
        assert main(["phantom", "--config", path]) == 0
        assert os.path.exists(os.path.join(out, "phantom.float.txt"))
        assert not os.path.exists(os.path.join(out, "signal.csv"))

    def test_simulate_then_core_then_deconvolve(self, config_file):
        path, out = config_file
        assert main(["simulate", "--config", path]) == 0
        assert os.path.exists(os.path.join(out, "signal.csv"))
        assert main(["core", "--config", path]) == 0
        assert os.path.exists(os.path.join(out, "trace.float.txt"))
        assert main(["deconvolve", "--config", path]) == 0
        assert os.path.exists(os.path.join(out, "recon.float.txt"))

    def test_preprocess_stage(self, config_file):
        path, out = config_file
        assert main(["simulate", "--config", path]) == 0
        assert main(["preprocess", "--config", path]) == 0
        assert os.path.exists(os.path.join(out, "signal_preprocessed.csv"))

    def test_out_override(self, config_file, tmp_path):
        path, _ = config_file
        alt = str(tmp_path / "elsewhere")
        assert main(["phantom", "--config", path, "--out", alt]) == 0
        assert os.path.exists(os.path.join(alt, "phantom.float.txt"))

    def test_profile_to_stdout(self, config_file, capsys):
        path, out = config_file
        main(["phantom", "--config", path])
        capsys.readouterr()  # drop the phantom command's output
        base = os.path.join(out, "phantom")
        assert main(["profile", "--image", base, "--axis", "row", "--index", "10"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "coordinate_m,value"
        assert len(lines) == 22
        image = load_image(base)
        values = [float(line.split(",")[1]) for line in lines[1:]]
        assert np.array_equal(values, image.values[10])

    def test_profile_to_file(self, config_file, tmp_path):
        path, out = config_file
        main(["phantom", "--config", path])
        target = str(tmp_path / "profile.csv")
        code = main(
            [
                "profile",
                "--image",
                os.path.join(out, "phantom"),
                "--axis",
                "column",
                "--index",
                "3",
                "--out",
                target,
            ]
        )
        assert code == 0
        assert os.path.exists(target)

    def test_sweep_with_pairs(self, config_file, capsys):
        path, out = config_file
        h_sat = 0.75 * 1.2e-3 / VACUUM_PERMEABILITY
        code = main(["sweep", "--config", path, "--pairs", f"{h_sat},1e-5;{2*h_sat},1e-4"])
        assert code == 0
        assert os.path.exists(os.path.join(out, "sweep.csv"))
        assert "score=" in capsys.readouterr().out

    def test_example_config_prints(self, capsys):
        assert main(["example-config"]) == 0
        text = capsys.readouterr().out
        assert "[pipeline]" in text
        assert "stages" in text


class TestFailures:
    def test_missing_config_file(self, capsys):
        assert main(["run", "--config", "/nonexistent.ini"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_stage_failure_is_tagged(self, config_file, tmp_path, capsys):
        path, _ = config_file
        # deconvolve without any trace available
        code = main(["deconvolve", "--config", path, "--out", str(tmp_path / "empty")])
        assert code == 1
        err = capsys.readouterr().err
        assert "[deconvolve]" in err

    def test_bad_phantom_geometry_tagged(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text(
            """
[pipeline]
stages = simulate
out = {}
[phantom]
kind = dot
dot_center_x_mm = 40.0
""".format(tmp_path / "bad_out")
        )
        assert main(["simulate", "--config", str(bad)]) == 1
        assert "[simulate]" in capsys.readouterr().err
