import os

import numpy as np
import pytest

from voldiff.cli import main
from voldiff.imageio import read_pfm


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("pipeline") / "neb"
    assert main(["generate", "--scene", "nebulae", "--res", "24", "--seed", "3",
                 "--out-dir", str(d)]) == 0
    return d


def test_generate_writes_manifest(scene_dir):
    assert (scene_dir / "scene.txt").exists()
    assert (scene_dir / "sigma_t_r.vgrd").exists()


def test_bake_then_solve_then_render(scene_dir):
    assert main(["bake", str(scene_dir)]) == 0
    assert (scene_dir / "qri_g.vgrd").exists()
    assert main(["solve", str(scene_dir), "--limiter", "lp", "--omega", "1.5",
                 "--downsample", "2"]) == 0
    assert (scene_dir / "phi_b.vgrd").exists()
    assert (scene_dir / "residual.csv").read_text().startswith("iteration,")
    assert main(["render", str(scene_dir)]) == 0
    img = read_pfm(scene_dir / "render.pfm")
    assert img.pixels.max() > 0


def test_render_rerun_byte_identical(scene_dir):
    first = (scene_dir / "render.pfm").read_bytes()
    assert main(["render", str(scene_dir)]) == 0
    assert (scene_dir / "render.pfm").read_bytes() == first


def test_pathtrace_deterministic(scene_dir):
    assert main(["pathtrace", str(scene_dir), "--spp", "2", "--seed", "7"]) == 0
    first = (scene_dir / "pathtrace.pfm").read_bytes()
    assert main(["pathtrace", str(scene_dir), "--spp", "2", "--seed", "7"]) == 0
    assert (scene_dir / "pathtrace.pfm").read_bytes() == first


def test_compare_identical_is_zero(scene_dir, capsys):
    assert main(["compare", str(scene_dir / "render.pfm"),
                 str(scene_dir / "render.pfm")]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "rmse 0.000000000e+00"


def test_missing_manifest_is_usage_error(tmp_path):
    assert main(["bake", str(tmp_path / "nothing")]) == 1  # missing file


def test_bad_config_file_is_usage_error(tmp_path):
    assert main(["--config", str(tmp_path / "nope.txt"), "generate",
                 "--scene", "nebulae", "--res", "16",
                 "--out-dir", str(tmp_path / "x")]) == 2


def test_config_supplies_solver_defaults(scene_dir, tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("solver.omega = 1.2\nsolver.max_iters = 4000\n")
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "solve", str(scene_dir),
                 "--downsample", "2", "--out-dir", str(out)]) == 0
    assert (out / "phi_r.vgrd").exists()


def test_solve_nonconvergence_exit_code(scene_dir, tmp_path):
    out = tmp_path / "nc"
    code = main(["solve", str(scene_dir), "--downsample", "2",
                 "--max-iters", "2", "--out-dir", str(out)])
    assert code == 1


def test_validate_point_source_passes(tmp_path):
    code = main(["validate-point-source", "--res", "61", "--albedo", "0.8",
                 "--omega", "1.8", "--out-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "profile_cda.csv").exists()
    assert (tmp_path / "profile_fld.csv").exists()


def test_validate_rejects_bad_albedo(tmp_path):
    assert main(["validate-point-source", "--res", "21", "--albedo", "1.2",
                 "--out-dir", str(tmp_path)]) == 2


def test_render_without_phi_errors(tmp_path):
    d = tmp_path / "sphere"
    assert main(["generate", "--scene", "noise-sphere", "--res", "16",
                 "--out-dir", str(d)]) == 0
    assert main(["render", str(d)]) == 2  # scattering scene with no phi


def test_point_source_generate(tmp_path):
    d = tmp_path / "ps"
    assert main(["generate", "--scene", "point-source", "--res", "21",
                 "--tau", "4.0", "--albedo", "0.4", "--out-dir", str(d)]) == 0
    assert (d / "emission_r.vgrd").exists()
