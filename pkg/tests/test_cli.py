import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
import yaml

from hexrod.cli import (config_to_dict, default_run_config, load_config,
                        main, parse_config, serialize_config)


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    """Default geometry with experiment sizes trimmed for test runtime."""
    cfg = config_to_dict(default_run_config())
    cfg["solver"]["max_iterations"] = 60
    cfg["experiments"]["stiffness"] = {
        "force_start": 10.0, "force_stop": 30.0, "force_step": 10.0}
    cfg["experiments"]["rotation"] = {
        "yaw_start_deg": 0.0, "yaw_stop_deg": 20.0, "yaw_step_deg": 10.0}
    cfg["experiments"]["trajectory"] = {
        "radius": 0.02, "pitch": 0.01, "turns": 1.0, "samples": 8, "load": 5.0}
    cfg["experiments"]["workspace"] = {
        "center": [0.0, 0.0, 0.4], "radius": 0.02, "z_min": 0.39, "z_max": 0.41,
        "n_r": 1, "n_theta": 3, "n_z": 1}
    path = tmp_path_factory.mktemp("cfg") / "small.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def read_csv(path):
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    return rows[0], rows[1:]


def mechanisms_equal(a, b):
    if (a.ee_mass != b.ee_mass or a.motor_limits != b.motor_limits
            or not np.array_equal(a.gravity, b.gravity)):
        return False
    for la, lb in zip(a.legs, b.legs):
        if not (np.array_equal(la.motor_position, lb.motor_position)
                and np.array_equal(la.motor_orientation, lb.motor_orientation)
                and la.crank_length == lb.crank_length
                and np.array_equal(la.ee_attachment, lb.ee_attachment)
                and la.rod.length == lb.rod.length
                and la.rod.section.diameter == lb.rod.section.diameter
                and la.rod.material == lb.rod.material
                and np.array_equal(la.rod.v_star, lb.rod.v_star)
                and np.array_equal(la.rod.u_star, lb.rod.u_star)
                and np.array_equal(la.rod.gravity, lb.rod.gravity)):
            return False
    return True


class TestConfig:
    def test_seed_geometry_roundtrip(self, tmp_path):
        seed_path = tmp_path / "seeded.yaml"
        assert main(["--seed-geometry", str(seed_path)]) == 0
        loaded = load_config(str(seed_path))
        reloaded = parse_config(yaml.safe_load(serialize_config(loaded)))
        assert mechanisms_equal(loaded.mechanism, reloaded.mechanism)
        assert loaded.solver == reloaded.solver
        assert loaded.stiffness_forces == reloaded.stiffness_forces
        assert loaded.rotation_yaws == reloaded.rotation_yaws

    def test_unknown_keys_rejected(self, tmp_path):
        cfg = config_to_dict(default_run_config())
        cfg["mechanism"]["paint_color"] = "red"
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump(cfg))
        assert main(["ik", "--config", str(path), "--out", str(tmp_path)]) == 1

    def test_malformed_yaml_rejected(self, tmp_path, capsys):
        path = tmp_path / "broken.yaml"
        path.write_text("mechanism: [unclosed")
        assert main(["ik", "--config", str(path), "--out", str(tmp_path)]) == 1
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "config"

    def test_missing_required_key(self, tmp_path):
        cfg = config_to_dict(default_run_config())
        del cfg["mechanism"]["legs"][0]["rod"]
        path = tmp_path / "missing.yaml"
        path.write_text(yaml.safe_dump(cfg))
        assert main(["ik", "--config", str(path), "--out", str(tmp_path)]) == 1


class TestIkFk:
    def test_ik_rest_pose(self, tmp_path, small_config):
        out = tmp_path / "ik"
        assert main(["ik", "--config", small_config, "--out", str(out)]) == 0
        payload = json.loads((out / "ik_result.json").read_text())
        assert payload["converged"] is True
        assert payload["residual_norm"] <= 5e-10
        header, rows = read_csv(out / "centerlines.csv")
        assert header == ["leg", "s", "x", "y", "z"]
        assert len(rows) == 6 * 50
        assert sorted({r[0] for r in rows}) == [str(i) for i in range(6)]

    def test_ik_unreachable_exits_two(self, tmp_path, small_config, capsys):
        out = tmp_path / "ik_bad"
        code = main(["ik", "--config", small_config, "--out", str(out),
                     "--pose", "0", "0", "10", "0", "0", "0"])
        assert code == 2
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "no_convergence"
        # result file still written for diagnosis
        payload = json.loads((out / "ik_result.json").read_text())
        assert payload["converged"] is False

    def test_fk_roundtrip_from_ik_output(self, tmp_path, small_config):
        out_ik = tmp_path / "ik"
        assert main(["ik", "--config", small_config, "--out", str(out_ik)]) == 0
        angles = json.loads((out_ik / "ik_result.json").read_text())["motor_angles_deg"]
        out_fk = tmp_path / "fk"
        assert main(["fk", "--config", small_config, "--out", str(out_fk),
                     "--angles", *[str(a) for a in angles]]) == 0
        payload = json.loads((out_fk / "fk_result.json").read_text())
        position = np.array(payload["ee_pose"]["position"])
        assert np.linalg.norm(position - [0.0, 0.0, 0.4]) <= 1e-6

    def test_fk_nan_angle_exits_one(self, tmp_path, small_config):
        code = main(["fk", "--config", small_config, "--out", str(tmp_path),
                     "--angles", "nan", "10", "10", "10", "10", "10"])
        assert code == 1

    def test_fk_zero_wrench_default(self, tmp_path, small_config):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        args = ["fk", "--config", small_config, "--angles",
                "28.7", "28.7", "28.7", "28.7", "28.7", "28.7"]
        assert main(args + ["--out", str(out_a)]) == 0
        assert main(args + ["--out", str(out_b),
                            "--force", "0", "0", "0", "--moment", "0", "0", "0"]) == 0
        payload_a = json.loads((out_a / "fk_result.json").read_text())
        payload_b = json.loads((out_b / "fk_result.json").read_text())
        payload_a.pop("wall_s")
        payload_b.pop("wall_s")
        assert payload_a == payload_b

    def test_csv_floats_roundtrip_losslessly(self, tmp_path, small_config):
        out = tmp_path / "ik"
        assert main(["ik", "--config", small_config, "--out", str(out)]) == 0
        _, rows = read_csv(out / "centerlines.csv")
        for row in rows[:20]:
            for text in row[1:]:
                assert format(float(text), ".17g") == text


class TestExperimentCommands:
    def test_stiffness_schema_and_manifest(self, tmp_path, small_config):
        out = tmp_path / "stiff"
        assert main(["stiffness", "--config", small_config, "--out", str(out)]) == 0
        header, rows = read_csv(out / "stiffness.csv")
        assert header == ["force_N", "ee_height_m", "converged", "residual", "wall_s"]
        assert len(rows) >= 2
        manifest = json.loads((out / "stiffness_manifest.json").read_text())
        assert manifest["summary"]["stiffness_n_per_m"] > 0
        assert manifest["summary"]["max_force_n"] >= 10.0
        assert set(manifest) >= {"version", "config_sha256", "residual_tolerance"}

    def test_rotation_schema(self, tmp_path, small_config):
        out = tmp_path / "rot"
        assert main(["rotation", "--config", small_config, "--out", str(out)]) == 0
        header, rows = read_csv(out / "rotation.csv")
        assert header[:3] == ["yaw_deg", "converged", "residual"]
        assert len(header) == 10
        assert len(rows) == 3
        manifest = json.loads((out / "rotation_manifest.json").read_text())
        assert manifest["summary"]["max_converged_yaw_deg"] == pytest.approx(20.0)

    def test_trajectory_roundtrip_error(self, tmp_path, small_config):
        out = tmp_path / "traj"
        assert main(["trajectory", "--config", small_config, "--out", str(out)]) == 0
        header, rows = read_csv(out / "trajectory.csv")
        assert header == ["index", "ref_x", "ref_y", "ref_z", "fk_x", "fk_y",
                          "fk_z", "error_m", "converged", "residual", "wall_s"]
        assert len(rows) == 8
        manifest = json.loads((out / "trajectory_manifest.json").read_text())
        assert manifest["summary"]["max_error_m"] <= 1e-6
        assert manifest["summary"]["fraction_converged"] == 1.0

    def test_workspace_schema_and_determinism(self, tmp_path, small_config):
        out_a = tmp_path / "ws_a"
        out_b = tmp_path / "ws_b"
        for out in (out_a, out_b):
            assert main(["workspace", "--config", small_config,
                         "--out", str(out)]) == 0
        header, rows_a = read_csv(out_a / "workspace.csv")
        _, rows_b = read_csv(out_b / "workspace.csv")
        assert header == ["x", "y", "z", "converged", "accepted", "residual",
                          "q1_deg_min", "q1_deg_max", "wall_s"]
        # identical atlases modulo the wall-clock column
        assert [r[:-1] for r in rows_a] == [r[:-1] for r in rows_b]
        manifest = json.loads((out_a / "workspace_manifest.json").read_text())
        assert 0.0 <= manifest["summary"]["acceptance_fraction"] <= 1.0
        header_r, _ = read_csv(out_a / "motor_ranges.csv")
        assert header_r == ["z", "leg", "q1_deg_min", "q1_deg_max", "n_accepted"]

    def test_workspace_parallel_matches_sequential(self, tmp_path, small_config):
        out_seq = tmp_path / "seq"
        out_par = tmp_path / "par"
        assert main(["workspace", "--config", small_config, "--out", str(out_seq),
                     "--jobs", "1"]) == 0
        assert main(["workspace", "--config", small_config, "--out", str(out_par),
                     "--jobs", "2"]) == 0
        _, rows_seq = read_csv(out_seq / "workspace.csv")
        _, rows_par = read_csv(out_par / "workspace.csv")
        assert [r[:-1] for r in rows_seq] == [r[:-1] for r in rows_par]

    def test_exit_three_when_nothing_converges(self, tmp_path):
        cfg = config_to_dict(default_run_config())
        cfg["solver"]["max_iterations"] = 8
        cfg["experiments"]["rest_height"] = 10.0
        cfg["experiments"]["rotation"] = {
            "yaw_start_deg": 0.0, "yaw_stop_deg": 10.0, "yaw_step_deg": 10.0}
        path = tmp_path / "hopeless.yaml"
        path.write_text(yaml.safe_dump(cfg))
        assert main(["rotation", "--config", str(path), "--out", str(tmp_path)]) == 3

    def test_tolerance_override(self, tmp_path, small_config):
        out = tmp_path / "tol"
        assert main(["ik", "--config", small_config, "--out", str(out),
                     "--tolerance", "1e-6"]) == 0
        payload = json.loads((out / "ik_result.json").read_text())
        assert payload["tolerance"] == 1e-6


def test_console_module_entrypoint(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "hexrod.cli", "--seed-geometry",
         str(tmp_path / "cfg.yaml")],
        capture_output=True, text=True, timeout=120)
    assert result.returncode == 0
    assert (tmp_path / "cfg.yaml").exists()
