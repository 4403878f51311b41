"""Project loading, session scripts, replay determinism, and the CLI."""

import json

import numpy as np
import pytest

from primfit.cli import main as cli_main
from primfit.errors import (MissingImage, ParseError, ReplayError, ScriptError)
from primfit.meshio import import_meshes, write_cloud_ply
from primfit.session import (load_cameras, load_project, load_script, parse_script,
                             replay, serialize_script, validate_script)

CAM_ENTRY = {"id": 0, "P": [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0],
             "image": "view0.png", "width": 64, "height": 48}


def write_scene(tmp_path, n=3):
    pts = np.arange(n * 3, dtype=float).reshape(n, 3) + (0, 0, 5)
    cloud = tmp_path / "cloud.ply"
    write_cloud_ply(pts, cloud, binary=False)
    (tmp_path / "view0.png").write_bytes(b"\x89PNG\r\n\x1a\n")
    cams = tmp_path / "cameras.json"
    cams.write_text(json.dumps([CAM_ENTRY]))
    return cloud, cams


class TestLoadProject:
    def test_three_point_project(self, tmp_path):
        cloud, cams = write_scene(tmp_path)
        project = load_project(cloud, cams)
        assert len(project.cloud) == 3
        assert len(project.views) == 1

    def test_missing_image(self, tmp_path):
        cloud, cams = write_scene(tmp_path)
        (tmp_path / "view0.png").unlink()
        with pytest.raises(MissingImage):
            load_project(cloud, cams)

    def test_duplicate_view_ids(self, tmp_path):
        cloud, cams = write_scene(tmp_path)
        cams.write_text(json.dumps([CAM_ENTRY, CAM_ENTRY]))
        with pytest.raises(ValueError):
            load_project(cloud, cams)

    def test_bad_camera_entry(self, tmp_path):
        cloud, cams = write_scene(tmp_path)
        cams.write_text(json.dumps([{"id": 0, "P": [1, 2, 3]}]))
        with pytest.raises(ParseError):
            load_cameras(cams)

    def test_binary_ascii_equivalence(self, tmp_path, sphere_scene):
        """The same cloud in both encodings loads identically."""
        from primfit.meshio import read_cloud_ply

        rng = np.random.default_rng(32)
        pts = rng.normal(size=(50, 3))
        a, b = tmp_path / "a.ply", tmp_path / "b.ply"
        write_cloud_ply(pts, a, binary=False)
        write_cloud_ply(pts, b, binary=True)
        assert np.array_equal(read_cloud_ply(a).points, read_cloud_ply(b).points)


class TestScripts:
    def test_parse_serialize_roundtrip(self):
        actions = [{"action": "select", "colour": [255, 0, 0]},
                   {"action": "fit_ellipsoid", "selection": "sel0", "prior_sigma": 0.001}]
        text = serialize_script(actions)
        assert parse_script(text) == actions
        assert serialize_script(parse_script(text)) == text

    def test_parse_error_reports_line(self):
        with pytest.raises(ParseError, match=":2:"):
            parse_script('{"action":"select","colour":[1,2,3]}\nnot json\n')

    def test_unknown_action(self):
        with pytest.raises(ScriptError):
            validate_script([{"action": "explode"}])

    def test_forward_reference_rejected(self):
        with pytest.raises(ScriptError, match="sel0"):
            validate_script([{"action": "fit_ellipsoid", "selection": "sel0"}])

    def test_topological_order_accepted(self):
        validate_script([
            {"action": "add_stroke", "view": 0, "colour": [1, 2, 3], "width": 4,
             "points": [[0, 0]]},
            {"action": "select", "colour": [1, 2, 3]},
            {"action": "fit_ellipsoid", "selection": "sel0"},
            {"action": "trim", "mesh": "mesh0", "margin": 0.1},
            {"action": "export", "meshes": ["mesh1"], "path": "out.ply"},
        ])

    def test_absolute_export_path_rejected(self):
        with pytest.raises(ScriptError):
            validate_script([
                {"action": "add_stroke", "view": 0, "colour": [1, 2, 3], "width": 4,
                 "points": [[0, 0]]},
                {"action": "select", "colour": [1, 2, 3]},
                {"action": "fit_ellipsoid", "selection": "sel0"},
                {"action": "export", "meshes": ["mesh0"], "path": "/etc/owned.ply"},
            ])


class TestReplay:
    def test_empty_script_empty_store(self, sphere_project):
        store = replay(sphere_project, [])
        assert not store.selections and not store.meshes and not store.exports

    def test_synthetic_scene_pipeline(self, sphere_project, sphere_scene, tmp_path):
        """stroke + select + fit on the synthetic sphere: the exported mesh
        passes the quadric residual check."""
        actions = load_script(sphere_scene["script"])
        store = replay(sphere_project, actions, out_dir=tmp_path)
        assert store.exports
        q = store.quadrics["quad0"]
        mesh = store.meshes["mesh1"]  # trimmed ellipsoid
        resid = np.abs(q.evaluate(mesh.vertices))
        sel = store.selections["sel0"]
        sub = sphere_project.cloud.points[sel.selected_indices]
        from primfit.quadric import principal_frame
        tau = principal_frame(q, sub).tau
        assert resid.max() < 1e-6 * abs(tau)

    def test_replay_twice_byte_identical(self, sphere_project, sphere_scene, tmp_path):
        actions = load_script(sphere_scene["script"])
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        s1 = replay(sphere_project, actions, out_dir=out1)
        s2 = replay(sphere_project, actions, out_dir=out2)
        for p1, p2 in zip(s1.exports, s2.exports):
            assert p1.read_bytes() == p2.read_bytes()

    def test_error_annotated_with_action_index(self, sphere_project):
        actions = [{"action": "select", "colour": [9, 9, 9]}]  # no strokes
        with pytest.raises(ReplayError) as err:
            replay(sphere_project, actions)
        assert err.value.action_index == 0
        assert err.value.action_type == "select"

    def test_trim_without_frame_rejected(self, sphere_project, sphere_scene, tmp_path):
        actions = load_script(sphere_scene["script"])[:-2]
        actions.append({"action": "trim", "mesh": "mesh2", "margin": 0.1})
        with pytest.raises(ReplayError) as err:
            replay(sphere_project, actions, out_dir=tmp_path)
        assert isinstance(err.value.cause, ScriptError)

    def test_exports_readable(self, sphere_project, sphere_scene, tmp_path):
        actions = load_script(sphere_scene["script"])
        store = replay(sphere_project, actions, out_dir=tmp_path)
        ply = [p for p in store.exports if p.suffix == ".ply"][0]
        meshes = import_meshes(ply)
        assert len(meshes) == 3  # trimmed ellipsoid + two curve surfaces
        obj = [p for p in store.exports if p.suffix == ".obj"][0]
        assert len(import_meshes(obj)) == 1


class TestCli:
    def test_info(self, sphere_scene, capsys):
        assert cli_main(["info", "--cloud", str(sphere_scene["cloud"])]) == 0
        out = capsys.readouterr().out
        assert "2000 points" in out

    def test_validate_ok(self, sphere_scene, capsys):
        assert cli_main(["validate", str(sphere_scene["script"])]) == 0
        assert "OK" in capsys.readouterr().out

    def test_validate_parse_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        assert cli_main(["validate", str(bad)]) == 2

    def test_replay_cli_and_report(self, sphere_scene, tmp_path, capsys):
        out = tmp_path / "out"
        rc = cli_main(["replay", "--cloud", str(sphere_scene["cloud"]),
                       "--cameras", str(sphere_scene["cameras"]),
                       "--script", str(sphere_scene["script"]),
                       "--out", str(out)])
        assert rc == 0
        assert (out / "scene_meshes.ply").exists()
        rc = cli_main(["report", "--cloud", str(sphere_scene["cloud"]),
                       "--cameras", str(sphere_scene["cameras"]),
                       "--script", str(sphere_scene["script"]),
                       "--out", str(out)])
        assert rc == 0
        assert (out / "report_summary.csv").exists()
        figs = list(out.glob("fig_*.png"))
        assert len(figs) >= 7  # 1 selection + 2 curves + 4 meshes

    def test_missing_cloud_exit_4(self, tmp_path):
        assert cli_main(["info", "--cloud", str(tmp_path / "nope.ply")]) == 4

    def test_numerical_failure_exit_3(self, sphere_scene, tmp_path):
        """A select with no matching strokes fails numerically, not parse."""
        script = tmp_path / "s.jsonl"
        script.write_text('{"action":"select","colour":[9,9,9]}\n')
        rc = cli_main(["replay", "--cloud", str(sphere_scene["cloud"]),
                       "--cameras", str(sphere_scene["cameras"]),
                       "--script", str(script), "--out", str(tmp_path / "o")])
        assert rc == 3
