"""
Tests de almacenamiento - JSON canónico, archivos de escena, planes y exportación OBJ
"""

import json
import math

import numpy as np
import pytest
import trimesh

from errors import ParseError, PlanIOError, SceneValidationError
from planner.evaluator import order_score
from planner.search import plan
from settings import PlannerConfig, config_hash
from storage.canonical import canonical_dumps
from storage.export import export_steps
from storage.plan_file import dumps_plan, load_plan, plan_to_file, save_plan, schema_errors
from storage.scene_file import load_scene, parse_scene, save_scene, scene_from_file, validate_scene

from conftest import VOXEL


def _write_scene(path, workpieces, **extra):
    path.write_text(json.dumps({"workpieces": workpieces, **extra}), encoding="utf-8")
    return path


# ========== JSON canónico ==========


def test_canonical_json_sorts_keys_and_formats_floats():
    text = canonical_dumps({"b": 1.0 / 3.0, "a": [1, 2], "c": {"z": None, "y": True}})

    assert text == '{\n  "a": [1, 2],\n  "b": 0.333333333,\n  "c": {\n    "y": true,\n    "z": null\n  }\n}\n'


def test_canonical_json_special_floats():
    assert canonical_dumps([math.inf, -0.0, 2.5]) == '["inf", 0, 2.5]\n'


def test_canonical_json_is_stable():
    value = {"x": [0.1, 0.2], "name": "piña"}
    assert canonical_dumps(value) == canonical_dumps(json.loads(canonical_dumps(value)))


# ========== Escenas ==========


def test_malformed_json_reports_position():
    with pytest.raises(ParseError, match=r"escena\.json:2:\d+"):
        parse_scene('{\n  "workpieces": [,]\n}', source="escena.json")


def test_unknown_fields_are_rejected():
    with pytest.raises(ParseError, match="colour"):
        parse_scene(json.dumps({"workpieces": [{"id": "a", "voxels": [[0, 0, 0]], "colour": "red"}]}))


@pytest.mark.parametrize(
    "name, pieces",
    [("one_cube.json", 1), ("two_cubes.json", 2), ("soma3.json", 3), ("two_cantilevers.json", 2), ("soma4.json", 4), ("soma7.json", 7)],
)
def test_bundled_scenes_are_valid(scenes_dir, name, pieces):
    scene_file = load_scene(scenes_dir / name)

    assert len(scene_file.workpieces) == pieces
    assert validate_scene(scene_file) == []


def test_soma_cube_has_27_voxels(scenes_dir):
    scene_file = load_scene(scenes_dir / "soma7.json")
    counts = tuple(len(spec.voxels) for spec in scene_file.workpieces)

    assert sorted(counts) == [3, 4, 4, 4, 4, 4, 4]
    assert sum(counts) == 27


def test_scene_from_file_uses_default_density(scenes_dir):
    scene = scene_from_file(load_scene(scenes_dir / "one_cube.json"))
    assert scene.workpiece("cube").mass == pytest.approx(700.0 * VOXEL**3)


def test_missing_scene_file(tmp_path):
    with pytest.raises(PlanIOError):
        load_scene(tmp_path / "nada.json")


def test_every_problem_is_reported(tmp_path):
    path = _write_scene(
        tmp_path / "mala.json",
        [
            {"id": "a", "voxels": [[0, 0, 0]]},
            {"id": "a", "voxels": [[3, 0, 0]]},
            {"id": "b", "voxels": [[0, 0, 0]], "mass": -1.0},
        ],
        friction={"default_mu": -0.1},
    )

    with pytest.raises(SceneValidationError) as excinfo:
        load_scene(path)

    problems = excinfo.value.problems
    assert any("duplicado" in problem for problem in problems)
    assert any("mass" in problem for problem in problems)
    assert any("default_mu" in problem for problem in problems)


def test_interpenetrating_pieces(tmp_path):
    path = _write_scene(
        tmp_path / "solapadas.json",
        [{"id": "a", "voxels": [[0, 0, 0], [1, 0, 0]]}, {"id": "b", "voxels": [[1, 0, 0]]}],
    )

    with pytest.raises(SceneValidationError, match="interpenetran"):
        load_scene(path)


def test_voxels_or_mesh_but_not_both(tmp_path):
    path = _write_scene(tmp_path / "ambas.json", [{"id": "a", "voxels": [[0, 0, 0]], "mesh_path": "a.stl"}])

    with pytest.raises(SceneValidationError, match="exactamente uno"):
        load_scene(path)


def test_saved_scene_is_canonical(tmp_path, scenes_dir):
    first = tmp_path / "primera.json"
    second = tmp_path / "segunda.json"

    save_scene(load_scene(scenes_dir / "soma3.json"), first)
    save_scene(load_scene(first), second)

    assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")


def test_mesh_workpiece(tmp_path):
    box = trimesh.creation.box(extents=(0.05, 0.05, 0.05))
    box.apply_translation((0.0, 0.0, 0.025))
    box.export(str(tmp_path / "caja.stl"))
    path = _write_scene(tmp_path / "malla.json", [{"id": "caja", "mesh_path": "caja.stl"}])

    scene = scene_from_file(load_scene(path))
    piece = scene.workpiece("caja")

    assert piece.shape.volume == pytest.approx(0.05**3, rel=1e-6)
    assert piece.center_of_mass[2] == pytest.approx(0.025, abs=1e-7)


def test_missing_mesh_file(tmp_path):
    path = _write_scene(tmp_path / "sin_malla.json", [{"id": "caja", "mesh_path": "no_existe.stl"}])

    with pytest.raises(SceneValidationError, match="no existe"):
        load_scene(path)


# ========== Planes ==========


@pytest.fixture
def stacked_plan(scenes_dir):
    scene = scene_from_file(load_scene(scenes_dir / "two_cubes.json"))
    config = PlannerConfig()
    return scene, config, plan(scene, config)


def test_plan_round_trip(tmp_path, stacked_plan):
    _, config, result = stacked_plan
    path = tmp_path / "plan.json"

    save_plan(result, path, config)
    loaded = load_plan(path)

    assert loaded.order == ["bottom", "top"]
    assert loaded.score == pytest.approx(result.optimal.score, rel=1e-8)
    assert loaded.metadata.config_hash == config_hash(config)
    assert loaded.metadata.order_count == 2
    assert not loaded.metadata.used_assist
    assert [step.graspability for step in loaded.steps] == list(result.optimal.g_row)
    assert schema_errors(json.loads(path.read_text(encoding="utf-8"))) == []


def test_plan_with_matrices_matches_schema(soma3_scene):
    config = PlannerConfig(full_matrices=True)
    data = json.loads(dumps_plan(plan_to_file(plan(soma3_scene, config), config)))

    assert schema_errors(data) == []
    assert len(data["matrices"]["orders"]) == 6
    assert "inf" in data["matrices"]["S"][data["metadata"]["optimal_index"]]


def test_assisted_plan_records_held_pieces(soma3_scene):
    config = PlannerConfig()
    plan_file = plan_to_file(plan(soma3_scene, config), config)

    first = plan_file.steps[0]
    assert first.held == plan_file.order[0]
    assert first.held_pieces == [plan_file.order[0]]
    assert first.assisting_grasp is not None
    assert first.assisting_grasps == [first.assisting_grasp]
    assert plan_file.steps[-1].held_pieces == []


def test_saved_rows_reproduce_the_scores(tmp_path, soma3_scene):
    config = PlannerConfig(full_matrices=True)
    path = tmp_path / "plan.json"
    save_plan(plan(soma3_scene, config), path, config)
    loaded = load_plan(path)

    steps = loaded.steps
    recomputed = order_score(
        [step.stability for step in steps],
        [step.graspability for step in steps],
        [step.assemblability for step in steps],
        config.s_cap,
        loaded.metadata.assist_feasible,
    )
    assert recomputed == pytest.approx(loaded.score, rel=1e-8)

    matrices = loaded.matrices
    stored = matrices["scores"]
    for s_row, g_row, a_row, score in zip(matrices["S"], matrices["G"], matrices["A"], stored):
        # las filas con asistencia inviable se guardan con puntuación 0
        if score > 0:
            s_row = [float(s) for s in s_row]
            assert order_score(s_row, g_row, a_row, config.s_cap) == pytest.approx(score, rel=1e-8)
    assert stored[loaded.metadata.optimal_index] == max(stored)


def test_plan_bytes_do_not_depend_on_threads(soma3_scene):
    texts = {
        dumps_plan(plan_to_file(plan(soma3_scene, PlannerConfig(threads=threads)), PlannerConfig(threads=threads)))
        for threads in (1, 4)
    }
    assert len(texts) == 1


def test_corrupted_plan_is_rejected(tmp_path, stacked_plan):
    _, config, result = stacked_plan
    path = tmp_path / "plan.json"
    save_plan(result, path, config)

    data = json.loads(path.read_text(encoding="utf-8"))
    data["steps"][0]["graspability"] = -3
    path.write_text(json.dumps(data), encoding="utf-8")

    with pytest.raises(ParseError, match="graspability"):
        load_plan(path)


def test_truncated_plan_is_rejected(tmp_path):
    path = tmp_path / "plan.json"
    path.write_text('{"order": [', encoding="utf-8")

    with pytest.raises(ParseError):
        load_plan(path)


def test_missing_plan_file(tmp_path):
    with pytest.raises(PlanIOError):
        load_plan(tmp_path / "plan.json")


# ========== Exportación ==========


def _obj_groups(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    vertices = sum(1 for line in lines if line.startswith("v "))
    faces = [[int(index) for index in line.split()[1:]] for line in lines if line.startswith("f ")]
    groups = [line[2:] for line in lines if line.startswith("g ")]
    return vertices, faces, groups


def test_export_writes_one_obj_per_step(tmp_path, stacked_plan):
    scene, config, result = stacked_plan
    save_plan(result, tmp_path / "plan.json", config)

    written = export_steps(load_plan(tmp_path / "plan.json"), scene, tmp_path / "obj")

    assert [path.name for path in written] == ["step_1.obj", "step_2.obj"]
    _, _, first_groups = _obj_groups(written[0])
    vertices, faces, groups = _obj_groups(written[1])

    assert first_groups == ["incoming_bottom", "gripper"]
    assert groups == ["prefix_bottom", "incoming_top", "gripper"]
    assert all(1 <= index <= vertices for face in faces for index in face)


def test_export_retracts_the_incoming_piece(tmp_path, stacked_plan):
    scene, config, result = stacked_plan
    save_plan(result, tmp_path / "plan.json", config)

    written = export_steps(load_plan(tmp_path / "plan.json"), scene, tmp_path / "obj", retract_distance=0.1)

    lines = written[1].read_text(encoding="utf-8").splitlines()
    start = lines.index("g incoming_top")
    end = lines.index("g gripper")
    heights = [float(line.split()[3]) for line in lines[start + 1 : end] if line.startswith("v ")]
    # dirección de montaje (0, 0, −1): la pieza entrante queda 0.1 m más arriba
    assert min(heights) == pytest.approx(VOXEL + 0.1)


def _group_vertices(path, group):
    lines = path.read_text(encoding="utf-8").splitlines()
    start = lines.index(f"g {group}")
    block = []
    for line in lines[start + 1 :]:
        if line.startswith("g "):
            break
        if line.startswith("v "):
            block.append([float(c) for c in line.split()[1:]])
    return np.array(block)


def test_export_shows_the_hold_while_the_next_piece_arrives(tmp_path, scenes_dir):
    scene = scene_from_file(load_scene(scenes_dir / "soma3.json"))
    config = PlannerConfig()
    save_plan(plan(scene, config), tmp_path / "plan.json", config)
    plan_file = load_plan(tmp_path / "plan.json")

    written = export_steps(plan_file, scene, tmp_path / "obj")
    _, _, first_groups = _obj_groups(written[0])
    _, _, second_groups = _obj_groups(written[1])

    held = plan_file.steps[0].held_pieces
    assert len(written) == 3
    assert held == [plan_file.order[0]]
    assert not any(group.startswith("assist_gripper") for group in first_groups)
    assert f"assist_gripper_{held[0]}" in second_groups


def test_assisting_contacts_lie_on_the_drawn_held_piece(tmp_path, scenes_dir):
    scene = scene_from_file(load_scene(scenes_dir / "soma3.json"))
    config = PlannerConfig()
    save_plan(plan(scene, config), tmp_path / "plan.json", config)
    plan_file = load_plan(tmp_path / "plan.json")

    written = export_steps(plan_file, scene, tmp_path / "obj")

    checked = 0
    for k in range(1, len(written)):
        holding = plan_file.steps[k - 1]
        assert len(holding.assisting_grasps) == len(holding.held_pieces)
        for held, record in zip(holding.held_pieces, holding.assisting_grasps):
            drawn = _group_vertices(written[k], f"prefix_{held}")
            contacts = np.array(record.contact_pair)
            assert np.all(contacts >= drawn.min(axis=0) - 1e-9)
            assert np.all(contacts <= drawn.max(axis=0) + 1e-9)
            checked += 1
    assert checked > 0


def test_exported_prefix_matches_goal_poses(tmp_path, stacked_plan):
    scene, config, result = stacked_plan
    save_plan(result, tmp_path / "plan.json", config)

    written = export_steps(load_plan(tmp_path / "plan.json"), scene, tmp_path / "obj")

    lines = written[1].read_text(encoding="utf-8").splitlines()
    start = lines.index("g prefix_bottom")
    end = lines.index("g incoming_top")
    exported = np.array([[float(c) for c in line.split()[1:]] for line in lines[start + 1 : end] if line.startswith("v ")])
    np.testing.assert_allclose(exported, scene.workpiece("bottom").world_vertices, atol=1e-9)
