import copy
import json
import math
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_grid, room_doc, room_scenario
from oracles import ray_cells, segment_hits_obstacle
from frontiernav.world import (
    Action,
    ActionSpec,
    Environment,
    Pose,
    ScenarioError,
    SensorConfig,
    load_scenario,
    observe,
    parse_scenario,
    step,
    visible_cells,
)

SPEC = ActionSpec()


def env_from(obstacle, h=0.25):
    room = np.where(obstacle, -1, 0).astype(np.int16)
    obj = np.full(obstacle.shape, -1, dtype=np.int16)
    return Environment(h, obstacle.copy(), room, obj, ("hall",), ())


# ---------------------------------------------------------------- kinematics

def test_turn_left_rotates_only():
    sc = room_scenario(objects=[("mug", (5, 5))])
    p, moved = step(sc.env, Pose(1.0, 1.0, 0.0), Action.LEFT, SPEC)
    assert (p.x, p.y) == (1.0, 1.0)
    assert p.theta == pytest.approx(math.pi / 6)
    assert not moved


def test_turn_right_wraps_into_range():
    sc = room_scenario(objects=[("mug", (5, 5))])
    p, _ = step(sc.env, Pose(1.0, 1.0, 0.0), Action.RIGHT, SPEC)
    assert p.theta == pytest.approx(2 * math.pi - math.pi / 6)


def test_blocked_forward_is_noop():
    sc = room_scenario(objects=[("mug", (5, 5))])
    # wall face at x = 2.25 for a 10-wide room; stand 0.1 m from it
    pose = Pose(2.15, 1.0, 0.0)
    p, moved = step(sc.env, pose, Action.FORWARD, SPEC)
    assert p == pose and not moved


def test_four_forward_steps_move_one_meter():
    sc = room_scenario(objects=[("mug", (8, 8))])
    pose = Pose(0.375, 1.0, 0.0)
    for _ in range(4):
        pose, moved = step(sc.env, pose, Action.FORWARD, SPEC)
        assert moved
    assert pose.x == pytest.approx(1.375)
    assert pose.y == 1.0


def test_stop_keeps_pose():
    sc = room_scenario(objects=[("mug", (5, 5))])
    pose = Pose(1.0, 1.0, 0.3)
    assert step(sc.env, pose, Action.STOP, SPEC) == (pose, False)


def test_diagonal_move_cannot_cut_a_corner():
    # obstacle at (2, 2); moving from the centre of (1, 1) at 45 degrees would
    # clip that cell's corner region, so the move must be refused
    obstacle = np.zeros((5, 5), bool)
    obstacle[0, :] = obstacle[-1, :] = obstacle[:, 0] = obstacle[:, -1] = True
    obstacle[2, 2] = True
    env = env_from(obstacle, h=1.0)
    p, moved = step(env, Pose(1.9, 1.9, math.pi / 4), Action.FORWARD, ActionSpec(forward_step=0.5))
    assert not moved and p == Pose(1.9, 1.9, math.pi / 4)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), actions=st.lists(st.sampled_from(list(Action)), max_size=60))
def test_containment_under_random_actions(seed, actions):
    rng = np.random.default_rng(seed)
    obstacle = random_grid(rng, (12, 12), 0.2)
    env = env_from(obstacle)
    free = np.argwhere(~obstacle)
    r, c = free[rng.integers(len(free))]
    pose = Pose((c + rng.random()) * 0.25, (r + rng.random()) * 0.25, rng.random() * 2 * math.pi)
    for a in actions:
        new, moved = step(env, pose, a, SPEC)
        assert env.pose_valid(new)
        if moved:
            assert not segment_hits_obstacle(obstacle, 0.25, pose.x, pose.y, new.x, new.y)
        pose = new


# ---------------------------------------------------------------- scenario loading

def test_parse_builds_target_positions():
    sc = room_scenario(objects=[("mug", (2, 3)), ("bowl", (4, 4)), ("mug", (6, 7))])
    assert sc.env.target_positions["mug"] == ((2, 3), (6, 7))
    scan = {(int(r), int(c)) for r, c in np.argwhere(sc.env.obj >= 0)
            if sc.env.object_label((r, c)) == "mug"}
    assert set(sc.env.target_positions["mug"]) == scan


def test_environment_arrays_are_read_only():
    sc = room_scenario(objects=[("mug", (2, 3))])
    with pytest.raises(ValueError):
        sc.env.obstacle[1, 1] = True


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["grid"].__setitem__(0, "." + d["grid"][0][1:]), "grid[0]"),
    (lambda d: d["grid"].__setitem__(2, d["grid"][2][:3] + "x" + d["grid"][2][4:]), "grid[2]"),
    (lambda d: d.__setitem__("rooms", []), "rooms"),
    (lambda d: d["objects"].append({"label": "cup", "x": 0, "y": 0}), "objects[1]"),
    (lambda d: d.__setitem__("target", "sofa"), "target"),
    (lambda d: d["start"].__setitem__("x", 0.1), "start"),
    (lambda d: d.pop("cell_size"), "cell_size"),
    (lambda d: d["rooms"][0]["rects"].__setitem__(0, [1, 1, 99, 2]), "rooms[0].rects[0]"),
])
def test_loader_names_the_bad_field(mutate, field):
    doc = room_doc(objects=[("mug", (4, 4))])
    mutate(doc)
    with pytest.raises(ScenarioError, match="^" + re.escape(field)):
        parse_scenario(doc)


def test_overlapping_room_labels_rejected():
    doc = room_doc(objects=[("mug", (4, 4))])
    doc["rooms"].append({"label": "bathroom", "rects": [[2, 2, 3, 3]]})
    with pytest.raises(ScenarioError, match="already labelled"):
        parse_scenario(doc)


def test_load_reports_json_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n"grid": [\n')
    with pytest.raises(ScenarioError, match="line"):
        load_scenario(p)


def test_load_round_trip(tmp_path):
    doc = room_doc(objects=[("mug", (4, 4))])
    p = tmp_path / "room.json"
    p.write_text(json.dumps(doc))
    sc = load_scenario(p)
    assert sc.name == "room"
    assert sc.target == "mug"
    assert sc.start == Pose(0.375, 0.375, 0.0)


# ---------------------------------------------------------------- sensing

def test_center_ray_depth_in_corridor():
    # agent on the boundary between columns 3 and 4, wall face at x = 1.75
    obstacle = np.zeros((3, 10), bool)
    obstacle[0, :] = obstacle[-1, :] = True
    obstacle[:, 0] = obstacle[:, 7:] = True
    env = env_from(obstacle)
    sensor = SensorConfig(n_rays=61)
    depths, _ = visible_cells(env, Pose(1.0, 0.375, 0.0), sensor)
    assert depths[30] == pytest.approx(0.75)


def test_noiseless_detector_reports_truth():
    sc = parse_scenario({**room_doc(objects=[("mug", (4, 5)), ("bowl", (6, 5))]),
                         "rooms": [{"label": "kitchen", "rects": [[1, 1, 4, 8]]},
                                   {"label": "office", "rects": [[5, 1, 8, 8]]}]})
    sensor = SensorConfig(det_tp=1.0, det_fp=0.0, room_acc=1.0)
    obs = observe(sc.env, Pose(0.375, 1.25, 0.0), sensor, np.random.default_rng(3))
    free_seen = {c for c, s in obs.visible_cells if s == "free"}
    expected_objects = {(sc.env.object_label(c), c) for c in free_seen if sc.env.object_label(c)}
    assert set(obs.object_reports) == expected_objects
    assert ("mug", (4, 5)) in expected_objects
    assert set(obs.room_reports) == {(sc.env.room_label(c), c) for c in free_seen}


def test_detection_rate_matches_det_tp():
    # [DERIVED] report frequency of one always-visible object converges to det_tp
    sc = room_scenario(objects=[("mug", (4, 5))])
    sensor = SensorConfig(det_tp=0.95, det_fp=0.0)
    rng = np.random.default_rng(2024)
    pose = Pose(0.375, 1.125, 0.0)
    hits = sum(any(lab == "mug" for lab, _ in observe(sc.env, pose, sensor, rng).object_reports)
               for _ in range(10_000))
    assert abs(hits / 10_000 - 0.95) <= 0.01


def test_false_positive_rate_matches_det_fp():
    sc = room_scenario(objects=[("mug", (1, 8))])
    sensor = SensorConfig(det_tp=1.0, det_fp=0.2)
    rng = np.random.default_rng(7)
    pose = Pose(0.375, 0.375, math.pi / 2)  # facing +y, mug out of view
    n = 5000
    fps = sum(bool(observe(sc.env, pose, sensor, rng).object_reports) for _ in range(n))
    assert abs(fps / n - 0.2) <= 0.02


def test_room_accuracy_rate():
    sc = parse_scenario({**room_doc(objects=[("mug", (8, 8))]),
                         "rooms": [{"label": "kitchen", "rects": [[1, 1, 8, 4]]},
                                   {"label": "office", "rects": [[1, 5, 8, 8]]}]})
    sensor = SensorConfig(room_acc=0.8)
    rng = np.random.default_rng(11)
    right = total = 0
    for _ in range(400):
        obs = observe(sc.env, Pose(0.375, 1.0, 0.0), sensor, rng)
        right += sum(lab == sc.env.room_label(c) for lab, c in obs.room_reports)
        total += len(obs.room_reports)
    assert abs(right / total - 0.8) <= 0.01


def test_observe_is_deterministic_per_rng_state():
    sc = room_scenario(objects=[("mug", (4, 5))])
    a = observe(sc.env, Pose(1.0, 1.0, 0.2), SensorConfig(), np.random.default_rng(5))
    b = observe(sc.env, Pose(1.0, 1.0, 0.2), SensorConfig(), np.random.default_rng(5))
    assert a == b


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_visible_cells_match_slab_oracle(seed):
    """Every ray's cells, re-derived by exact slab intersection, give the same set."""
    rng = np.random.default_rng(seed)
    obstacle = random_grid(rng, (14, 14), 0.15)
    env = env_from(obstacle)
    free = np.argwhere(~obstacle)
    r, c = free[rng.integers(len(free))]
    pose = Pose((c + 0.05 + 0.9 * rng.random()) * 0.25, (r + 0.05 + 0.9 * rng.random()) * 0.25,
                rng.random() * 2 * math.pi)
    sensor = SensorConfig(n_rays=9, max_range=2.0)
    _, cells = visible_cells(env, pose, sensor)
    expected = set()
    for a in sensor.ray_angles(pose.theta):
        expected.update(ray_cells(obstacle, 0.25, pose.x, pose.y, a, sensor.max_range))
    assert set(cells) == expected


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_reported_cells_inside_range_and_cone(seed):
    rng = np.random.default_rng(seed)
    sc = room_scenario(rows=16, cols=16, objects=[("mug", (8, 8))])
    pose = Pose(0.25 + 3.5 * rng.random(), 0.25 + 3.5 * rng.random(), rng.random() * 2 * math.pi)
    sensor = SensorConfig(max_range=2.0, det_fp=0.5)
    obs = observe(sc.env, pose, sensor, rng)
    h = 0.25
    cells = {c for c, _ in obs.visible_cells} | {c for _, c in obs.object_reports} \
        | {c for _, c in obs.room_reports}
    for r, c in cells:
        # the nearest point of the cell to the pose is within range
        nx = min(max(pose.x, c * h), (c + 1) * h)
        ny = min(max(pose.y, r * h), (r + 1) * h)
        assert math.hypot(nx - pose.x, ny - pose.y) <= sensor.max_range + 1e-9
    assert all(d <= sensor.max_range for d in obs.depth)


def test_sensor_config_validation():
    with pytest.raises(ValueError):
        SensorConfig(det_tp=1.5)
    with pytest.raises(ValueError):
        SensorConfig(n_rays=2)
    with pytest.raises(ValueError):
        SensorConfig(max_range=0)
    with pytest.raises(ValueError):
        ActionSpec(turn_angle=4.0)
    with pytest.raises(ValueError):
        ActionSpec(forward_step=0)


def test_scenario_doc_not_mutated_by_parse():
    doc = room_doc(objects=[("mug", (4, 4))])
    before = copy.deepcopy(doc)
    parse_scenario(doc)
    assert doc == before
