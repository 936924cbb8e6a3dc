import numpy as np
import pytest

from gcvsa.codebook import Codebook, cleanup
from gcvsa.core import GcVsaError, bind, cosine_similarity, random_symbol, unbind
from gcvsa.experiments import (
    EXAMPLE_TREE_A,
    EXAMPLE_TREE_B,
    FamilyTree,
    SceneItem,
    Trajectory,
    cached_geometry,
    displacement_codebook,
    encode_scene,
    encode_tree,
    generate_trajectory,
    home_vector,
    make_scene_space,
    path_vector,
    query_scene,
    run_family_tree_analogy,
    run_path_integration,
    run_scene_experiment,
    scene_item_correct,
)
from gcvsa.spatial import encode_position

EXAMPLE_ITEMS = [
    SceneItem("apple", 10, 12, 0),
    SceneItem("banana", 40, 8, 1),
    SceneItem("cherry", 25, 50, 2),
    SceneItem("grape", 55, 33, 3),
    SceneItem("lemon", 5, 60, 1),
]


@pytest.fixture(scope="module")
def space(cfg):
    return make_scene_space(cfg, np.random.default_rng(42))


# -- trajectories -------------------------------------------------------------


def test_trajectory_invariants():
    tr = generate_trajectory(steps=500, rng=np.random.default_rng(0))
    assert tr.positions.shape == (501, 2) and tr.velocities.shape == (500, 2)
    assert np.allclose(tr.positions[1:], tr.positions[:-1] + tr.velocities, atol=1e-12)
    assert tr.positions.min() >= 0.0 and tr.positions.max() <= 63.0
    assert np.all(np.hypot(*tr.velocities.T) <= 2.0 + 1e-12)
    assert np.allclose(tr.positions[0], [31.5, 31.5])


def test_trajectory_is_seeded():
    a = generate_trajectory(steps=50, rng=np.random.default_rng(3))
    b = generate_trajectory(steps=50, rng=np.random.default_rng(3))
    assert np.array_equal(a.positions, b.positions)


def lag1(v):
    return np.corrcoef(v[:-1], v[1:])[0, 1]


def test_velocity_autocorrelation_tracks_smoothing():
    big = (0, 1e6, 0, 1e6)
    for g in (0.0, 0.5, 0.8):
        tr = generate_trajectory(big, 10_000, np.random.default_rng(1), smoothing=g)
        assert lag1(tr.velocities[:, 0]) == pytest.approx(g, abs=0.05)


def test_noise_free_smooth_walk_is_straight():
    tr = generate_trajectory(
        steps=20, rng=np.random.default_rng(0), smoothing=0.999, noise=0.0,
        initial_velocity=(1.0, 0.5),
    )
    d = tr.positions - tr.positions[0]
    assert np.allclose(d[:, 0] * 0.5 - d[:, 1] * 1.0, 0.0)


def test_walls_reflect():
    tr = generate_trajectory(
        (0, 10, 0, 10), 40, np.random.default_rng(0), smoothing=0.999, noise=0.0,
        initial_velocity=(2.0, 0.0),
    )
    assert tr.positions[:, 0].max() <= 10.0
    assert np.any(tr.velocities[:, 0] < 0)


def test_trajectory_validation():
    with pytest.raises(GcVsaError):
        generate_trajectory(steps=0)
    with pytest.raises(GcVsaError):
        generate_trajectory(smoothing=1.0)
    with pytest.raises(GcVsaError):
        generate_trajectory(start=(100, 0))


# -- path integration ---------------------------------------------------------


def test_standing_still_has_zero_error(cfg):
    tr = Trajectory(np.tile([20.0, 30.0], (11, 1)), np.zeros((10, 2)))
    res = run_path_integration(cfg, trajectory=tr)
    assert res.mse == 0.0
    assert np.all(res.decoded == [20, 30])


def test_default_run_tracks_position(cfg):
    res = run_path_integration(cfg, seed=5)
    assert res.mse < 0.5
    assert set(res.similarity_maps) == {0, 50, 100}
    assert res.similarity_maps[0].shape == (64, 64)


def test_home_vector_points_back_to_start(cfg):
    res = run_path_integration(cfg, seed=2)
    cb = displacement_codebook(cfg)
    home = np.array(home_vector(res.final_state, res.start_state, cb), float)
    true = res.trajectory.positions[-1] - res.trajectory.positions[0]
    assert np.all(np.abs(home - true) <= 0.5 + 1e-9)


def test_closed_loop_returns_to_start(cfg):
    geom = cached_geometry(cfg)
    rng = np.random.default_rng(4)
    steps = rng.normal(size=(30, 2))
    steps = np.vstack([steps, -steps.sum(axis=0)])
    s0 = encode_position((30.0, 30.0), geom)
    s = s0
    for d in steps:
        s = bind(s, encode_position(d, geom))
    assert 1.0 - cosine_similarity(s, s0) < 1e-6


# -- scenes -------------------------------------------------------------------


def test_single_item_scene_decodes_exactly(space):
    item = SceneItem("cherry", 17, 42, 2)
    scene = encode_scene([item], space)
    ans = query_scene(scene, space, {"identity": "cherry"})
    assert scene_item_correct(item, ans)
    assert ans.confidence == pytest.approx(1.0)
    residual = unbind(scene, space.identity["cherry"])
    probe = unbind(unbind(residual, space.y[42]), space.t[2])
    assert cleanup(space.x, probe) == (17, pytest.approx(1.0))


def test_every_scene_object_is_recovered(space):
    scene = encode_scene(EXAMPLE_ITEMS, space)
    for item in EXAMPLE_ITEMS:
        ans = query_scene(scene, space, {"identity": item.identity})
        assert scene_item_correct(item, ans), item
        assert not ans.low_confidence


def test_space_time_cue_returns_identity(space):
    scene = encode_scene(EXAMPLE_ITEMS, space)
    for item in EXAMPLE_ITEMS:
        ans = query_scene(scene, space, {"x": item.x, "y": item.y, "t": item.t})
        assert ans.features["identity"] == item.identity


def test_full_cue_is_confirmed(space):
    scene = encode_scene(EXAMPLE_ITEMS, space)
    item = EXAMPLE_ITEMS[3]
    ans = query_scene(scene, space, vars(item))
    assert not ans.low_confidence and ans.state is None


def test_bundling_order_does_not_matter(space):
    a = encode_scene(EXAMPLE_ITEMS, space)
    b = encode_scene(EXAMPLE_ITEMS[::-1], space)
    assert a.allclose(b, atol=1e-12)
    for item in EXAMPLE_ITEMS:
        qa = query_scene(a, space, {"identity": item.identity})
        qb = query_scene(b, space, {"identity": item.identity})
        assert qa.features == qb.features


def test_absent_identity_is_flagged(cfg):
    for seed in range(10):
        res = run_scene_experiment(cfg, query={"identity": "mango"}, seed=seed)
        assert res["answers"][0].low_confidence


def test_scene_validation(space):
    with pytest.raises(GcVsaError):
        encode_scene([], space)
    with pytest.raises(GcVsaError):
        encode_scene([SceneItem("durian", 1, 1, 1)], space)
    with pytest.raises(GcVsaError):
        encode_scene([SceneItem("apple", 99, 1, 1)], space)
    scene = encode_scene(EXAMPLE_ITEMS, space)
    with pytest.raises(GcVsaError):
        query_scene(scene, space, {"colour": "red"})
    with pytest.raises(GcVsaError):
        query_scene(scene, space, {"identity": "durian"})


def test_seeded_scene_experiment_reports_traces(cfg):
    res = run_scene_experiment(cfg, seed=1)
    assert len(res["answers"]) == 5
    for item, ans in zip(res["items"], res["answers"]):
        assert scene_item_correct(item, ans)
        assert ans.state.iterations == len(ans.state.trace) <= 50


# -- family trees -------------------------------------------------------------


def test_tree_shape_is_validated():
    with pytest.raises(GcVsaError):
        FamilyTree({"L": "Bob"})
    with pytest.raises(GcVsaError):
        FamilyTree({"": "A", "LL": "B"})
    with pytest.raises(GcVsaError):
        FamilyTree({"": "A", "X": "B"})
    with pytest.raises(GcVsaError):
        FamilyTree({"": "A", "L": "A"})


def test_root_only_tree_is_the_name(cfg, rng):
    names = Codebook.from_items([("Solo", random_symbol(cfg, rng))])
    dirs = {"L": random_symbol(cfg, rng), "R": random_symbol(cfg, rng)}
    assert encode_tree(FamilyTree({"": "Solo"}), names, dirs).allclose(names["Solo"])


def test_depth_permutation_separates_mirrored_paths(cfg, rng):
    dirs = {"L": random_symbol(cfg, rng), "R": random_symbol(cfg, rng)}
    lr, rl = path_vector("LR", dirs), path_vector("RL", dirs)
    assert cosine_similarity(lr, rl) < 0.2
    book = Codebook.from_items([("LR", lr), ("RL", rl), ("LL", path_vector("LL", dirs))])
    assert cleanup(book, lr)[0] == "LR" and cleanup(book, rl)[0] == "RL"
    # without the permutation the two addresses coincide
    assert bind(dirs["L"], dirs["R"]).allclose(bind(dirs["R"], dirs["L"]), atol=1e-12)


def test_example_tree_analogy(cfg):
    ta, tb = FamilyTree(EXAMPLE_TREE_A), FamilyTree(EXAMPLE_TREE_B)
    res = run_family_tree_analogy(ta, tb, ["Charles", "Alice"], cfg, seed=0)
    assert [r.answer for r in res] == ["Harry", "Fred"]
    assert len(res[0].profile) == 5
    assert res[0].similarity == max(s for _, s in res[0].profile)


def test_self_analogy_is_identity(cfg):
    t = FamilyTree(EXAMPLE_TREE_A)
    for r in run_family_tree_analogy(t, t, t.names, cfg, seed=3):
        assert r.answer == r.probe


def test_analogy_validation(cfg):
    ta, tb = FamilyTree(EXAMPLE_TREE_A), FamilyTree(EXAMPLE_TREE_B)
    with pytest.raises(GcVsaError):
        run_family_tree_analogy(ta, tb, "Harry", cfg)
    with pytest.raises(GcVsaError):
        run_family_tree_analogy(ta, FamilyTree({"": "X", "L": "Y"}), "Alice", cfg)

