import json

import pytest

from gcvsa import cli
from gcvsa.export import read_pgm
from gcvsa.spatial import hexagonal_signature


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


def metrics(path):
    return json.loads((path / "metrics.json").read_text())


def test_path_integration_writes_contract_files(tmp_path):
    assert run(tmp_path, "path-integration", "--seed", "7", "--steps", "30") == 0
    m = metrics(tmp_path)
    assert "mse" in m and m["runs"][0]["seed"] == 7
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x,y,x_hat,y_hat"
    assert sorted(p.name for p in tmp_path.glob("map_*.pgm")) == [
        "map_t000.pgm", "map_t015.pgm", "map_t030.pgm"
    ]
    cfg = json.loads((tmp_path / "config.json").read_text())
    assert cfg["steps"] == 30 and cfg["smoothing"] == 0.8 and cfg["n_theta"] == 23


def test_family_tree_answer(tmp_path):
    assert run(tmp_path, "family-tree", "--probe", "Charles") == 0
    assert metrics(tmp_path)["answer"] == "Harry"
    assert '"answer": "Harry"' in (tmp_path / "metrics.json").read_text()


def test_kernel_emits_hexagonal_field(tmp_path):
    assert run(tmp_path, "kernel", "--scale", "0", "--orientation", "0") == 0
    field = read_pgm(tmp_path / "receptive_field.pgm").astype(float)
    assert field.shape == (128, 128)
    assert hexagonal_signature(field).radial_spread < 0.05
    assert metrics(tmp_path)["runs"][0]["hex_radial_spread"] < 0.05
    assert (tmp_path / "similarity_kernel.pgm").exists()


def test_rotate_emits_profile(tmp_path):
    assert run(tmp_path, "rotate", "--x", "5", "--y", "0", "--angle", "90") == 0
    r = metrics(tmp_path)["runs"][0]
    assert r["position_error"] <= 1.0
    assert abs(r["decoded_angle_deg"] - 90) <= 360 / 23
    assert len((tmp_path / "angle_profile.csv").read_text().splitlines()) == 24


def test_scene_trace(tmp_path):
    assert run(tmp_path, "scene", "--seed", "2") == 0
    m = metrics(tmp_path)
    assert m["accuracy"] == 1.0
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0] == "query,iteration,attempt,factor,key,similarity"
    assert len(lines) > 1


def test_scene_query_option(tmp_path):
    assert run(tmp_path, "scene", "--query", "identity=mango") == 0
    ans = metrics(tmp_path)["runs"][0]["answers"][0]
    assert ans["low_confidence"] is True


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"steps": 12, "seed": 3, "noise": 0.5}))
    out = tmp_path / "o"
    assert cli.main(["path-integration", "--config", str(conf), "--steps", "8", "--out", str(out)]) == 0
    resolved = json.loads((out / "config.json").read_text())
    assert resolved["steps"] == 8 and resolved["seed"] == 3 and resolved["noise"] == 0.5


def test_provenance_copy_reproduces_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["family-tree", "--seed", "4", "--out", str(a)]) == 0
    assert cli.main(["family-tree", "--config", str(a / "config.json"), "--out", str(b)]) == 0
    assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()


def test_seed_sweep_with_workers(tmp_path):
    assert run(tmp_path, "path-integration", "--seeds", "2", "--jobs", "2", "--steps", "10") == 0
    m = metrics(tmp_path)
    assert [r["seed"] for r in m["runs"]] == [0, 1]
    assert (tmp_path / "seed_1" / "trajectory.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        [],
        ["scene", "--items", "many"],
        ["scene", "--n", "2"],
        ["scene", "--query", "colour=red"],
        ["family-tree", "--probe", "Nobody"],
        ["kernel", "--scale", "9"],
        ["path-integration", "--seeds", "0"],
    ],
)
def test_invalid_input_exits_one(tmp_path, capsys, argv):
    assert cli.main([*argv, "--out", str(tmp_path)] if argv and argv[0] != "bogus" else argv) == 1
    assert capsys.readouterr().err.strip()


def test_invalid_config_files_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    for text in ("{not json", "[1, 2]", '{"unknown_key": 1}', '{"steps": "ten"}'):
        bad.write_text(text)
        assert cli.main(["path-integration", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert cli.main(["path-integration", "--config", str(tmp_path / "missing.json")]) == 1
    assert "error" in capsys.readouterr().err


def test_runtime_failure_exits_two(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["family-tree", "--out", str(blocker / "sub")]) == 2
    assert "runtime error" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    assert "path-integration" in capsys.readouterr().out
