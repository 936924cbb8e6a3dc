"""Command-line entry point: config resolution, seed sweeps and artifact output.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import experiments as ex
from .codebook import cleanup
from .core import GcVsaError, GridConfig
from .export import write_grid_csv, write_json, write_pgm, write_rows
from .rotation import angle_profile, decode_angle, rotate
from .spatial import (
    encode_position,
    hexagonal_signature,
    lattice_axes,
    position_codebook,
    receptive_field,
    similarity_map,
)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

GRID_DEFAULTS = {"n": 3, "n_theta": 23, "n_s": 5, "s_min": 4.0, "growth": 1.42, "grid_seed": 0}
COMMON_DEFAULTS = {"seed": 0, "seeds": 1, "jobs": 1}

EXPERIMENT_DEFAULTS = {
    "path-integration": {
        "steps": 100,
        "arena": [0.0, 63.0, 0.0, 63.0],
        "smoothing": 0.8,
        "max_speed": 2.0,
        "noise": 1.0,
    },
    "scene": {"items": 5, "query": "", "max_iter": 100, "width": 64, "height": 64, "times": 4},
    "family-tree": {
        "probe": "",
        "tree_a": "Alice,L:Bob,R:Charles,LL:Dora,LR:Emil",
        "tree_b": "Fred,L:George,R:Harry,LL:Igor,LR:James",
    },
    "kernel": {"scale": 0, "orientation": 0, "neuron": "0,0,0", "size": 128},
    "rotate": {"x": 6.0, "y": 0.0, "angle": 90.0, "size": 32},
}


OPTION_HELP = {
    "n": "side length of each cubic module",
    "n_theta": "number of orientations per scale",
    "n_s": "number of scales",
    "s_min": "finest grid period in pixels",
    "growth": "ratio between successive scales",
    "grid_seed": "seed for module phase offsets",
    "seed": "experiment seed, first of a sweep",
    "seeds": "number of consecutive seeds to run",
    "jobs": "worker processes for seed sweeps",
    "steps": "trajectory length",
    "arena": "x_min x_max y_min y_max in pixels",
    "smoothing": "velocity autocorrelation in [0, 1)",
    "max_speed": "speed cap in pixels per step",
    "noise": "velocity noise scale",
    "items": "objects in the scene",
    "query": "cue such as 'identity=grape' or 'x=3,y=4,t=1'; empty queries every object",
    "max_iter": "resonator iteration budget",
    "width": "x codebook size",
    "height": "y codebook size",
    "times": "t codebook size",
    "probe": "name in the first tree; empty probes every name",
    "tree_a": "first tree as 'root,L:name,R:name,...'",
    "tree_b": "second tree, same format",
    "scale": "scale index of the neuron",
    "orientation": "orientation index of the neuron",
    "neuron": "cell index inside the module as 'i,j,k'",
    "size": "side of the square window in pixels",
    "x": "x coordinate of the point",
    "y": "y coordinate of the point",
    "angle": "rotation angle in degrees",
}


class InvalidInput(GcVsaError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sub = self.prog.partition(" ")[2]
        raise InvalidInput(f"{sub}: {message}" if sub else message)


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_options(p: argparse.ArgumentParser, defaults: dict) -> None:
    # every flag defaults to None so file values are only overridden when given
    for key, val in defaults.items():
        shown = " ".join(map(str, val)) if isinstance(val, list) else repr(val)
        text = f"{OPTION_HELP[key]} (default {shown})"
        if isinstance(val, list):
            p.add_argument(_flag(key), type=float, nargs=len(val), default=None, help=text)
        elif isinstance(val, bool):
            p.add_argument(_flag(key), type=int, choices=(0, 1), default=None, help=text)
        else:
            p.add_argument(_flag(key), type=type(val), default=None, help=text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gcvsa", description="Grid-cell vector symbolic architecture experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "path-integration": "track a random trajectory by repeated binding",
        "scene": "encode a multi-object scene and query it",
        "family-tree": "map names between two trees by analogy",
        "kernel": "single-neuron receptive field and similarity kernel",
        "rotate": "rotate an encoded point and read the angle back",
    }
    for name, defaults in EXPERIMENT_DEFAULTS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", type=Path, help="flat JSON object of option values")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default out)")
        _add_options(p, {**GRID_DEFAULTS, **COMMON_DEFAULTS, **defaults})
    return parser


def _coerce(key: str, value, default):
    if isinstance(default, list):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise InvalidInput(f"{key} must be a list of {len(default)} numbers")
        return [float(_coerce(key, v, 0.0)) for v in value]
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise InvalidInput(f"{key} must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise InvalidInput(f"{key} must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidInput(f"{key} must be a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise InvalidInput(f"{key} must be a string, got {value!r}")
    return value


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    defaults = {**GRID_DEFAULTS, **COMMON_DEFAULTS, **EXPERIMENT_DEFAULTS[command]}
    resolved = {k: (list(v) if isinstance(v, list) else v) for k, v in defaults.items()}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as e:
            raise InvalidInput(f"cannot read config {args.config}: {e.strerror}") from e
        except json.JSONDecodeError as e:
            raise InvalidInput(f"config {args.config} is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise InvalidInput("config file must hold a flat JSON object")
        raw.pop("experiment", None)
        unknown = sorted(set(raw) - set(defaults))
        if unknown:
            raise InvalidInput(f"unknown config keys for {command}: {', '.join(unknown)}")
        for k, v in raw.items():
            resolved[k] = _coerce(k, v, defaults[k])
    for k in defaults:
        v = getattr(args, k, None)
        if v is not None:
            resolved[k] = _coerce(k, list(v) if isinstance(v, list) else v, defaults[k])
    if resolved["seeds"] < 1:
        raise InvalidInput("seeds must be at least 1")
    if resolved["jobs"] < 1:
        raise InvalidInput("jobs must be at least 1")
    grid_config(resolved)  # validates the grid fields
    return {"experiment": command, **resolved}


def grid_config(c: dict) -> GridConfig:
    return GridConfig(
        n=c["n"], n_theta=c["n_theta"], n_s=c["n_s"], s_min=c["s_min"],
        growth=c["growth"], seed=c["grid_seed"],
    )


def _key_json(k):
    return list(k) if isinstance(k, tuple) else k


# -- experiment runners (top level so worker processes can pickle them) -------


def _run_path_integration(c: dict, seed: int, out: Path) -> dict:
    cfg = grid_config(c)
    res = ex.run_path_integration(
        cfg, tuple(c["arena"]), c["steps"], seed, c["smoothing"], c["max_speed"], c["noise"]
    )
    home = ex.home_vector(
        res.final_state, res.start_state, ex.displacement_codebook(cfg, tuple(c["arena"]))
    )
    pos = res.trajectory.positions
    write_rows(
        out / "trajectory.csv",
        ["t", "x", "y", "x_hat", "y_hat"],
        [(t, p[0], p[1], d[0], d[1]) for t, (p, d) in enumerate(zip(pos, res.decoded))],
    )
    for t, m in sorted(res.similarity_maps.items()):
        write_pgm(out / f"map_t{t:03d}.pgm", m)
    errs = np.sum((res.decoded[1:] - pos[1:]) ** 2, axis=1)
    return {
        "seed": seed,
        "mse": res.mse,
        "max_sq_error": float(errs.max()),
        "home_vector": [float(home[0]), float(home[1])],
        "true_home_vector": [float(v) for v in pos[-1] - pos[0]],
    }


def _parse_query(text: str) -> dict | None:
    if not text:
        return None
    q = {}
    for part in text.split(","):
        if "=" not in part:
            raise InvalidInput(f"query part {part!r} is not feature=value")
        k, v = (s.strip() for s in part.split("=", 1))
        if k not in ex.FEATURES:
            raise InvalidInput(f"unknown query feature {k!r}")
        if k == "identity":
            q[k] = v
        else:
            try:
                q[k] = int(v)
            except ValueError as e:
                raise InvalidInput(f"query {k} must be an integer, got {v!r}") from e
    return q


def _answer_json(a: ex.SceneAnswer) -> dict:
    d = {
        "features": {k: _key_json(v) for k, v in sorted(a.features.items())},
        "confidence": a.confidence,
        "low_confidence": a.low_confidence,
    }
    if a.state is not None:
        d.update(iterations=a.state.iterations, attempts=a.state.attempts,
                 converged=a.state.converged)
    return d


def _run_scene(c: dict, seed: int, out: Path) -> dict:
    cfg = grid_config(c)
    query = _parse_query(c["query"])
    rng = np.random.default_rng(seed)
    names = ex.DEFAULT_OBJECTS
    if query and query.get("identity") and query["identity"] not in names:
        names = names + (query["identity"],)
    space = ex.make_scene_space(cfg, rng, names, c["width"], c["height"], c["times"])
    items = ex.random_scene(space, rng, c["items"])
    scene = ex.encode_scene(items, space)
    queries = [query] if query else [{"identity": it.identity} for it in items]
    answers = [ex.query_scene(scene, space, q, max_iter=c["max_iter"]) for q in queries]
    rows = []
    for qi, (q, a) in enumerate(zip(queries, answers)):
        if a.state is None:
            continue
        unknown = [f for f in ex.FEATURES if f not in q]
        cbs = [space.codebook(f) for f in unknown]
        for t, att, f, key, s in a.state.trace_rows(cbs):
            rows.append((qi, t, att, unknown[f], _key_json(key), s))
    write_rows(out / "trace.csv", ["query", "iteration", "attempt", "factor", "key", "similarity"], rows)
    result = {
        "seed": seed,
        "items": [vars(it) for it in items],
        "queries": queries,
        "answers": [_answer_json(a) for a in answers],
    }
    if not query:
        correct = [ex.scene_item_correct(it, a) for it, a in zip(items, answers)]
        iters = [a.state.iterations if a.state else 0 for a in answers]
        result.update(
            accuracy=float(np.mean(correct)),
            all_correct=all(correct),
            max_iterations=max(iters),
        )
    return result


def parse_tree(text: str) -> ex.FamilyTree:
    nodes = {}
    for part in text.split(","):
        part = part.strip()
        path, name = part.split(":", 1) if ":" in part else ("", part)
        path, name = path.strip(), name.strip()
        if not name:
            raise InvalidInput(f"tree entry {part!r} has no name")
        if path in nodes:
            raise InvalidInput(f"tree path {path!r} given twice")
        nodes[path] = name
    return ex.FamilyTree(nodes)


def _run_family_tree(c: dict, seed: int, out: Path) -> dict:
    ta, tb = parse_tree(c["tree_a"]), parse_tree(c["tree_b"])
    probes = [p.strip() for p in c["probe"].split(",") if p.strip()] or ta.names
    res = ex.run_family_tree_analogy(ta, tb, probes, grid_config(c), seed)
    write_rows(
        out / "profile.csv",
        ["probe", "candidate", "similarity"],
        [(r.probe, k, s) for r in res for k, s in r.profile],
    )
    return {
        "seed": seed,
        "answers": {r.probe: r.answer for r in res},
        "similarities": {r.probe: r.similarity for r in res},
    }


def _run_kernel(c: dict, seed: int, out: Path) -> dict:
    cfg = grid_config(c)
    geom = ex.cached_geometry(cfg)
    try:
        neuron = [int(v) for v in c["neuron"].split(",")]
    except ValueError as e:
        raise InvalidInput(f"neuron must be three comma-separated integers: {c['neuron']!r}") from e
    if len(neuron) != 3:
        raise InvalidInput("neuron needs exactly three indices")
    half = c["size"] // 2
    extent = (-half, c["size"] - half - 1, -half, c["size"] - half - 1)
    xs, ys = lattice_axes(extent, 1.0)
    field = receptive_field((c["scale"], c["orientation"], *neuron), extent, 1.0, geom)
    cb = position_codebook(extent, 1.0, geom)
    kern = similarity_map(encode_position((0.0, 0.0), geom), cb)
    write_pgm(out / "receptive_field.pgm", field)
    write_grid_csv(out / "receptive_field.csv", field, xs, ys)
    write_pgm(out / "similarity_kernel.pgm", kern)
    write_grid_csv(out / "similarity_kernel.csv", kern, xs, ys)
    metrics = {
        "seed": seed,
        "scale_px": float(geom.scales[c["scale"]]),
        "orientation_rad": float(geom.orientations[c["scale"], c["orientation"]]),
        "field_max": float(field.max()),
        "kernel_peak": float(kern.max()),
    }
    try:
        sig = hexagonal_signature(field)
        metrics.update(
            hex_radii=sig.radii.tolist(),
            hex_radial_spread=sig.radial_spread,
            hex_angle_gaps_deg=np.degrees(sig.angle_gaps).tolist(),
        )
    except GcVsaError as e:
        metrics["hex_signature_error"] = str(e)
    return metrics


def _run_rotate(c: dict, seed: int, out: Path) -> dict:
    cfg = grid_config(c)
    geom = ex.cached_geometry(cfg)
    half = c["size"] // 2
    extent = (-half, c["size"] - half - 1, -half, c["size"] - half - 1)
    cb = position_codebook(extent, 1.0, geom)
    alpha = np.radians(c["angle"])
    p = np.array([c["x"], c["y"]])
    v = encode_position(p, geom)
    vr = rotate(v, alpha)
    expected = np.array([[np.cos(alpha), -np.sin(alpha)], [np.sin(alpha), np.cos(alpha)]]) @ p
    decoded = np.array(cleanup(cb, vr)[0], dtype=np.float64)
    write_pgm(out / "map_before.pgm", similarity_map(v, cb))
    write_pgm(out / "map_after.pgm", similarity_map(vr, cb))
    prof = angle_profile(vr, v)
    write_rows(
        out / "angle_profile.csv",
        ["slot", "angle_deg", "value"],
        [(i, 360.0 * i / cfg.n_theta, float(x)) for i, x in enumerate(prof)],
    )
    metrics = {
        "seed": seed,
        "expected": expected.tolist(),
        "decoded": decoded.tolist(),
        "position_error": float(np.hypot(*(decoded - expected))),
    }
    try:
        metrics["decoded_angle_deg"] = float(np.degrees(decode_angle(vr, v)))
    except GcVsaError as e:
        metrics["decoded_angle_deg"] = None
        metrics["angle_error"] = str(e)
    return metrics


RUNNERS = {
    "path-integration": _run_path_integration,
    "scene": _run_scene,
    "family-tree": _run_family_tree,
    "kernel": _run_kernel,
    "rotate": _run_rotate,
}


def _job(task):
    c, seed, out = task
    out.mkdir(parents=True, exist_ok=True)
    return RUNNERS[c["experiment"]](c, seed, out)


def _summary(c: dict, runs: list) -> dict:
    name = c["experiment"]
    s = {}
    if name == "path-integration":
        mses = [r["mse"] for r in runs]
        s["mse"] = float(np.median(mses))
        s["mean_mse"] = float(np.mean(mses))
    elif name == "scene" and "accuracy" in runs[0]:
        s["accuracy"] = float(np.mean([r["accuracy"] for r in runs]))
        s["run_success_rate"] = float(
            np.mean([r["all_correct"] and r["max_iterations"] <= 50 for r in runs])
        )
        s["max_iterations"] = max(r["max_iterations"] for r in runs)
    elif name == "family-tree":
        answers = [r["answers"] for r in runs]
        if len(answers[0]) == 1 and all(a == answers[0] for a in answers):
            s["answer"] = next(iter(answers[0].values()))
    elif name == "rotate":
        s["position_error"] = max(r["position_error"] for r in runs)
        s["decoded_angle_deg"] = runs[0]["decoded_angle_deg"]
    return s


def run(c: dict, out: Path) -> dict:
    seeds = [c["seed"] + i for i in range(c["seeds"])]
    dirs = [out] if len(seeds) == 1 else [out / f"seed_{s}" for s in seeds]
    tasks = [(c, s, d) for s, d in zip(seeds, dirs)]
    if c["jobs"] > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=c["jobs"]) as pool:
            runs = list(pool.map(_job, tasks))
    else:
        runs = [_job(t) for t in tasks]
    metrics = {"experiment": c["experiment"], **_summary(c, runs), "runs": runs}
    geom = ex.cached_geometry(grid_config(c))
    write_json(out / "metrics.json", metrics)
    write_json(out / "config.json", c)
    write_json(out / "geometry.json", geom.to_dict())
    return metrics


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        c = resolve_config(args.command, args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        metrics = run(c, out)
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except GcVsaError as e:
        print(f"gcvsa: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001
        print(f"gcvsa: runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    summary = {k: v for k, v in metrics.items() if k != "runs"}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
