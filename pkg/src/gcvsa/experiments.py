"""Path integration, scene queries and family-tree analogies end to end."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .codebook import Codebook, cleanup
from .core import (
    GcTensor,
    GcVsaError,
    GridConfig,
    PhaseTensor,
    bind,
    bind_all,
    bundle,
    cosine_similarity,
    fractional_power,
    identity,
    materialize,
    random_phases,
    random_symbol,
    unbind,
)
from .resonator import ResonatorState, factorize, reconstruction_similarity
from .rotation import permute_orientation
from .spatial import (
    ModuleGeometry,
    axis_codebook,
    encode_position,
    position_codebook,
    similarity_map,
)

DEFAULT_ARENA = (0.0, 63.0, 0.0, 63.0)
LOW_CONFIDENCE = 0.2


@functools.lru_cache(maxsize=8)
def cached_geometry(cfg: GridConfig) -> ModuleGeometry:
    return ModuleGeometry.from_config(cfg)


@functools.lru_cache(maxsize=4)
def cached_position_codebook(cfg: GridConfig, extent: tuple, step: float) -> Codebook:
    return position_codebook(extent, step, cached_geometry(cfg))


# -- path integration ---------------------------------------------------------


@dataclass
class Trajectory:
    positions: np.ndarray  # (steps + 1, 2)
    velocities: np.ndarray  # (steps, 2)


def generate_trajectory(
    arena=DEFAULT_ARENA,
    steps: int = 100,
    rng: np.random.Generator | None = None,
    smoothing: float = 0.8,
    max_speed: float = 2.0,
    noise: float = 1.0,
    start=None,
    initial_velocity=None,
) -> Trajectory:
    """Smoothed random walk with reflecting walls.

    ``v(t) = smoothing * v(t-1) + (1 - smoothing) * eta(t)`` with isotropic
    Gaussian ``eta`` of standard deviation ``noise``; speeds are clipped to
    ``max_speed``. A component that would leave the arena is flipped before
    the step is taken, so positions always stay inside.
    """
    if steps < 1:
        raise GcVsaError("a trajectory needs at least one step")
    if not 0.0 <= smoothing < 1.0:
        raise GcVsaError(f"smoothing must lie in [0, 1), got {smoothing}")
    if rng is None:
        rng = np.random.default_rng()
    x0, x1, y0, y1 = (float(a) for a in arena)
    lo, hi = np.array([x0, y0]), np.array([x1, y1])
    pos = np.array(start if start is not None else [(x0 + x1) / 2, (y0 + y1) / 2], float)
    if np.any(pos < lo) or np.any(pos > hi):
        raise GcVsaError(f"start {pos} lies outside the arena")
    v = np.zeros(2) if initial_velocity is None else np.asarray(initial_velocity, float)
    positions = [pos.copy()]
    velocities = []
    for t in range(steps):
        eta = rng.normal(0.0, noise, size=2)
        v = smoothing * v + (1.0 - smoothing) * eta if t or initial_velocity is None else v
        speed = float(np.hypot(*v))
        if speed > max_speed:
            v = v * (max_speed / speed)
        nxt = pos + v
        out = (nxt < lo) | (nxt > hi)
        v = np.where(out, -v, v)
        pos = np.clip(pos + v, lo, hi)
        velocities.append(v.copy())
        positions.append(pos.copy())
    return Trajectory(np.array(positions), np.array(velocities))


@dataclass
class PathIntegrationResult:
    trajectory: Trajectory
    decoded: np.ndarray
    mse: float
    similarity_maps: dict
    final_state: GcTensor
    start_state: GcTensor


def run_path_integration(
    cfg: GridConfig,
    arena=DEFAULT_ARENA,
    steps: int = 100,
    seed: int = 0,
    smoothing: float = 0.8,
    max_speed: float = 2.0,
    noise: float = 1.0,
    trajectory: Trajectory | None = None,
    map_times=None,
) -> PathIntegrationResult:
    """Track position by binding one displacement code per step.

    MSE is the mean squared Euclidean decoding error over steps 1..T; the
    start state is exact by construction and left out.
    """
    geom = cached_geometry(cfg)
    arena = tuple(float(a) for a in arena)
    cb = cached_position_codebook(cfg, arena, 1.0)
    if trajectory is None:
        trajectory = generate_trajectory(
            arena, steps, np.random.default_rng(seed), smoothing, max_speed, noise
        )
    steps = len(trajectory.velocities)
    if map_times is None:
        map_times = (0, steps // 2, steps)
    state = encode_position(trajectory.positions[0], geom)
    start_state = state
    decoded = [cleanup(cb, state)[0]]
    maps = {}
    if 0 in map_times:
        maps[0] = similarity_map(state, cb)
    for t, dv in enumerate(trajectory.velocities, start=1):
        state = bind(state, encode_position(dv, geom))
        decoded.append(cleanup(cb, state)[0])
        if t in map_times:
            maps[t] = similarity_map(state, cb)
    decoded = np.array(decoded, dtype=np.float64)
    err = np.sum((decoded[1:] - trajectory.positions[1:]) ** 2, axis=1)
    return PathIntegrationResult(
        trajectory, decoded, float(np.mean(err)), maps, state, start_state
    )


def displacement_codebook(cfg: GridConfig, arena=DEFAULT_ARENA) -> Codebook:
    """Lattice of displacements reachable from the arena centre, in both signs."""
    hx = int(np.ceil((arena[1] - arena[0]) / 2))
    hy = int(np.ceil((arena[3] - arena[2]) / 2))
    return cached_position_codebook(cfg, (-hx, hx, -hy, hy), 1.0)


def home_vector(state: GcTensor, start_state: GcTensor, codebook: Codebook):
    """Displacement from the start, read out of ``state`` unbound by ``start_state``.

    Stepping by the negated result leads back to the start.
    """
    return cleanup(codebook, unbind(state, start_state))[0]


# -- spatio-temporal scenes ---------------------------------------------------

DEFAULT_OBJECTS = ("apple", "banana", "cherry", "grape", "lemon")
FEATURES = ("identity", "x", "y", "t")


@dataclass(frozen=True)
class SceneItem:
    identity: str
    x: int
    y: int
    t: int


@dataclass
class SceneSpace:
    """Codebooks for every feature of a scene."""

    config: GridConfig
    identity: Codebook
    x: Codebook
    y: Codebook
    t: Codebook
    time_generator: PhaseTensor

    def codebook(self, feature: str) -> Codebook:
        return getattr(self, feature)


def make_scene_space(
    cfg: GridConfig,
    rng: np.random.Generator,
    names=DEFAULT_OBJECTS,
    width: int = 64,
    height: int = 64,
    times: int = 4,
) -> SceneSpace:
    geom = cached_geometry(cfg)
    ids = Codebook.from_items((name, random_symbol(cfg, rng)) for name in names)
    vt = random_phases(cfg, rng)
    tcb = Codebook.from_items(
        (t, materialize(fractional_power(vt, t))) for t in range(times)
    )
    return SceneSpace(
        cfg,
        ids,
        axis_codebook(np.arange(width), geom, 0),
        axis_codebook(np.arange(height), geom, 1),
        tcb,
        vt,
    )


def random_scene(space: SceneSpace, rng: np.random.Generator, n_items: int = 5):
    names = space.identity.keys
    if n_items > len(names):
        raise GcVsaError(f"only {len(names)} identities available")
    return [
        SceneItem(
            str(names[i]),
            int(rng.integers(len(space.x))),
            int(rng.integers(len(space.y))),
            int(rng.integers(len(space.t))),
        )
        for i in range(n_items)
    ]


def _item_feature(item: SceneItem, feature: str):
    return getattr(item, feature)


def encode_scene(items, space: SceneSpace) -> GcTensor:
    if not items:
        raise GcVsaError("a scene needs at least one item")
    terms = []
    for it in items:
        for f in FEATURES:
            if _item_feature(it, f) not in space.codebook(f):
                raise GcVsaError(f"unknown {f} {_item_feature(it, f)!r} in scene item {it}")
        terms.append(bind_all([space.codebook(f)[_item_feature(it, f)] for f in FEATURES]))
    return bundle(terms)


@dataclass
class SceneAnswer:
    features: dict
    confidence: float
    low_confidence: bool
    state: ResonatorState | None = None


def query_scene(
    scene: GcTensor,
    space: SceneSpace,
    cue: dict,
    threshold: float = LOW_CONFIDENCE,
    max_iter: int = 100,
) -> SceneAnswer:
    """Unbind the known features, then decode the rest.

    One unknown is read by cleanup, two or more by the resonator. The
    confidence is the cosine between the unbound residual and the product of
    the recovered entries; below ``threshold`` the answer is flagged.
    """
    bad = set(cue) - set(FEATURES)
    if bad:
        raise GcVsaError(f"unknown cue features {sorted(bad)}")
    residual = scene
    for f in FEATURES:
        if f in cue:
            cb = space.codebook(f)
            if cue[f] not in cb:
                raise GcVsaError(f"cue {f}={cue[f]!r} is not in the {f} codebook")
            residual = unbind(residual, cb[cue[f]])
    unknown = [f for f in FEATURES if f not in cue]
    features = dict(cue)
    state = None
    if not unknown:
        conf = cosine_similarity(residual, identity(space.config))
    elif len(unknown) == 1:
        key, conf = cleanup(space.codebook(unknown[0]), residual)
        features[unknown[0]] = key
    else:
        cbs = [space.codebook(f) for f in unknown]
        state = factorize(residual, cbs, max_iter=max_iter, accept=threshold)
        for f, k in zip(unknown, state.keys):
            features[f] = k
        conf = reconstruction_similarity(residual, cbs, state.keys)
    return SceneAnswer(features, float(conf), bool(conf < threshold), state)


def run_scene_experiment(
    cfg: GridConfig,
    items=None,
    query=None,
    seed: int = 0,
    n_items: int = 5,
    max_iter: int = 100,
) -> dict:
    """Build a scene and answer one query (default: every item by identity).

    Symbols and, when ``items`` is None, the scene layout are drawn from
    ``seed``. Returns the items, one answer per query and the scene space.
    """
    rng = np.random.default_rng(seed)
    names = DEFAULT_OBJECTS
    if items is not None:
        names = tuple(dict.fromkeys([it.identity for it in items] + list(DEFAULT_OBJECTS)))
    if query is not None and "identity" in query and query["identity"] not in names:
        names = names + (query["identity"],)
    space = make_scene_space(cfg, rng, names)
    if items is None:
        items = random_scene(space, rng, n_items)
    scene = encode_scene(items, space)
    queries = [query] if query is not None else [{"identity": it.identity} for it in items]
    answers = [query_scene(scene, space, q, max_iter=max_iter) for q in queries]
    return {"items": list(items), "queries": queries, "answers": answers, "space": space}


def scene_item_correct(item: SceneItem, answer: SceneAnswer) -> bool:
    return all(answer.features.get(f) == _item_feature(item, f) for f in FEATURES)


# -- family trees -------------------------------------------------------------

EXAMPLE_TREE_A = {"": "Alice", "L": "Bob", "R": "Charles", "LL": "Dora", "LR": "Emil"}
EXAMPLE_TREE_B = {"": "Fred", "L": "George", "R": "Harry", "LL": "Igor", "LR": "James"}


@dataclass
class FamilyTree:
    """Binary tree of names keyed by the path from the root ("" is the root)."""

    nodes: dict = field(default_factory=dict)

    def __post_init__(self):
        if "" not in self.nodes:
            raise GcVsaError("a family tree needs a root (empty path)")
        for path in self.nodes:
            if set(path) - {"L", "R"}:
                raise GcVsaError(f"path {path!r} may only contain L and R")
            if path and path[:-1] not in self.nodes:
                raise GcVsaError(f"path {path!r} has no parent in the tree")
        names = list(self.nodes.values())
        if len(set(names)) != len(names):
            raise GcVsaError("names in a family tree must be unique")

    @property
    def names(self) -> list:
        return list(self.nodes.values())


def path_vector(path: str, directions: dict) -> GcTensor | None:
    """Bind the direction taken at each depth, shifted once more per level."""
    if not path:
        return None
    parts = [permute_orientation(directions[step], depth) for depth, step in enumerate(path)]
    return bind_all(parts)


def encode_tree(tree: FamilyTree, names: Codebook, directions: dict) -> GcTensor:
    terms = []
    for path, name in tree.nodes.items():
        v = names[name]
        pv = path_vector(path, directions)
        terms.append(v if pv is None else bind(v, pv))
    return bundle(terms)


@dataclass
class AnalogyResult:
    probe: str
    answer: str
    similarity: float
    profile: list


def tree_symbols(cfg: GridConfig, rng: np.random.Generator, tree_a, tree_b):
    directions = {"L": random_symbol(cfg, rng), "R": random_symbol(cfg, rng)}
    names = Codebook.from_items(
        (name, random_symbol(cfg, rng)) for name in dict.fromkeys(tree_a.names + tree_b.names)
    )
    return names, directions


def run_family_tree_analogy(
    tree_a: FamilyTree, tree_b: FamilyTree, probes, cfg: GridConfig, seed: int = 0
) -> list[AnalogyResult]:
    """Answer "who in tree B plays the role of ``probe`` in tree A"."""
    if isinstance(probes, str):
        probes = [probes]
    if set(tree_a.nodes) != set(tree_b.nodes):
        raise GcVsaError("trees must have the same shape")
    for p in probes:
        if p not in tree_a.names:
            raise GcVsaError(f"probe {p!r} is not a name in the first tree")
    rng = np.random.default_rng(seed)
    names, directions = tree_symbols(cfg, rng, tree_a, tree_b)
    fa = encode_tree(tree_a, names, directions)
    fb = encode_tree(tree_b, names, directions)
    mapping = unbind(fb, fa)
    b_names = Codebook.from_matrix(
        tree_b.names, np.stack([names[n].flat() for n in tree_b.names]), cfg
    )
    out = []
    for p in probes:
        query = bind(names[p], mapping)
        sims = b_names.similarities(query)
        key, sim = cleanup(b_names, query)
        out.append(AnalogyResult(p, key, sim, list(zip(b_names.keys, sims.tolist()))))
    return out
