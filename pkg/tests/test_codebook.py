import numpy as np
import pytest

from gcvsa.codebook import (
    Codebook,
    argmax_first,
    cleanup,
    load_codebook,
    readout,
    save_codebook,
    superpose,
)
from gcvsa.core import GcTensor, GcVsaError, GridConfig, bundle, materialize, random_phases, random_symbol
from gcvsa.core import fractional_power
from gcvsa.spatial import ModuleGeometry, axis_codebook, encode_position


@pytest.fixture
def cb20(cfg):
    rng = np.random.default_rng(20)
    return Codebook.from_items((f"s{i}", random_symbol(cfg, rng)) for i in range(20))


def test_self_retrieval_is_exhaustive(cb20):
    for k in cb20.keys:
        key, sim = cleanup(cb20, cb20[k])
        assert key == k and sim == pytest.approx(1.0)


def test_readout_preserves_order_and_scale(cb20, cfg, rng):
    v = random_symbol(cfg, rng)
    prof = readout(cb20, v)
    assert [k for k, _ in prof] == cb20.keys
    assert np.allclose([s for _, s in prof], [s for _, s in readout(cb20, v * 7.5)])


def test_bundle_of_two_entries_reads_out_as_top_two(cfg):
    for seed in range(50):
        rng = np.random.default_rng(seed)
        cb = Codebook.from_items((i, random_symbol(cfg, rng)) for i in range(20))
        a, b = rng.choice(20, size=2, replace=False)
        sims = cb.similarities(bundle([cb[int(a)], cb[int(b)]]))
        assert set(np.argsort(sims)[-2:]) == {a, b}


def test_zero_vector_readout_fails(cb20, cfg):
    with pytest.raises(GcVsaError):
        cb20.similarities(GcTensor(np.zeros(cfg.shape), cfg))


def test_noise_robust_cleanup(cb20, cfg):
    rng = np.random.default_rng(7)
    for k in cb20.keys:
        e = cb20[k]
        noise = rng.normal(size=cfg.shape)
        noise *= 0.099 * e.norm / np.linalg.norm(noise)
        assert cleanup(cb20, GcTensor(e.data + noise, cfg))[0] == k


def test_ties_go_to_first_key(cfg, rng):
    a, b = random_symbol(cfg, rng), random_symbol(cfg, rng)
    cb = Codebook.from_items([("first", a), ("second", b), ("third", a * 2.0 - b)])
    # equal weight on a and b is equidistant from both by symmetry
    assert cleanup(cb, bundle([a, b]))[0] == "first"
    assert argmax_first(np.array([0.2, 0.5, 0.5])) == 1


def test_fpe_range_codebook_decodes_integer(cfg, rng):
    base = random_phases(cfg, rng)
    cb = Codebook.from_items((x, materialize(fractional_power(base, x))) for x in range(10))
    assert cleanup(cb, materialize(fractional_power(base, 3.0)))[0] == 3


def test_superpose_contract(cb20):
    w = np.zeros(len(cb20))
    w[4] = 1.0
    assert superpose(cb20, w).allclose(cb20.entry(4), atol=0)
    assert np.all(superpose(cb20, np.zeros(len(cb20))).data == 0.0)
    w = np.zeros(len(cb20))
    w[[1, 2]] = 0.3
    assert superpose(cb20, w).allclose(bundle([cb20.entry(1), cb20.entry(2)], [0.3, 0.3]))
    with pytest.raises(GcVsaError):
        superpose(cb20, np.ones(3))


def test_construction_is_validated(cfg, rng):
    v = random_symbol(cfg, rng)
    with pytest.raises(GcVsaError):
        Codebook.from_items([("a", v), ("a", v)])
    with pytest.raises(GcVsaError):
        Codebook.from_items([])
    with pytest.raises(GcVsaError):
        Codebook(["a"], np.zeros((1, 5)), cfg)
    other = random_symbol(GridConfig(n_theta=5), rng)
    with pytest.raises(GcVsaError):
        Codebook.from_items([("a", v), ("b", other)])


def test_readout_rejects_other_config(cb20, rng):
    with pytest.raises(GcVsaError):
        cb20.similarities(random_symbol(GridConfig(n_theta=5), rng))


def test_container_round_trip(tmp_path, cfg):
    geom = ModuleGeometry.from_config(cfg)
    cb = axis_codebook(np.arange(6), geom, 0)
    mixed = Codebook.from_items(
        [(("p", 1), encode_position((1, 2), geom)), ("name", cb.entry(1)), (3, cb.entry(2))]
    )
    for book in (cb, mixed):
        path = tmp_path / "cb.bin"
        save_codebook(book, path)
        back = load_codebook(path)
        assert back.keys == book.keys
        assert back.config == book.config
        assert np.array_equal(back.matrix, book.matrix)
    raw = path.read_bytes()
    assert raw[:8] == b"GCVSACB1"
    path.write_bytes(raw[:-8])
    with pytest.raises(GcVsaError):
        load_codebook(path)


def test_container_method_aliases(tmp_path, cb20):
    cb20.save(tmp_path / "x.bin")
    assert Codebook.load(tmp_path / "x.bin").keys == cb20.keys
