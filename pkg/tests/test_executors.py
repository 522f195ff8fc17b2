import numpy as np
import pytest

from blrkernels.errors import LayoutError, RankTooLargeForScratch, ShapeError
from blrkernels.executors import (
    OutputMode, check_scratch, forward_blast_baseline, forward_blast_reordered,
    forward_lowrank_fully_fused, forward_monarch_baseline, forward_monarch_optimized,
    max_fused_rank, scratch_plan,
)
from blrkernels.formats import WorkloadSpec, pretranspose_blast_s, random_factors, relayout_monarch_v
from blrkernels.paths import PATHS, get_path, paths_for
from blrkernels.tensorbase import TileConfig
from blrkernels.verify import reference_output, rel_error

SMALL = TileConfig(16, 16, 16, 16)


def _case(method, n, i, o, r, b, seed=0):
    spec = WorkloadSpec(method, n, i, o, r, b)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, i)).astype(np.float32)
    return spec, X, random_factors(spec, rng)


@pytest.mark.parametrize("method,shape", [
    ("Dense", (5, 40, 24, 1, 1)),
    ("LowRank", (33, 40, 24, 12, 1)),
    ("Monarch", (33, 48, 36, 12, 3)),
    ("Blast", (33, 48, 36, 10, 3)),
])
@pytest.mark.parametrize("mode", list(OutputMode))
def test_every_path_matches_oracle(backend, method, shape, mode):
    spec, X, w = _case(method, *shape)
    for name in paths_for(spec.method):
        p = get_path(name)
        if mode is OutputMode.TRANSPOSED and not p.takes_mode:
            continue
        res = p(X, p.prepare(w), SMALL, mode)
        assert rel_error(res.Y, reference_output(X, w, mode)) <= 1e-5, name


@pytest.mark.parametrize("tile", [TileConfig(16, 16, 16, 16), TileConfig(32, 64, 16, 128),
                                  TileConfig(256, 16, 64, 32)])
def test_results_and_first_touch_traffic_do_not_depend_on_tiles(backend, tile):
    spec, X, w = _case("Blast", 40, 64, 48, 24, 4)
    for name in paths_for(spec.method):
        p = get_path(name)
        res = p(X, p.prepare(w), tile)
        base = p(X, p.prepare(w), SMALL)
        np.testing.assert_allclose(res.Y, base.Y, rtol=1e-4, atol=1e-5)
        assert res.counters.reads == base.counters.reads
        assert res.counters.writes == base.counters.writes
        assert res.counters.flops == base.counters.flops


def test_backends_agree_on_values_and_counters():
    from blrkernels import use_backend
    from blrkernels._backend import numba_available
    if not numba_available():
        pytest.skip("numba missing")
    spec, X, w = _case("Monarch", 20, 48, 32, 8, 4)
    for name in PATHS:
        p = get_path(name)
        weights = p.prepare(w if p.method is spec.method else random_factors(
            WorkloadSpec(p.method, 20, 48, 32, 8, 4), np.random.default_rng(3)))
        out = {}
        for be in ("numpy", "numba"):
            with use_backend(be):
                out[be] = p(X, weights, SMALL)
        np.testing.assert_allclose(out["numpy"].Y, out["numba"].Y, rtol=1e-4, atol=1e-5)
        assert out["numpy"].counters.as_dict() == out["numba"].counters.as_dict(), name


def test_intermediate_traffic_per_path(backend):
    n, i, o, r, b = 24, 48, 36, 12, 3
    bnr = b * n * r
    spec, X, w = _case("Blast", n, i, o, r, b)
    got = {p: get_path(p)(X, get_path(p).prepare(w), SMALL).counters.intermediate_elements
           for p in paths_for(spec.method)}
    assert got == {"blast_base": 8 * bnr, "blast_partial": 2 * bnr, "blast_reordered": 4 * bnr}

    spec, X, w = _case("Monarch", n, i, o, r, b)
    base = forward_monarch_baseline(X, w, tile=SMALL).counters.intermediate_elements
    opt = forward_monarch_optimized(X, relayout_monarch_v(w), tile=SMALL).counters.intermediate_elements
    assert (base, opt) == (6 * bnr, 2 * bnr)

    spec, X, w = _case("LowRank", n, i, o, r, 1)
    assert get_path("lowrank")(X, w, SMALL).counters.intermediate_elements == 2 * n * r
    assert forward_lowrank_fully_fused(X, w, SMALL).counters.intermediate_bytes == 0


def test_redundant_tile_loads_visible(backend):
    _, X, w = _case("LowRank", 64, 64, 64, 32, 1)
    c = get_path("lowrank")(X, w, SMALL).counters
    assert c.tile_reads["input"] > c.reads["input"] == X.size
    assert c.tile_intermediate_elements > c.intermediate_elements


def test_layout_guards():
    _, X, w = _case("Monarch", 4, 8, 8, 4, 2)
    with pytest.raises(LayoutError):
        forward_monarch_optimized(X, w)
    with pytest.raises(LayoutError):
        forward_monarch_baseline(X, relayout_monarch_v(w))
    _, X, w = _case("Blast", 4, 8, 8, 4, 2)
    with pytest.raises(LayoutError):
        forward_blast_reordered(X, w)
    with pytest.raises(ShapeError):
        forward_blast_baseline(X[:, :6], w)


def test_reordered_keep_transposed(backend):
    _, X, w = _case("Blast", 9, 12, 15, 5, 3)
    res = forward_blast_reordered(X, pretranspose_blast_s(w), tile=SMALL, keep_transposed=True)
    np.testing.assert_allclose(res.Y.T, reference_output(X, w), rtol=1e-4, atol=1e-5)


def test_fused_rank_bound():
    tile = TileConfig(16, 16, 16, 16)
    assert max_fused_rank(tile) == 1013
    check_scratch("lowrank_fused", tile, r=1013)
    with pytest.raises(RankTooLargeForScratch) as ei:
        check_scratch("lowrank_fused", tile, r=1014)
    assert ei.value.max_rank == 1013
    # doubling the budget roughly doubles the admissible rank
    assert max_fused_rank(TileConfig(16, 16, 16, 16, 2 * tile.scratch_bytes)) == 2037


def test_partial_fused_scratch_grows_with_b2():
    tile = TileConfig(64, 64, 64, 64)
    assert scratch_plan("blast_partial", tile, b2=16)["partial_fused"] > scratch_plan(
        "blast_partial", tile, b2=2)["partial_fused"]
    with pytest.raises(KeyError):
        scratch_plan("butterfly", tile)
