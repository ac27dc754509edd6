import pytest

from dirtysim.cache import Cache, CacheGeometry, LatencyModel, make_line
from dirtysim.measurement import (build_replacement_set, latency_cdf,
                                  measure_replacement_latency)

GEO = CacheGeometry()


def prepared_cache(d, latency=None, seed=0):
    """Target set 0 filled with 8 clean receiver lines, then d dirty sender lines."""
    cache = Cache(GEO, "lru", latency, seed=seed)
    for i in range(GEO.associativity):
        cache.read(make_line("receiver", 0, i))
    for j in range(d):
        cache.write(make_line("sender", 0, j))
    return cache


def test_build_replacement_set_shape():
    rset = build_replacement_set("r", 5, 10, seed=3)
    assert len(rset) == 10
    assert all(GEO.set_index(line.address) == 5 for line in rset.lines)
    assert len({line.address for line in rset.lines}) == 10
    assert sorted(rset.chase_order) == list(range(10))


def test_build_replacement_set_deterministic():
    a = build_replacement_set("r", 5, 10, seed=3)
    b = build_replacement_set("r", 5, 10, seed=3)
    assert a == b
    c = build_replacement_set("r", 5, 10, seed=4)
    assert c.lines == a.lines  # only the chase order is seeded


def test_build_replacement_set_singleton():
    rset = build_replacement_set("r", 0, 1, seed=0)
    assert rset.chase_order == (0,)


def test_build_replacement_set_rejects_empty():
    with pytest.raises(ValueError):
        build_replacement_set("r", 0, 0, seed=0)


@pytest.mark.parametrize("d", range(9))
def test_totals_are_110_plus_11d(d):
    # independent arithmetic: (8-d) clean evictions, d dirty, 2 self-evictions
    expected = (8 - d) * 11 + d * 22 + 2 * 11
    assert expected == 110 + 11 * d
    cache = prepared_cache(d)
    rset = build_replacement_set("receiver", 0, 10, seed=d, tag_base=1000)
    sample = measure_replacement_latency(cache, rset)
    assert sample.total_cycles == expected
    assert sample.dirty_before == d
    assert sample.resident_hits == 0


def test_total_is_sum_of_individual_latencies():
    cache = prepared_cache(3)
    rset = build_replacement_set("receiver", 0, 10, seed=1, tag_base=1000)
    shadow = prepared_cache(3)
    individual = [shadow.read(rset.lines[i]).latency for i in rset.chase_order]
    assert measure_replacement_latency(cache, rset).total_cycles == sum(individual)


def test_adjacent_d_step_equals_dirty_minus_clean_cost():
    model = LatencyModel(hit=4, miss_clean=10, miss_dirty=23)
    totals = []
    for d in range(9):
        cache = prepared_cache(d, latency=model)
        rset = build_replacement_set("receiver", 0, 10, seed=d, tag_base=1000)
        totals.append(measure_replacement_latency(cache, rset).total_cycles)
    steps = {b - a for a, b in zip(totals, totals[1:])}
    assert steps == {model.miss_dirty - model.miss_clean}


def test_resident_lines_flagged_not_fatal():
    # With L > W, rerunning the same chase order self-thrashes and still
    # misses everywhere; a W-sized set left fully resident shows the flag.
    cache = prepared_cache(0)
    rset = build_replacement_set("receiver", 0, 8, seed=1, tag_base=1000)
    first = measure_replacement_latency(cache, rset)
    assert not first.precondition_violated
    again = measure_replacement_latency(cache, rset)
    assert again.precondition_violated
    assert again.resident_hits == 8


def test_same_order_reuse_self_thrashes_instead_of_hitting():
    cache = prepared_cache(0)
    rset = build_replacement_set("receiver", 0, 10, seed=1, tag_base=1000)
    measure_replacement_latency(cache, rset)
    again = measure_replacement_latency(cache, rset)
    assert again.resident_hits == 0  # LRU evicts each line just before its turn


def test_measurement_doubles_as_initialization():
    cache = prepared_cache(8)
    rset_a = build_replacement_set("receiver", 0, 10, seed=1, tag_base=1000)
    measure_replacement_latency(cache, rset_a)
    assert cache.dirty_count(0) == 0
    rset_b = build_replacement_set("receiver", 0, 10, seed=2, tag_base=2000)
    sample = measure_replacement_latency(cache, rset_b)
    assert sample.total_cycles == 110
    assert sample.resident_hits == 0


def test_chase_order_does_not_change_total():
    totals = set()
    for seed in range(5):
        cache = prepared_cache(4)
        rset = build_replacement_set("receiver", 0, 10, seed=seed, tag_base=1000)
        totals.add(measure_replacement_latency(cache, rset).total_cycles)
    assert totals == {110 + 11 * 4}


def test_latency_cdf_point_masses_without_jitter():
    table = latency_cdf(range(9), trials=4, seed=5)
    for d, samples in table:
        assert samples == [110 + 11 * d] * 4


def test_latency_cdf_band_separation_arithmetic():
    # Adjacent means sit 11 cycles apart; each access carries +-j, so a
    # 10-access total stays within +-10j of its mean.  Bands are therefore
    # guaranteed disjoint exactly when the total half-width is below 5.5,
    # which only j=0 achieves for integer j.
    j = 1
    table = latency_cdf([3, 4], trials=60, seed=5, latency=LatencyModel(jitter=j))
    for d, samples in table:
        assert all(abs(s - (110 + 11 * d)) <= 10 * j for s in samples)
    assert 10 * j >= 5.5  # worst-case envelopes of adjacent bands collide
    clean = latency_cdf([3, 4], trials=10, seed=5)
    assert max(clean[0][1]) < min(clean[1][1])  # j=0: disjoint point masses


def test_latency_cdf_ordering_of_means():
    table = latency_cdf([0, 2, 5, 8], trials=20, seed=2, latency=LatencyModel(jitter=2))
    means = [sum(s) / len(s) for _, s in table]
    assert means == sorted(means)
    assert means[0] < means[-1]


def test_latency_cdf_validates_d():
    with pytest.raises(ValueError):
        latency_cdf([9], trials=1, seed=0)


def test_tree_plru_totals_match_lru_when_l_covers_the_set():
    # L=10 >= 9 guarantees full eviction under tree-PLRU as well, so the
    # totals collapse to the same 110 + 11d arithmetic.
    table = latency_cdf(range(9), trials=2, seed=3, policy="tree-plru")
    for d, samples in table:
        assert samples == [110 + 11 * d] * 2
