import pytest

from helpers import build
from tiersim.core import SplitMix64
from tiersim.memory import FLASH
from tiersim.metrics import Collector
from tiersim.swap import SwapPolicy
from tiersim.workload import (
    NoiseCatalog, NoiseSystem, CriticalService, TraceDriver, TraceError,
    load_trace, walk_ranges,
)


def swap_stack(dram=65536, flash=524288, overhead=6000):
    sim, m, dev = build(dram=dram, flash=flash)
    pol = SwapPolicy(sim, m, dev, fault_overhead_us=overhead, reclaim_batch=1)
    return sim, m, dev, pol


# -- catalog ---------------------------------------------------------------

def test_catalog_at_default_scale():
    cat = NoiseCatalog(scale=1024)
    sizes = sorted({hi - lo for lo, hi in cat.images})
    assert sizes == [5, 20, 50]
    assert len(cat.images) == 680
    assert cat.total_pages == 8500
    assert cat.images[0] == (0, 5)


def test_catalog_at_full_scale_matches_tens_of_gib():
    cat = NoiseCatalog(scale=1)
    assert cat.total_pages == 8_704_000     # 33.2 GiB of 4 KiB pages


def test_catalog_floors_at_one_page_per_image():
    cat = NoiseCatalog(scale=10**9)
    assert cat.total_pages == 680


def test_catalog_rejects_fractional_scale():
    with pytest.raises(Exception):
        NoiseCatalog(scale=0)


# -- noise clients ---------------------------------------------------------

def test_no_noise_containers_is_a_noop():
    sim, m, dev, pol = swap_stack()
    noise = NoiseSystem(sim, m, pol, SplitMix64(1), containers=0, clients=8)
    noise.start()
    assert sim.drain() == 0 and noise.requests == 0


def test_client_wakeups_stagger_across_one_think_period():
    sim, m, dev, pol = swap_stack()
    noise = NoiseSystem(sim, m, pol, SplitMix64(1), containers=2, clients=3)
    noise.start()
    sim.run(49_999)
    assert noise.requests == 1
    sim.run(99_999)
    assert noise.requests == 2
    sim.run(149_999)
    assert noise.requests == 3
    sim.run(150_000)
    assert noise.requests == 4


def test_single_client_paces_by_think_time():
    sim, m, dev, pol = swap_stack()
    noise = NoiseSystem(sim, m, pol, SplitMix64(7), containers=2, clients=1)
    noise.start()
    sim.run(1_000_000)
    # wakes at 0, 150k, ..., 900k: materializing an image is instant
    assert noise.requests == 7


def test_cold_image_walk_faults_every_page_in_one_cluster():
    sim, m, dev, pol = swap_stack()
    ctx = pol.register(m.new_context("n"))
    m.create(ctx, 0, 50, tier=FLASH)
    ends = []
    walk_ranges(pol, ctx, [(0, 50)], 0, batch=True, write=False,
                done=ends.append)
    sim.drain()
    assert pol.counters["demand_faults"] == 50
    assert pol.counters["fault_clusters"] == 1
    assert ends == [6271]                   # 6000 overhead + 271us 50-page read


def test_walk_abandons_when_the_context_dies():
    sim, m, dev, pol = swap_stack(dram=1, flash=64)
    ctx = pol.register(m.new_context("n"))
    pol.on_allocate(ctx, 0, 1, 0)
    pol.on_allocate(ctx, 1, 2, 0)           # page 0 drains to flash
    ends = []
    walk_ranges(pol, ctx, [(0, 1)], 0, batch=True, write=False,
                done=ends.append)
    pol.on_teardown(ctx)
    sim.drain()
    assert ends == []


# -- critical service ------------------------------------------------------

def test_zero_skew_draws_are_uniform():
    sim, m, dev, pol = swap_stack()
    coll = Collector(0, 1_000_000)
    svc = CriticalService(sim, m, pol, coll, SplitMix64(11),
                          cold_frac=0.0, skew=0.0)
    counts = [0] * svc.hot_records
    for _ in range(1_000_000):
        lo, hi = svc.draw_record()
        assert hi - lo == svc.hot_record_pages
        counts[lo // svc.hot_record_pages] += 1
    expected = 1_000_000 / svc.hot_records
    assert all(abs(c - expected) <= expected * 0.02 for c in counts)


def test_cold_fraction_one_draws_only_cold_records():
    sim, m, dev, pol = swap_stack()
    coll = Collector(0, 1_000_000)
    svc = CriticalService(sim, m, pol, coll, SplitMix64(2), cold_frac=1.0)
    for _ in range(10_000):
        lo, hi = svc.draw_record()
        assert lo >= svc.hot_pages
        assert hi - lo == svc.cold_record_pages


def test_resident_transactions_cost_exactly_base_service():
    sim, m, dev, pol = swap_stack()
    coll = Collector(0, 1_000_000)
    svc = CriticalService(sim, m, pol, coll, SplitMix64(3), threads=4)
    svc.start()
    sim.run(1_000_000)
    # every draw hits: each thread completes one txn per 5 ms, lockstep
    assert svc.completed == 4 * 200
    assert set(coll.samples) == {5000}
    assert pol.counters["demand_faults"] == 0
    summary = coll.summarize(0, "swap", "flash", pol.snapshot_counters(), 0)
    assert summary.tps == 800.0


def test_one_fault_inside_a_transaction_adds_its_stall():
    sim, m, dev, pol = swap_stack(overhead=0)
    coll = Collector(0, 10_000_000)
    svc = CriticalService(sim, m, pol, coll, SplitMix64(4), threads=1,
                          draws_per_txn=1)
    pol.on_allocate(svc.ctx, 0, 1, 0)
    pol._reclaim(1, 0, rounded=False)
    sim.run(500)                            # write-back done, page 0 on flash
    svc.draw_record = lambda: (0, 1)
    svc._begin(1000)
    sim.run(7000)
    assert svc.completed == 1
    assert coll.samples == [5084]           # 5000 base + one 84us read


# -- trace replay ----------------------------------------------------------

def test_trace_parses_records_and_comments(tmp_path):
    p = tmp_path / "t.trace"
    p.write_text("# header\n\n10 web 0 w\n20 web 1 r\n30 db 5 w\n")
    assert load_trace(str(p)) == [
        (10, "web", 0, "w"), (20, "web", 1, "r"), (30, "db", 5, "w")]


def test_empty_trace_is_empty(tmp_path):
    p = tmp_path / "t.trace"
    p.write_text("# nothing here\n")
    assert load_trace(str(p)) == []


@pytest.mark.parametrize("body", [
    "10 web 0\n",             # missing field
    "x web 0 r\n",            # non-integer time
    "10 web -1 r\n",          # negative page
    "10 web 0 x\n",           # bad rw flag
    "20 web 0 r\n10 web 0 r\n",  # time regression
])
def test_malformed_traces_name_the_line(tmp_path, body):
    p = tmp_path / "bad.trace"
    p.write_text("# ok line\n" + body)
    with pytest.raises(TraceError) as err:
        load_trace(str(p))
    assert ".trace:" in str(err.value)


def test_driver_replays_in_timestamp_order(tmp_path):
    p = tmp_path / "t.trace"
    p.write_text("0 c1 0 w\n10 c1 0 r\n20 c2 5 r\n")
    sim, m, dev, pol = swap_stack()
    driver = TraceDriver(sim, m, pol, load_trace(str(p)))
    driver.start()
    sim.run(20)
    sim.drain()
    assert driver.accesses == 3
    assert sorted(driver.ctxs) == ["c1", "c2"]
    assert m.census()["total"] == 2
    assert pol.counters["demand_faults"] == 0  # first refs are births


def _replay(records, log_to):
    sim, m, dev, pol = swap_stack(dram=32, flash=512, overhead=0)
    pol.access_log = []
    driver = TraceDriver(sim, m, pol, records)
    driver.start()
    if records:
        sim.run(records[-1][0])
    sim.drain()
    tiers = {}
    for cid, ctx in driver.ctxs.items():
        for idx, c in ctx.pages.items():
            tiers[(cid, idx)] = c.tier
    log_to.write_text(
        "".join(f"{t} {cid} {idx} {op}\n" for t, cid, idx, op in pol.access_log))
    return pol.access_log, dict(pol.counters), tiers


def test_dumped_run_replays_to_the_same_fault_sequence(tmp_path):
    rng = SplitMix64(3)
    t, lines = 0, []
    for _ in range(120):
        t += 1000
        lines.append(f"{t} {'ab'[rng.randrange(2)]} {rng.randrange(64)} "
                     f"{'rw'[rng.randrange(2)]}")
    first = tmp_path / "gen.trace"
    first.write_text("\n".join(lines) + "\n")

    dump1 = tmp_path / "round1.trace"
    dump2 = tmp_path / "round2.trace"
    log1, counters1, tiers1 = _replay(load_trace(str(first)), dump1)
    log2, counters2, tiers2 = _replay(load_trace(str(dump1)), dump2)
    assert len(log1) == 120
    assert log1 == log2
    assert counters1 == counters2 and counters1["demand_faults"] > 0
    assert tiers1 == tiers2
    assert dump1.read_bytes() == dump2.read_bytes()
