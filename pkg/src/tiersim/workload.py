"""Workload generators: a closed-loop latency-critical service, bursty
image-serving noise containers, and trace replay.

Noise containers share a fixed catalog shape: 500 images of 20 MiB, 100 of
80 MiB, 80 of 200 MiB, scaled down by a divisor (default 1024 brings the
per-container footprint to 8500 pages). Images materialize on first request
(pages are born then, dirty); later requests walk the image sequentially
and refault any evicted run as one batched read. A fixed client pool keeps
total noise load constant while the container count sweeps.

The critical service owns one context with two record classes: a small set
of hot multi-page records (almost every draw) and a long tail of cold
records (rare draws). Each transaction draws a few records, walks their
pages, then finishes after a fixed compute time; threads are closed-loop
with zero think time. Hot draws are rank-weighted by a power-law skew.
"""

import bisect
from itertools import accumulate

from .core import SimulationError

MIB = 2 ** 20
PAGE = 4096

# per-container image catalog: (count, MiB each)
CATALOG_SHAPE = ((500, 20), (100, 80), (80, 200))


class NoiseCatalog:
    def __init__(self, scale=1024):
        if scale < 1:
            raise SimulationError("scale divisor must be >= 1")
        self.scale = scale
        self.images = []        # (lo, hi) page ranges, one per image
        off = 0
        for count, mib in CATALOG_SHAPE:
            pages = max(1, (mib * MIB) // (scale * PAGE))
            for _ in range(count):
                self.images.append((off, off + pages))
                off += pages
        self.total_pages = off


def walk_ranges(policy, ctx, ranges, t, batch, write, done):
    """Touch each (lo, hi) range in order via the policy, resuming after
    tier-out waits, then call done(t_end)."""
    ranges = list(ranges)
    idx = 0

    def step(t):
        nonlocal idx
        if not ctx.alive:
            return
        while idx < len(ranges):
            lo, hi = ranges[idx]
            res = policy.access_range(ctx, lo, hi, t, batch=batch, write=write)
            if res.wait is not None:
                ranges[idx] = (res.next_idx, hi)
                res.wait.wait(step)
                return
            t = res.done_at
            idx += 1
        done(t)

    step(t)


class NoiseSystem:
    def __init__(self, sim, model, policy, rng, containers, clients,
                 think_us=150_000, scale=1024):
        self.sim = sim
        self.policy = policy
        self.rng = rng
        self.clients = clients
        self.think_us = think_us
        self.catalog = NoiseCatalog(scale)
        self.contexts = []
        self.seen = []          # per container, per image: materialized yet?
        for k in range(containers):
            ctx = model.new_context(f"noise-{k}")
            policy.register(ctx)
            self.contexts.append(ctx)
            self.seen.append([False] * len(self.catalog.images))
        self.requests = 0

    def start(self):
        if not self.contexts:
            return
        for i in range(self.clients):
            # stagger wake-ups across one think period
            self.sim.schedule(i * self.think_us // max(1, self.clients),
                              "noise-wake", self._step)

    def _step(self, t):
        k = self.rng.randrange(len(self.contexts))
        img = self.rng.randrange(len(self.catalog.images))
        ctx = self.contexts[k]
        lo, hi = self.catalog.images[img]
        self.requests += 1
        if not self.seen[k][img]:
            self.seen[k][img] = True
            ready = self.policy.on_allocate(ctx, lo, hi, t)
            self._rest(ready)
        else:
            walk_ranges(self.policy, ctx, [(lo, hi)], t,
                        batch=True, write=False, done=self._rest)

    def _rest(self, t):
        self.sim.schedule(t + self.think_us, "noise-wake", self._step)


class CriticalService:
    def __init__(self, sim, model, policy, collector, rng, threads=16,
                 base_service_us=5000, hot_records=64, hot_record_pages=32,
                 cold_records=1500, cold_record_pages=12, cold_frac=0.024,
                 skew=0.99, draws_per_txn=2):
        self.sim = sim
        self.policy = policy
        self.collector = collector
        self.rng = rng
        self.threads = threads
        self.base_service_us = base_service_us
        self.hot_records = hot_records
        self.hot_record_pages = hot_record_pages
        self.cold_records = cold_records
        self.cold_record_pages = cold_record_pages
        self.cold_frac = cold_frac
        self.draws_per_txn = draws_per_txn
        self.hot_pages = hot_records * hot_record_pages
        self.total_pages = self.hot_pages + cold_records * cold_record_pages
        self.ctx = model.new_context("critical")
        policy.register(self.ctx)
        # rank weights for hot-record popularity; skew 0 = uniform
        self.cum_weight = list(accumulate(
            (r + 1) ** -skew for r in range(hot_records)))
        self.completed = 0

    def start(self):
        self.policy.on_allocate(self.ctx, 0, self.total_pages, 0)
        for _ in range(self.threads):
            self._begin(0)

    def draw_record(self):
        if self.cold_records and self.rng.random() < self.cold_frac:
            j = self.rng.randrange(self.cold_records)
            lo = self.hot_pages + j * self.cold_record_pages
            return (lo, lo + self.cold_record_pages)
        u = self.rng.random() * self.cum_weight[-1]
        r = min(bisect.bisect_left(self.cum_weight, u), self.hot_records - 1)
        lo = r * self.hot_record_pages
        return (lo, lo + self.hot_record_pages)

    def _begin(self, t):
        ranges = [self.draw_record() for _ in range(self.draws_per_txn)]
        walk_ranges(self.policy, self.ctx, ranges, t, batch=False,
                    write=False, done=lambda te, t0=t: self._compute(t0, te))

    def _compute(self, t0, te):
        self.sim.schedule(te + self.base_service_us, "txn-done",
                          lambda t, t0=t0: self._finish(t0, t))

    def _finish(self, t0, t):
        self.completed += 1
        self.collector.record(t - t0, t)
        self._begin(t)


class TraceError(SimulationError):
    pass


def load_trace(path):
    """Parse `time_us context_id page_index {r|w}` lines; `#` starts a
    comment. Returns the record list; malformed input and time regressions
    abort with the offending line number."""
    records = []
    last_t = 0
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise TraceError(f"{path}:{ln}: expected 4 fields, got {len(parts)}")
            t_s, cid, idx_s, rw = parts
            try:
                t = int(t_s)
                idx = int(idx_s)
            except ValueError:
                raise TraceError(f"{path}:{ln}: non-integer time or page index")
            if t < 0 or idx < 0:
                raise TraceError(f"{path}:{ln}: negative time or page index")
            if rw not in ("r", "w"):
                raise TraceError(f"{path}:{ln}: rw flag must be r or w")
            if t < last_t:
                raise TraceError(f"{path}:{ln}: time regression {t} < {last_t}")
            last_t = t
            records.append((t, cid, idx, rw))
    return records


class TraceDriver:
    """Replays records against the active policy at their timestamps.
    Contexts and pages come into being on first reference (that reference
    is the materializing write, not a fault)."""

    def __init__(self, sim, model, policy, records):
        self.sim = sim
        self.model = model
        self.policy = policy
        self.records = records
        self.i = 0
        self.ctxs = {}
        self.accesses = 0

    def start(self):
        if self.records:
            self.sim.schedule(self.records[0][0], "trace", self._fire)

    def _touch(self, ctx, idx, write, t):
        res = self.policy.access_range(ctx, idx, idx + 1, t, write=write)
        if res.wait is not None:
            res.wait.wait(lambda tt: ctx.alive and self._touch(ctx, idx, write, tt))

    def _fire(self, t):
        _, cid, idx, rw = self.records[self.i]
        ctx = self.ctxs.get(cid)
        if ctx is None:
            ctx = self.model.new_context(cid)
            self.policy.register(ctx)
            self.ctxs[cid] = ctx
        self.accesses += 1
        if self.model.lookup(ctx, idx) is None:
            self.policy.on_allocate(ctx, idx, idx + 1, t)
        else:
            self._touch(ctx, idx, rw == "w", t)
        self.i += 1
        if self.i < len(self.records):
            self.sim.schedule(self.records[self.i][0], "trace", self._fire)
