"""Block device model: fixed per-request latency + bandwidth transfer term.

Two submission paths:
- demand: client-blocking IO. Completion time is computed at submit from the
  slot schedule (reservation), so the blocked client's resume event can be
  scheduled immediately. `not_before` serializes a chained pair (victim
  write-back, then the demand read into the vacated frame).
- background (evict write-back, prefetch read): queued per class, dispatched
  when a slot goes idle. Strict priority: demand holds reservations, then
  evict, then prefetch; FIFO within a class. Dispatch re-validates every
  queued cohort (a page demand-faulted or reclaimed while queued is dropped
  from the request).

Evict write-backs are buffered: victims leave DRAM at submit (the write
buffer holds the data), so their frames are reusable before the media write
finishes. Prefetch reads take frames only at dispatch and stay queued while
DRAM is full.

Requests never exceed batch_pages; larger submissions split.
"""

from dataclasses import dataclass

from .core import SimulationError, US_PER_S
from .memory import (
    PAGE_BYTES, DRAM, FLASH, INFLIGHT, TO_DRAM, TO_FLASH,
)

DEMAND = 0
EVICT = 1
PREFETCH = 2

KLASS_NAMES = {DEMAND: "demand", EVICT: "evict", PREFETCH: "prefetch"}


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    read_lat_us: int
    write_lat_us: int
    bandwidth_bps: int
    batch_pages: int
    max_inflight: int


PROFILES = {
    "flash": DeviceProfile("flash", 80, 200, 1 * 2**30, 64, 8),
    "disk": DeviceProfile("disk", 4000, 4000, 150 * 2**20, 64, 1),
}


def service_time_us(profile: DeviceProfile, pages: int, write: bool) -> int:
    """Fixed latency once per request plus ceil'd transfer time."""
    if pages <= 0:
        raise SimulationError("service time of an empty request")
    lat = profile.write_lat_us if write else profile.read_lat_us
    num = pages * PAGE_BYTES * US_PER_S
    return lat + -(-num // profile.bandwidth_bps)


class Handle:
    """Aggregates the sub-requests of one submission."""

    __slots__ = ("pages", "remaining", "done_t", "done", "_waiters")

    def __init__(self, pages, nreqs, done_t=None):
        self.pages = pages
        self.remaining = nreqs
        self.done_t = done_t    # known at submit for demand IO
        self.done = nreqs == 0
        self._waiters = []

    def wait(self, fn):
        if self.done:
            raise SimulationError("waiting on a completed handle")
        self._waiters.append(fn)

    def _finish_one(self, t):
        self.remaining -= 1
        if self.remaining == 0:
            self.done = True
            if self.done_t is None or t > self.done_t:
                self.done_t = t
            waiters, self._waiters = self._waiters, []
            for fn in waiters:
                fn(t)


class Request:
    __slots__ = ("klass", "write", "cohorts", "pages", "handle", "cb",
                 "submit_t", "done_t", "src_tier")

    def __init__(self, klass, write, cohorts, pages, handle, cb, submit_t, src_tier):
        self.klass = klass
        self.write = write
        self.cohorts = cohorts
        self.pages = pages
        self.handle = handle
        self.cb = cb
        self.submit_t = submit_t
        self.done_t = None
        self.src_tier = src_tier


def _chunk(cohorts, batch, extract):
    """Split a cohort list into whole-request chunks of <= batch pages,
    extracting at the boundary when a cohort straddles it."""
    chunks = []
    cur, cur_pages = [], 0
    queue = list(cohorts)
    i = 0
    while i < len(queue):
        c = queue[i]
        n = c.pages()
        room = batch - cur_pages
        if n <= room:
            cur.append(c)
            cur_pages += n
            i += 1
        else:
            head = extract(c, c.lo, c.lo + room)
            cur.append(head)
            cur_pages = batch
            # c now holds the remainder and is revisited
        if cur_pages == batch:
            chunks.append((cur, cur_pages))
            cur, cur_pages = [], 0
    if cur:
        chunks.append((cur, cur_pages))
    return chunks


class Device:
    def __init__(self, sim, model, profile: DeviceProfile):
        self.sim = sim
        self.model = model
        self.profile = profile
        self._busy = [0] * profile.max_inflight
        self._queues = {EVICT: [], PREFETCH: []}  # FIFO via index
        self._qhead = {EVICT: 0, PREFETCH: 0}
        self.stats = {
            "demand_ios": 0, "evict_ios": 0, "prefetch_ios": 0,
            "pages_read": 0, "pages_written": 0,
            "busy_us": 0, "dropped_requests": 0,
        }
        self.dispatch_log = None  # (t, klass, evict_q, prefetch_q) when enabled

    # -- demand path -------------------------------------------------------

    def submit_demand(self, cohorts, t, write=False, not_before=0, cb=None) -> Handle:
        """Reserve slots now; returns a handle with done_t already known.
        Cohorts transition to INFLIGHT immediately."""
        pages = sum(c.pages() for c in cohorts)
        if pages == 0:
            return Handle(0, 0, done_t=t)
        chunks = _chunk(cohorts, self.profile.batch_pages, self.model.extract)
        handle = Handle(pages, len(chunks))
        last_done = 0
        direction = TO_FLASH if write else TO_DRAM
        for chunk, n in chunks:
            req = Request(DEMAND, write, chunk, n, handle, cb, t,
                          DRAM if write else FLASH)
            for c in chunk:
                if c.owner is not None:
                    c.owner.remove(c)
                self.model.transition(c, INFLIGHT, direction)
                c.io = req
            svc = service_time_us(self.profile, n, write)
            slot = min(range(len(self._busy)), key=self._busy.__getitem__)
            start = max(t, not_before, self._busy[slot])
            done = start + svc
            self._busy[slot] = done
            req.done_t = done
            last_done = max(last_done, done)
            self.stats["busy_us"] += svc
            self.sim.schedule(done, "io-done", lambda at, r=req: self._complete(r, at))
        handle.done_t = last_done
        return handle

    # -- background path ---------------------------------------------------

    def submit_background(self, klass, cohorts, t, cb=None) -> Handle:
        """Queue evict write-backs or prefetch reads. Evict victims go
        inflight right away (buffered write, frame free now); prefetch
        sources stay on flash until dispatch, marked with the pending
        request so other planners skip them."""
        if klass not in (EVICT, PREFETCH):
            raise SimulationError(f"background class must be evict or prefetch")
        write = klass == EVICT
        pages = sum(c.pages() for c in cohorts)
        if pages == 0:
            return Handle(0, 0, done_t=t)
        chunks = _chunk(cohorts, self.profile.batch_pages, self.model.extract)
        handle = Handle(pages, len(chunks))
        src = INFLIGHT if write else FLASH
        for chunk, n in chunks:
            req = Request(klass, write, chunk, n, handle, cb, t, src)
            for c in chunk:
                if write:
                    if c.owner is not None:
                        c.owner.remove(c)
                    self.model.transition(c, INFLIGHT, TO_FLASH)
                c.io = req
            self._queues[klass].append(req)
        self._dispatch(t)
        return handle

    def _idle_slot(self, t):
        slot = min(range(len(self._busy)), key=self._busy.__getitem__)
        return slot if self._busy[slot] <= t else None

    def _dispatch(self, t):
        while True:
            req = None
            for klass in (EVICT, PREFETCH):
                q, h = self._queues[klass], self._qhead[klass]
                if h < len(q):
                    req = q[h]
                    break
            if req is None:
                for klass in (EVICT, PREFETCH):
                    self._queues[klass].clear()
                    self._qhead[klass] = 0
                return
            slot = self._idle_slot(t)
            if slot is None:
                return
            # re-validate: drop cohorts whose state moved on while queued
            live = [c for c in req.cohorts
                    if c.tier == req.src_tier and c.io is req and c.ctx.alive]
            req.cohorts = live
            req.pages = sum(c.pages() for c in live)
            if req.pages == 0:
                self._qhead[req.klass] += 1
                self.stats["dropped_requests"] += 1
                req.handle._finish_one(t)
                continue
            if not req.write and self.model.free_frames() < req.pages:
                return  # inbound prefetch blocked until frames open up
            self._qhead[req.klass] += 1
            if self.dispatch_log is not None:
                self.dispatch_log.append(
                    (t, req.klass, self.queued_requests(EVICT),
                     self.queued_requests(PREFETCH)))
            direction = TO_FLASH if req.write else TO_DRAM
            for c in live:
                if c.owner is not None:
                    c.owner.remove(c)
                self.model.transition(c, INFLIGHT, direction)
            svc = service_time_us(self.profile, req.pages, req.write)
            done = t + svc
            self._busy[slot] = done
            req.done_t = done
            self.stats["busy_us"] += svc
            self.sim.schedule(done, "io-done", lambda at, r=req: self._complete(r, at))

    # -- completion --------------------------------------------------------

    def _complete(self, req, t):
        landed = []
        for c in req.cohorts:
            if c.tier != INFLIGHT or c.io is not req:
                continue  # context torn down mid-flight
            c.io = None
            if req.write:
                self.model.transition(c, FLASH)
                c.dirty = False
            else:
                self.model.transition(c, DRAM)
            landed.append(c)
        key = {DEMAND: "demand_ios", EVICT: "evict_ios", PREFETCH: "prefetch_ios"}
        self.stats[key[req.klass]] += 1
        if req.write:
            self.stats["pages_written"] += req.pages
        else:
            self.stats["pages_read"] += req.pages
        if req.cb is not None:
            req.cb(req, landed, t)
        req.handle._finish_one(t)
        self._dispatch(t)

    # -- diagnostics -------------------------------------------------------

    def queued_requests(self, klass) -> int:
        return len(self._queues[klass]) - self._qhead[klass]

    def bytes_moved(self) -> int:
        return (self.stats["pages_read"] + self.stats["pages_written"]) * PAGE_BYTES
