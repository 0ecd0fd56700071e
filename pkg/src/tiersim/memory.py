"""Two-tier page bookkeeping.

Pages are tracked in cohorts: maximal contiguous index runs within one
context whose pages share tier, dirty bit, frequency, queue level and expiry.
Workloads touch contiguous ranges, so cohorts keep policy structures small;
semantics are identical to per-page tracking (a single-page access just
splits a one-page cohort off), which the oracle tests rely on.

Tier states: DRAM, FLASH, INFLIGHT (with direction), DEAD after teardown.
Census identity: dram + flash + inflight == total allocated, always.
Pages are born dirty (their first content has never been written back).
"""

from .core import SimulationError

PAGE_BYTES = 4096

DRAM = 0
FLASH = 1
INFLIGHT = 2
DEAD = 3

TO_DRAM = 0   # inflight direction: fill / demand read / prefetch read
TO_FLASH = 1  # inflight direction: eviction write-back

TIER_NAMES = {DRAM: "dram", FLASH: "flash", INFLIGHT: "inflight", DEAD: "dead"}


class Cohort:
    __slots__ = (
        "ctx", "lo", "hi", "tier", "dirty", "freq", "level", "expire",
        "dir", "io", "prev", "next", "owner", "prefetched",
    )

    def __init__(self, ctx, lo, hi, tier, dirty):
        self.ctx = ctx
        self.lo = lo
        self.hi = hi
        self.tier = tier
        self.dirty = dirty
        self.freq = 0
        self.level = 0
        self.expire = 0
        self.dir = None
        self.io = None          # pending/in-flight device request, if any
        self.prev = None
        self.next = None
        self.owner = None       # PageList currently holding this cohort
        self.prefetched = False

    def pages(self) -> int:
        return self.hi - self.lo

    def __repr__(self):
        return (f"Cohort(ctx={self.ctx.cid}, [{self.lo},{self.hi}), "
                f"{TIER_NAMES[self.tier]}, dirty={self.dirty}, "
                f"freq={self.freq}, level={self.level})")


class PageList:
    """Intrusive doubly-linked list of cohorts. Head is the coldest end."""

    __slots__ = ("head", "tail", "cohorts", "page_count")

    def __init__(self):
        self.head = None
        self.tail = None
        self.cohorts = 0
        self.page_count = 0

    def append(self, c: Cohort):
        # newest at tail
        if c.owner is not None:
            raise SimulationError("cohort already owned by a list")
        c.owner = self
        c.prev = self.tail
        c.next = None
        if self.tail is not None:
            self.tail.next = c
        else:
            self.head = c
        self.tail = c
        self.cohorts += 1
        self.page_count += c.pages()

    def remove(self, c: Cohort):
        if c.owner is not self:
            raise SimulationError("cohort not owned by this list")
        if c.prev is not None:
            c.prev.next = c.next
        else:
            self.head = c.next
        if c.next is not None:
            c.next.prev = c.prev
        else:
            self.tail = c.prev
        c.prev = None
        c.next = None
        c.owner = None
        self.cohorts -= 1
        self.page_count -= c.pages()

    def insert_before(self, c: Cohort, ref: Cohort):
        if ref.owner is not self:
            raise SimulationError("reference cohort not owned by this list")
        if c.owner is not None:
            raise SimulationError("cohort already owned by a list")
        c.owner = self
        c.next = ref
        c.prev = ref.prev
        if ref.prev is not None:
            ref.prev.next = c
        else:
            self.head = c
        ref.prev = c
        self.cohorts += 1
        self.page_count += c.pages()

    def insert_after(self, c: Cohort, ref: Cohort):
        if ref.next is None:
            self.append(c)
        else:
            self.insert_before(c, ref.next)

    def move_to_tail(self, c: Cohort):
        self.remove(c)
        self.append(c)

    def __iter__(self):
        node = self.head
        while node is not None:
            nxt = node.next
            yield node
            node = nxt

    def __len__(self):
        return self.cohorts


ACTIVE = "active"
DORMANT = "dormant"
ACTIVATING = "activating"


class Context:
    __slots__ = (
        "cid", "managed", "alive", "pages", "next_index", "total", "resident",
        # predictive-policy state; unused by the baseline
        "levels", "quota", "score", "window_count", "low_windows", "state",
        "hot_set",
    )

    def __init__(self, cid, managed):
        self.cid = cid
        self.managed = managed
        self.alive = True
        self.pages = {}          # page index -> Cohort
        self.next_index = 0
        self.total = 0
        self.resident = 0        # DRAM pages held by this context
        self.levels = None
        self.quota = 0
        self.score = 0.0
        self.window_count = 0
        self.low_windows = 0
        self.state = ACTIVE
        self.hot_set = None


class MemoryModel:
    def __init__(self, dram_pages: int, flash_pages: int):
        if dram_pages <= 0 or flash_pages <= 0:
            raise SimulationError("tier capacities must be positive")
        self.dram_pages = dram_pages
        self.flash_pages = flash_pages
        self.contexts = {}
        self.dram_used = 0
        self.flash_used = 0
        self.inflight = 0
        self.inflight_in = 0    # subset of inflight headed to DRAM (frame held)
        self.total = 0

    # -- contexts ----------------------------------------------------------

    def new_context(self, cid, managed=True) -> Context:
        if cid in self.contexts:
            raise SimulationError(f"duplicate context id {cid!r}")
        ctx = Context(cid, managed)
        self.contexts[cid] = ctx
        return ctx

    def teardown(self, ctx: Context):
        """Release every page synchronously. Cohorts become DEAD; queued or
        in-flight requests referencing them are dropped at dispatch/completion
        by tier checks."""
        if not ctx.alive:
            raise SimulationError(f"teardown of dead context {ctx.cid!r}")
        for c in set(ctx.pages.values()):
            self._uncount(c)
            c.tier = DEAD
            if c.owner is not None:
                c.owner.remove(c)
        ctx.pages.clear()
        ctx.alive = False
        del self.contexts[ctx.cid]

    # -- page creation and lookup -----------------------------------------

    def free_frames(self) -> int:
        return self.dram_pages - self.dram_used - self.inflight_in

    def create(self, ctx: Context, lo: int, hi: int, tier=DRAM, dirty=True) -> Cohort:
        n = hi - lo
        if n <= 0:
            raise SimulationError("empty page range")
        if not ctx.alive:
            raise SimulationError(f"allocation in dead context {ctx.cid!r}")
        if self.total + n > self.dram_pages + self.flash_pages:
            raise SimulationError(
                f"capacity exhausted: {self.total} allocated + {n} requested "
                f"> {self.dram_pages + self.flash_pages} total pages"
            )
        if tier == DRAM and self.free_frames() < n:
            raise SimulationError(
                f"DRAM overcommit: {n} frames requested, {self.free_frames()} free"
            )
        c = Cohort(ctx, lo, hi, tier, dirty)
        for idx in range(lo, hi):
            if idx in ctx.pages:
                raise SimulationError(f"page {idx} already allocated in {ctx.cid!r}")
            ctx.pages[idx] = c
        ctx.total += n
        self.total += n
        if tier == DRAM:
            self.dram_used += n
            ctx.resident += n
        elif tier == FLASH:
            self.flash_used += n
        else:
            raise SimulationError("pages must be created in DRAM or FLASH")
        return c

    def lookup(self, ctx: Context, idx: int):
        if not ctx.alive:
            raise SimulationError(f"access to dead context {ctx.cid!r}")
        return ctx.pages.get(idx)

    # -- tier transitions --------------------------------------------------

    def _uncount(self, c: Cohort):
        n = c.pages()
        if c.tier == DRAM:
            self.dram_used -= n
            c.ctx.resident -= n
        elif c.tier == FLASH:
            self.flash_used -= n
        elif c.tier == INFLIGHT:
            self.inflight -= n
            if c.dir == TO_DRAM:
                self.inflight_in -= n
        self.total -= n
        c.ctx.total -= n

    def transition(self, c: Cohort, tier: int, direction=None):
        n = c.pages()
        if c.tier == tier and c.dir == direction:
            return
        # leave old tier
        if c.tier == DRAM:
            self.dram_used -= n
            c.ctx.resident -= n
        elif c.tier == FLASH:
            self.flash_used -= n
        elif c.tier == INFLIGHT:
            self.inflight -= n
            if c.dir == TO_DRAM:
                self.inflight_in -= n
        else:
            raise SimulationError("transition from DEAD cohort")
        # enter new tier
        if tier == DRAM:
            if self.dram_used + n > self.dram_pages:
                raise SimulationError("DRAM overcommit on transition")
            self.dram_used += n
            c.ctx.resident += n
            c.dir = None
        elif tier == FLASH:
            self.flash_used += n
            c.dir = None
        elif tier == INFLIGHT:
            if direction not in (TO_DRAM, TO_FLASH):
                raise SimulationError("inflight transition needs a direction")
            self.inflight += n
            if direction == TO_DRAM:
                if self.dram_used + self.inflight_in + n > self.dram_pages:
                    raise SimulationError("DRAM frame overcommit on inbound IO")
                self.inflight_in += n
            c.dir = direction
        else:
            raise SimulationError("bad tier")
        c.tier = tier

    # -- splitting ---------------------------------------------------------

    def extract(self, c: Cohort, lo: int, hi: int) -> Cohort:
        """Carve [lo, hi) out of cohort c and return it as its own cohort.

        c keeps its identity for the untouched remainder (left part if the cut
        is interior). New pieces inherit attributes and, if c sits in a policy
        list, are inserted adjacent to it so ordering is preserved.
        """
        if not (c.lo <= lo < hi <= c.hi):
            raise SimulationError(f"extract [{lo},{hi}) outside cohort [{c.lo},{c.hi})")
        if lo == c.lo and hi == c.hi:
            return c
        ctx = c.ctx
        out = Cohort(ctx, lo, hi, c.tier, c.dirty)
        out.freq, out.level, out.expire = c.freq, c.level, c.expire
        out.dir, out.prefetched = c.dir, c.prefetched
        pieces = []
        if lo == c.lo:
            c.lo = hi                      # out takes the prefix
            pieces = [(out, "before")]
        elif hi == c.hi:
            c.hi = lo                      # out takes the suffix
            pieces = [(out, "after")]
        else:
            right = Cohort(ctx, hi, c.hi, c.tier, c.dirty)
            right.freq, right.level, right.expire = c.freq, c.level, c.expire
            right.dir, right.prefetched = c.dir, c.prefetched
            c.hi = lo
            pieces = [(out, "after"), (right, "after")]
            for idx in range(right.lo, right.hi):
                ctx.pages[idx] = right
        for idx in range(out.lo, out.hi):
            ctx.pages[idx] = out
        if c.owner is not None:
            lst = c.owner
            delta = 0
            for piece, where in pieces:
                if where == "before":
                    lst.insert_before(piece, c)
                else:
                    lst.insert_after(piece, c)
                delta += piece.pages()
            # pages moved out of c but stayed in the same list
            lst.page_count -= delta
        return out

    # -- diagnostics -------------------------------------------------------

    def census(self) -> dict:
        return {
            "dram": self.dram_used,
            "flash": self.flash_used,
            "inflight": self.inflight,
            "total": self.total,
        }

    def check_counters(self):
        if self.dram_used + self.flash_used + self.inflight != self.total:
            raise SimulationError(
                f"census identity broken: {self.census()}"
            )
        if self.dram_used + self.inflight_in > self.dram_pages:
            raise SimulationError(
                f"DRAM overcommitted: used={self.dram_used} "
                f"inbound={self.inflight_in} cap={self.dram_pages}"
            )
        if min(self.dram_used, self.flash_used, self.inflight,
               self.inflight_in, self.total) < 0:
            raise SimulationError(f"negative tier counter: {self.census()}")

    def check_full(self):
        """O(pages) audit: recompute every counter from the cohort map."""
        self.check_counters()
        dram = flash = inflight = inflight_in = total = 0
        for ctx in self.contexts.values():
            seen = set()
            ctx_resident = 0
            for idx, c in ctx.pages.items():
                if not (c.lo <= idx < c.hi):
                    raise SimulationError(f"page map points outside cohort: {idx} {c}")
                if id(c) in seen:
                    continue
                seen.add(id(c))
                n = c.pages()
                total += n
                if c.tier == DRAM:
                    dram += n
                    ctx_resident += n
                elif c.tier == FLASH:
                    flash += n
                elif c.tier == INFLIGHT:
                    inflight += n
                    if c.dir == TO_DRAM:
                        inflight_in += n
                else:
                    raise SimulationError(f"DEAD cohort reachable: {c}")
            if ctx_resident != ctx.resident:
                raise SimulationError(
                    f"context {ctx.cid!r} resident count drifted: "
                    f"{ctx.resident} tracked vs {ctx_resident} actual"
                )
        if (dram, flash, inflight, inflight_in, total) != (
            self.dram_used, self.flash_used, self.inflight,
            self.inflight_in, self.total,
        ):
            raise SimulationError(
                f"counter drift: tracked {self.census()} vs actual "
                f"dram={dram} flash={flash} inflight={inflight} total={total}"
            )
