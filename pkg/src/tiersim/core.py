"""Discrete-event kernel: integer-microsecond clock, deterministic ordering.

Events at the same timestamp fire in scheduling order (monotonic sequence
number breaks ties), so a run is a pure function of config + seed.
"""

import heapq

US_PER_S = 1_000_000

_MASK64 = (1 << 64) - 1


class SimulationError(Exception):
    """Fatal model violation; the CLI maps this to exit code 2."""


class SplitMix64:
    """Deterministic 64-bit generator (Steele et al. constants).

    Integer-only so streams are identical on every platform; cheap to fork
    into independent substreams via derive().
    """

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n), rejection-sampled to avoid modulo bias."""
        if n <= 0:
            raise ValueError(f"randrange bound must be positive, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def random(self) -> float:
        # 53 mantissa bits -> uniform in [0, 1)
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def fork(self, salt: int) -> "SplitMix64":
        """Independent substream keyed off the original seed, not current state,
        so fork order does not depend on how much this stream was consumed."""
        return SplitMix64(mix_seed(self.seed, salt))


def mix_seed(*parts: int) -> int:
    """Combine integers into one 64-bit seed (order-sensitive)."""
    acc = 0x243F6A8885A308D3
    for p in parts:
        g = SplitMix64((acc ^ (p & _MASK64)) & _MASK64)
        acc = g.next_u64()
    return acc


class Simulator:
    __slots__ = ("now", "_heap", "_seq", "_event_log", "post_event_hook")

    def __init__(self):
        self.now = 0
        self._heap = []
        self._seq = 0
        self._event_log = None  # list of (time, seq, kind) when enabled
        self.post_event_hook = None  # invariant checks in tests

    def enable_event_log(self):
        self._event_log = []

    def schedule(self, at: int, kind: str, fn) -> int:
        if at < self.now:
            raise SimulationError(
                f"schedule into the past: at={at} now={self.now} kind={kind}"
            )
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (at, seq, kind, fn))
        return seq

    def run(self, until: int) -> int:
        """Process events with time <= until; returns count processed."""
        processed = 0
        heap = self._heap
        while heap and heap[0][0] <= until:
            at, seq, kind, fn = heapq.heappop(heap)
            self.now = at
            if self._event_log is not None:
                self._event_log.append((at, seq, kind))
            fn(at)
            processed += 1
            if self.post_event_hook is not None:
                self.post_event_hook()
        if self.now < until:
            self.now = until
        return processed

    def drain(self) -> int:
        """Run until the queue is empty."""
        processed = 0
        while self._heap:
            processed += self.run(self._heap[0][0])
        return processed

    def dump_events(self, path: str):
        if self._event_log is None:
            raise SimulationError("event log was not enabled for this run")
        with open(path, "w") as f:
            for at, seq, kind in self._event_log:
                f.write(f"{at}\t{seq}\t{kind}\n")
