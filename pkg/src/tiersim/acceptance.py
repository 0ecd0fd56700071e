"""Sweep-shape checks for the headline behaviors: the baseline throughput
cliff at the DRAM crossing, its tail-latency signature, media independence,
predictive-policy stability and overhead, and the crossover point. Each
check reads the merged sweep rows and returns pass/fail with a detail line;
the CLI --check flag prints one line per applicable check and exit code 3
on any failure.
"""

from collections import namedtuple

from .workload import NoiseCatalog

CheckResult = namedtuple("CheckResult", ["name", "ok", "detail"])


def _rows(summaries, policy, device):
    rows = [s for s in summaries if s.policy == policy and s.device == device]
    rows.sort(key=lambda s: s.containers)
    return rows


def _usable(rows):
    return len(rows) >= 2 and all(
        r.tps > 0 and r.p99_us is not None for r in rows)


def check_cliff(rows, dram_pages, scale):
    per = NoiseCatalog(scale).total_pages
    ratio = rows[-1].tps / rows[0].tps
    crossing = next((i for i, r in enumerate(rows)
                     if r.containers * per > dram_pages), None)
    onset = next((i for i, r in enumerate(rows)
                  if r.tps < 0.9 * rows[0].tps), None)
    if crossing is None or onset is None:
        return CheckResult(
            "baseline-cliff", False,
            f"tps_ratio={ratio:.3f} crossing_idx={crossing} onset_idx={onset}")
    ok = ratio <= 0.6 and abs(onset - crossing) <= 2
    return CheckResult(
        "baseline-cliff", ok,
        f"tps_ratio={ratio:.3f} (need <=0.6), onset at "
        f"{rows[onset].containers} vs footprint crossing at "
        f"{rows[crossing].containers} containers "
        f"({abs(onset - crossing)} sweep points apart, need <=2)")


def check_tails(rows):
    base = rows[0]
    p99r = max(r.p99_us for r in rows) / base.p99_us
    maxr = max(r.max_us for r in rows) / base.max_us
    p95r = max(r.p95_us for r in rows) / base.p95_us
    minr = max(r.min_us for r in rows) / base.min_us
    ok = p99r >= 10 and maxr >= 50 and p95r <= 3 and minr <= 1.5
    return CheckResult(
        "tail-structure", ok,
        f"p99x{p99r:.1f} (>=10) maxx{maxr:.1f} (>=50) "
        f"p95x{p95r:.2f} (<=3) minx{minr:.2f} (<=1.5)")


def check_media(rows):
    ratio = rows[-1].tps / rows[0].tps
    p99r = max(r.p99_us for r in rows) / rows[0].p99_us
    ok = ratio <= 0.75 and p99r >= 5
    return CheckResult(
        "media-independence", ok,
        f"flash tps_ratio={ratio:.3f} (<=0.75) p99x{p99r:.1f} (>=5)")


def check_dmx_stability(rows):
    ratio = rows[-1].tps / rows[0].tps
    worst = max(r.p99_us / rows[0].p99_us for r in rows)
    ok = ratio >= 0.85 and worst <= 3
    return CheckResult(
        "dmx-stability", ok,
        f"tps_ratio={ratio:.3f} (>=0.85) worst p99x{worst:.2f} (<=3)")


def check_overhead(dmx_rows, swap_rows):
    d, s = dmx_rows[0], swap_rows[0]
    if d.containers != s.containers:
        return CheckResult("dmx-overhead", False,
                           "first sweep points differ between policies")
    ratio = d.tps / s.tps
    ok = 0.80 <= ratio <= 1.00
    return CheckResult(
        "dmx-overhead", ok,
        f"dmx/swap tps at {d.containers} container(s) = {ratio:.3f} "
        f"(need within [0.80, 1.00])")


def check_crossover(dmx_rows, swap_rows):
    pairs = {s.containers: s for s in swap_rows}
    matched = [(d, pairs[d.containers]) for d in dmx_rows
               if d.containers in pairs]
    if len(matched) < 2:
        return CheckResult("crossover", False, "no matching sweep points")
    k = len(matched)
    while k > 0:
        d, s = matched[k - 1]
        if d.tps > s.tps and d.p99_us < s.p99_us:
            k -= 1
        else:
            break
    ok = k < len(matched)
    at = matched[k][0].containers if ok else None
    return CheckResult(
        "crossover", ok,
        f"dmx beats swap on tps and p99 from {at} containers onward"
        if ok else "dmx never strictly beats swap through the last point")


def evaluate(summaries, dram_pages, scale):
    results = []
    swap_disk = _rows(summaries, "swap", "disk")
    swap_flash = _rows(summaries, "swap", "flash")
    dmx_flash = _rows(summaries, "dmx", "flash")
    if _usable(swap_disk):
        results.append(check_cliff(swap_disk, dram_pages, scale))
        results.append(check_tails(swap_disk))
    if _usable(swap_flash):
        results.append(check_media(swap_flash))
    if _usable(dmx_flash):
        results.append(check_dmx_stability(dmx_flash))
    if _usable(dmx_flash) and _usable(swap_flash):
        results.append(check_overhead(dmx_flash, swap_flash))
        results.append(check_crossover(dmx_flash, swap_flash))
    return results
