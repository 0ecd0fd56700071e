"""Experiment configuration: a flat `key = value` file format with dotted
keys, a typed defaults registry, and strict unknown-key rejection.
Precedence is flags > file > defaults. The resolved configuration can be
rendered back out; re-running from that echo reproduces the run.
"""


class ConfigError(Exception):
    pass


def _int(s):
    return int(s, 0) if isinstance(s, str) else int(s)


def _float(s):
    return float(s)


def _str(s):
    return str(s)


def _containers(s):
    if isinstance(s, list):
        return list(s)
    s = s.strip()
    if ":" in s:
        parts = s.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"bad range {s!r}")
        start, stop = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        if step <= 0:
            raise ValueError("range step must be positive")
        return list(range(start, stop + 1, step))
    return [int(x) for x in s.split(",") if x.strip()]


# key -> (parser, default); None default = "unset" (profile value applies)
DEFAULTS = {
    "policy": (_str, "swap"),
    "device": (_str, "disk"),
    "containers": (_containers, list(range(1, 50, 2))),
    "duration_s": (_float, 60.0),
    "warmup_s": (_float, 5.0),
    "seed": (_int, 42),
    "scale": (_int, 1024),
    "mem.dram_pages": (_int, 65536),
    "mem.flash_pages": (_int, 524288),
    "device.read_lat_us": (_int, None),
    "device.write_lat_us": (_int, None),
    "device.bandwidth_bps": (_int, None),
    "device.batch_pages": (_int, None),
    "device.max_inflight": (_int, None),
    "noise.clients": (_int, 192),
    "noise.think_us": (_int, 150_000),
    "critical.threads": (_int, 16),
    "critical.base_service_us": (_int, 5000),
    "critical.hot_records": (_int, 64),
    "critical.hot_record_pages": (_int, 32),
    "critical.cold_records": (_int, 1500),
    "critical.cold_record_pages": (_int, 12),
    "critical.cold_frac": (_float, 0.024),
    "critical.skew": (_float, 0.99),
    "critical.draws_per_txn": (_int, 2),
    "swap.fault_overhead_us": (_int, 6000),
    "swap.reclaim_batch": (_int, 32),
    "dmx.levels": (_int, 8),
    "dmx.lifetime_us": (_int, 100_000),
    "dmx.window_us": (_int, 100_000),
    "dmx.alpha": (_float, 0.3),
    "dmx.dormant_threshold": (_float, 1.0),
    "dmx.dormant_windows": (_int, 5),
    "dmx.floor_pages": (_int, 64),
    "dmx.reserve_frac": (_float, 0.02),
    "dmx.fault_overhead_us": (_int, 0),
}

_POLICIES = ("swap", "dmx", "both")
_DEVICES = ("flash", "disk")


def parse_config_file(path):
    values = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    with fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected `key = value`")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def resolve(file_values=None, flag_values=None):
    cfg = {k: default for k, (_, default) in DEFAULTS.items()}
    for source, values in (("config", file_values), ("flag", flag_values)):
        for key, raw in (values or {}).items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown {source} key: {key}")
            parser = DEFAULTS[key][0]
            try:
                cfg[key] = parser(raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})")
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg["policy"] not in _POLICIES:
        raise ConfigError(f"policy must be one of {_POLICIES}")
    if cfg["device"] not in _DEVICES:
        raise ConfigError(f"device must be one of {_DEVICES}")
    cs = cfg["containers"]
    if not cs:
        raise ConfigError("containers: list must be non-empty")
    if any(b <= a for a, b in zip(cs, cs[1:])):
        raise ConfigError("containers: list must be strictly increasing")
    if cs[0] < 0:
        raise ConfigError("containers: counts must be non-negative")
    if cfg["duration_s"] <= cfg["warmup_s"]:
        raise ConfigError(
            f"duration_s={cfg['duration_s']} must exceed warmup_s={cfg['warmup_s']}")
    if cfg["scale"] < 1:
        raise ConfigError("scale must be >= 1")
    for key in ("mem.dram_pages", "mem.flash_pages", "critical.threads",
                "noise.think_us", "critical.base_service_us",
                "critical.hot_records", "critical.hot_record_pages",
                "dmx.levels", "dmx.window_us", "dmx.lifetime_us"):
        if cfg[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    for key in ("noise.clients", "swap.fault_overhead_us", "swap.reclaim_batch",
                "critical.cold_records", "critical.cold_record_pages",
                "dmx.floor_pages", "dmx.dormant_windows",
                "dmx.fault_overhead_us"):
        if cfg[key] < 0:
            raise ConfigError(f"{key} must be non-negative")
    if not (0.0 <= cfg["critical.cold_frac"] <= 1.0):
        raise ConfigError("critical.cold_frac must be in [0, 1]")
    if not (0.0 < cfg["dmx.alpha"] <= 1.0):
        raise ConfigError("dmx.alpha must be in (0, 1]")
    if not (0.0 <= cfg["dmx.reserve_frac"] < 1.0):
        raise ConfigError("dmx.reserve_frac must be in [0, 1)")


def render(cfg):
    lines = []
    for key in sorted(cfg):
        val = cfg[key]
        if val is None:
            continue
        if key == "containers":
            val = ",".join(str(c) for c in val)
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"
