"""Flat ``key = value`` scenario configuration.

One setting per line, dotted section prefixes, ``#`` starts a comment.
Unknown keys and malformed values raise :class:`ConfigError` naming the
offending line and key. Every key and its default is listed in ``KEYS``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .errors import ConfigError
from .faults import DelaySpec, Pause, SdcFlip

SCENARIOS = ("dht-torn", "partial-loss", "sdc", "pfc-stall", "ecmp", "table1")


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _nonneg_int(text: str) -> int:
    v = int(text, 0)
    if v < 0:
        raise ValueError("must be >= 0")
    return v


def _pos_int(text: str) -> int:
    v = int(text, 0)
    if v <= 0:
        raise ValueError("must be > 0")
    return v


def _rate(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise ValueError("must lie in [0, 1]")
    return v


def _delay(text: str) -> DelaySpec:
    """``10`` or ``5..15``."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return DelaySpec(int(lo), int(hi))
    return DelaySpec.constant(int(text))


def _items(text: str) -> list[str]:
    if text.strip().lower() in ("", "none"):
        return []
    return [t.strip() for t in text.split(",") if t.strip()]


def _flips(text: str) -> tuple:
    """``op:chunk:bit`` entries, comma separated."""
    out = []
    for item in _items(text):
        op, chunk, bit = (int(x) for x in item.split(":"))
        out.append(SdcFlip(op, chunk, bit))
    return tuple(out)


def _drops(text: str) -> frozenset:
    """``op:chunk`` entries, comma separated."""
    out = set()
    for item in _items(text):
        op, chunk = (int(x) for x in item.split(":"))
        out.add((op, chunk))
    return frozenset(out)


def _pauses(text: str) -> tuple:
    """``class@start+duration`` entries, comma separated."""
    out = []
    for item in _items(text):
        cls, rest = item.split("@")
        start, dur = rest.split("+")
        out.append(Pause(int(cls), int(start), int(dur)))
    return tuple(out)


def _choice(*allowed: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}")
        return text
    return parse


def _text(text: str) -> str:
    return text


def _path(text: str) -> Optional[str]:
    return text or None


# key -> (parser, default text, help)
KEYS: dict[str, tuple[Callable[[str], Any], str, str]] = {
    "scenario": (_choice(*SCENARIOS), "dht-torn", "which experiment to run"),
    "seed": (_nonneg_int, "0", "root seed for every random stream"),
    "mode": (_text, "", "scenario mode; empty picks the scenario's first mode"),
    "trials": (_pos_int, "1000", "repetitions for trial-based scenarios"),
    "transport.mode": (_choice("RC", "UC", "connectionless"), "RC", "transport semantics"),
    "transport.mtu_bytes": (_pos_int, "4096", "chunk size on the wire"),
    "transport.priority_class": (_nonneg_int, "0", "PFC class of the main queue pair"),
    "transport.max_passes": (_pos_int, "64", "transmission passes before giving up"),
    "timing.dma_ticks": (_nonneg_int, "1", "T0 to T1"),
    "timing.wire_ticks": (_nonneg_int, "2", "one-way wire latency"),
    "timing.ack_ticks": (_nonneg_int, "1", "remote placement to completion"),
    "timing.timeout_ticks": (_pos_int, "8", "retransmission timeout"),
    "memory.visibility_mode": (_choice("per-op", "per-line"), "per-op", "how placed lines become visible"),
    "memory.line_stride_ticks": (_nonneg_int, "1", "spacing between lines in per-line mode"),
    "faults.chunk_loss_rate": (_rate, "0", "independent per-chunk loss probability"),
    "faults.drop_chunks": (_drops, "none", "forced first-pass drops, op:chunk"),
    "faults.sdc_flips": (_flips, "none", "explicit bit flips, op:chunk:bit"),
    "faults.visibility_delay": (_delay, "0", "ticks from completion to visibility, n or lo..hi"),
    "faults.wire_jitter": (_delay, "0", "extra per-op wire ticks, n or lo..hi"),
    "faults.pauses": (_pauses, "none", "PFC pauses, class@start+duration"),
    "object.size_bytes": (_pos_int, "304", "object or message size"),
    "object.reader_passes": (_choice("1", "2"), "1", "reader passes raced against the writer"),
    "object.interleavings": (_choice("enumerate-all", "seeded-random"), "enumerate-all",
                             "how writer/reader schedules are chosen"),
    "object.random_schedules": (_pos_int, "1000", "schedule count in seeded-random mode"),
    "object.max_retries": (_nonneg_int, "16", "optimistic read retry budget"),
    "invariant.id": (_text, "dht-entry", "receiver-side semantic check"),
    "invariant.expected_schema": (_nonneg_int, "1", "schema the sender expects"),
    "invariant.receiver_schema": (_nonneg_int, "1", "schema the receiver reports"),
    "oae.reflect_loss_exempt": (_bool, "true", "digest return path never drops"),
    "oae.reflect_timeout_ticks": (_pos_int, "50", "sender wait for a digest"),
    "oae.reflect_latency_ticks": (_nonneg_int, "0", "digest return latency"),
    "oae.skip_reflect": (_bool, "false", "broken guard that commits at completion (fixture)"),
    "profile.ualink_assumption": (_choice("coherent", "non-coherent"), "coherent",
                                  "visibility model assumed for UALink"),
    "pfc.ops_per_class": (_pos_int, "4", "writes posted on each priority class"),
    "pfc.post_interval_ticks": (_pos_int, "2", "spacing between posts"),
    "ecmp.flows": (_pos_int, "8", "flow count"),
    "ecmp.paths": (_pos_int, "16", "path count"),
    "ecmp.qps": (_pos_int, "1", "queue pairs per flow"),
    "ecmp.trials": (_pos_int, "100000", "Monte Carlo trials"),
    "output.trace": (_path, "", "trace file path"),
    "output.report": (_path, "", "report file path"),
}

# per-scenario defaults that differ from the global ones
SCENARIO_DEFAULTS = {
    "partial-loss": {"transport.mtu_bytes": "256", "object.size_bytes": "262144",
                     "faults.drop_chunks": "1:511", "mode": "RC", "invariant.id": "none"},
    "sdc": {"object.size_bytes": "256", "invariant.id": "none", "mode": "rdma"},
    "pfc-stall": {"faults.pauses": "0@4+20", "object.size_bytes": "256", "invariant.id": "none",
                  "mode": "rdma"},
    "dht-torn": {"mode": "plain"},
}


@dataclass
class ScenarioConfig:
    """Parsed settings; ``explicit`` holds the keys set in the source text."""

    values: dict = field(default_factory=dict)
    explicit: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def scenario(self) -> str:
        return self.values["scenario"]

    @property
    def seed(self) -> int:
        return self.values["seed"]

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        """Copy with ``key=text`` overrides; dotted keys use ``__`` (``faults__pauses``)."""
        text = dict(self.explicit)
        for k, v in overrides.items():
            text[k.replace("__", ".")] = str(v)
        return build_config(text)

    def dump(self) -> str:
        """Canonical text form: reparsing it gives an equal config."""
        return "".join(f"{k} = {v}\n" for k, v in sorted(self.explicit.items()))


def build_config(pairs: dict, lines: Optional[dict] = None) -> ScenarioConfig:
    lines = lines or {}
    for key in pairs:
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lines.get(key), key)
    scenario = pairs.get("scenario", KEYS["scenario"][1])
    try:
        KEYS["scenario"][0](scenario)
    except ValueError as exc:
        raise ConfigError(str(exc), lines.get("scenario"), "scenario") from None
    text = {k: d for k, (_, d, _h) in KEYS.items()}
    text.update(SCENARIO_DEFAULTS.get(scenario, {}))
    text.update(pairs)
    values = {}
    for key, raw in text.items():
        try:
            values[key] = KEYS[key][0](raw.strip())
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value {raw!r}: {exc}", lines.get(key), key) from None
    return ScenarioConfig(values, dict(pairs))


def parse_config(text: str) -> ScenarioConfig:
    pairs, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno, None)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, key)
        if key in pairs:
            raise ConfigError(f"duplicate key {key!r}", lineno, key)
        pairs[key] = value
        lines[key] = lineno
    return build_config(pairs, lines)


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def default_config(scenario: str, **overrides) -> ScenarioConfig:
    return ScenarioConfig().with_overrides(scenario=scenario, **overrides)


def describe_keys() -> str:
    return "".join(f"{k:<28} {d or '(empty)':<16} {h}\n" for k, (_, d, h) in KEYS.items())
