"""Event-based source and detector model.

A pulse pair is emitted at a Poisson time with a random variant n. Variant 0
sends a vertical pulse left and a horizontal pulse right; variant 1 swaps
them. Each pulse yields at most one photoelectron, routed to the + or -
port with Malus-law probability and released uniformly within the pulse
length.

Randomness per pulse comes from a counter-based Philox stream: pulse ``i``
owns counter block ``i``, so any subset of pulses can be regenerated
independently and serial, chunked or parallel runs agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

# uniforms per pulse: variant, (efficiency, channel, delay) for L then R, spare
DRAWS_PER_PULSE = 8
_PHILOX_WORDS = 4  # 64-bit outputs per Philox counter step
_BLOCK = DRAWS_PER_PULSE // _PHILOX_WORDS

_TIMING_STREAM = 0
_PULSE_STREAM = 1


@dataclass(frozen=True)
class SourceConfig:
    """Source and detector parameters.

    ``rate * pulse_length`` is the overlap density: the mean number of other
    pulse pairs emitted within one pulse length. The defaults are artifact
    choices, not measured crystal values.
    """

    rate: float = 1e4
    pulse_length: float = 1e-6
    duration: float = 10.0
    efficiency: float = 1.0
    seed: int = 0
    single_variant: Optional[int] = None

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"rate must be positive, got {self.rate!r}")
        if not (math.isfinite(self.pulse_length) and self.pulse_length > 0):
            raise ValueError(f"pulse_length must be positive, got {self.pulse_length!r}")
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ValueError(f"duration must be non-negative, got {self.duration!r}")
        if not (0 < self.efficiency <= 1):
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency!r}")
        if not (0 <= int(self.seed) < 2**64) or int(self.seed) != self.seed:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.single_variant not in (None, 0, 1):
            raise ValueError(f"single_variant must be None, 0 or 1, got {self.single_variant!r}")

    @property
    def overlap_density(self) -> float:
        return self.rate * self.pulse_length


@dataclass(frozen=True)
class PulsePair:
    id: int
    t_emit: float
    variant: int


@dataclass(frozen=True)
class DetectionEvent:
    side: str
    channel: int  # +1 or -1
    time: float
    pulse_id: int  # diagnostic only


@dataclass(frozen=True)
class Emissions:
    t_emit: np.ndarray
    variant: np.ndarray

    def __len__(self):
        return len(self.t_emit)

    def __iter__(self) -> Iterator[PulsePair]:
        for i, (t, n) in enumerate(zip(self.t_emit.tolist(), self.variant.tolist())):
            yield PulsePair(i, t, n)


@dataclass(frozen=True, eq=False)
class EventStream:
    """Time-sorted detections on one side, stored column-wise."""

    side: str
    time: np.ndarray
    channel: np.ndarray
    pulse_id: np.ndarray

    def __post_init__(self):
        for arr in (self.time, self.channel, self.pulse_id):
            arr.flags.writeable = False

    @classmethod
    def from_times(cls, side: str, times, channels=None, pulse_ids=None) -> "EventStream":
        t = np.array(times, dtype=float)
        ch = np.ones(len(t), dtype=np.int8) if channels is None else np.array(channels, dtype=np.int8)
        ids = np.arange(len(t), dtype=np.int64) if pulse_ids is None else np.array(pulse_ids, dtype=np.int64)
        return cls(side, t, ch, ids)

    def __len__(self):
        return len(self.time)

    def __iter__(self) -> Iterator[DetectionEvent]:
        for t, c, p in zip(self.time.tolist(), self.channel.tolist(), self.pulse_id.tolist()):
            yield DetectionEvent(self.side, c, t, p)

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.side == other.side
            and np.array_equal(self.time, other.time)
            and np.array_equal(self.channel, other.channel)
            and np.array_equal(self.pulse_id, other.pulse_id)
        )


def derive_seed(master: int, *index: int) -> int:
    """Independent 64-bit seed for sub-run ``index`` of a master seed."""
    ss = np.random.SeedSequence([int(master), *map(int, index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _philox(seed: int, stream: int) -> np.random.Philox:
    key = np.random.SeedSequence([int(seed), stream]).generate_state(2, dtype=np.uint64)
    return np.random.Philox(key=key)


def pulse_uniforms(seed: int, pulse_ids) -> np.ndarray:
    """Uniform draws ``(len(pulse_ids), DRAWS_PER_PULSE)`` owned by each pulse."""
    ids = np.asarray(pulse_ids, dtype=np.int64)
    out = np.empty((ids.size, DRAWS_PER_PULSE))
    if ids.size == 0:
        return out
    if np.array_equal(ids, np.arange(ids[0], ids[0] + ids.size)):
        gen = np.random.Generator(_philox(seed, _PULSE_STREAM).advance(_BLOCK * int(ids[0])))
        return gen.random((ids.size, DRAWS_PER_PULSE))
    for row, i in enumerate(ids.tolist()):
        gen = np.random.Generator(_philox(seed, _PULSE_STREAM).advance(_BLOCK * i))
        out[row] = gen.random(DRAWS_PER_PULSE)
    return out


def _emit(config: SourceConfig) -> tuple[Emissions, np.ndarray]:
    gen = np.random.Generator(_philox(config.seed, _TIMING_STREAM))
    n = int(gen.poisson(config.rate * config.duration)) if config.duration > 0 else 0
    t = np.sort(gen.uniform(0.0, config.duration, n))
    u = pulse_uniforms(config.seed, np.arange(n))
    if config.single_variant is None:
        variant = (u[:, 0] < 0.5).astype(np.int8)
    else:
        variant = np.full(n, config.single_variant, dtype=np.int8)
    return Emissions(t, variant), u


def generate_emissions(config: SourceConfig) -> Emissions:
    """Homogeneous Poisson emission times on [0, duration], variants Bernoulli(1/2)."""
    return _emit(config)[0]


def pulse_polarization(side: str, variant) -> float:
    """Polarization angle of the pulse sent to ``side``; 0 = horizontal."""
    if variant not in (0, 1):
        raise ValueError(f"variant must be 0 or 1, got {variant!r}")
    if side == "L":
        return math.pi / 2 if variant == 0 else 0.0
    if side == "R":
        return 0.0 if variant == 0 else math.pi / 2
    raise ValueError(f"side must be 'L' or 'R', got {side!r}")


def _polarizations(side: str, variant: np.ndarray) -> np.ndarray:
    vertical_when = 0 if side == "L" else 1
    return np.where(variant == vertical_when, np.pi / 2, 0.0)


def _detect_arrays(pol, analyzer, t_arrive, l, efficiency, u_eff, u_chan, u_delay):
    detected = u_eff < efficiency
    plus = u_chan < np.cos(pol - analyzer) ** 2
    channel = np.where(plus, 1, -1).astype(np.int8)
    time = t_arrive + u_delay * l
    return detected, channel, time


def detect(pol, analyzer, t_arrive, l, efficiency, rng, *, side="L", pulse_id=-1):
    """Single-pulse photodetection; ``None`` when no photoelectron is produced."""
    if not l > 0:
        raise ValueError(f"pulse length must be positive, got {l!r}")
    if not 0 < efficiency <= 1:
        raise ValueError(f"efficiency must lie in (0, 1], got {efficiency!r}")
    u_eff, u_chan, u_delay = rng.random(3)
    detected, channel, time = _detect_arrays(
        pol, analyzer, t_arrive, l, efficiency, u_eff, u_chan, u_delay
    )
    if not detected:
        return None
    return DetectionEvent(side, int(channel), float(time), int(pulse_id))


def run_experiment(config: SourceConfig, zl: float, zr: float) -> tuple[EventStream, EventStream]:
    """Simulate both stations; returns time-sorted (left, right) streams.

    Source-detector propagation delays are zero on both sides.
    """
    em, u = _emit(config)
    ids = np.arange(len(em), dtype=np.int64)
    streams = []
    for side, analyzer, col in (("L", zl, 1), ("R", zr, 4)):
        pol = _polarizations(side, em.variant)
        detected, channel, time = _detect_arrays(
            pol, analyzer, em.t_emit, config.pulse_length, config.efficiency,
            u[:, col], u[:, col + 1], u[:, col + 2],
        )
        order = np.argsort(time[detected], kind="stable")
        streams.append(
            EventStream(side, time[detected][order], channel[detected][order], ids[detected][order])
        )
    return streams[0], streams[1]


def format_float(x: float) -> str:
    # 17 significant digits: exact round trip, locale independent
    return format(float(x), ".16e")


def write_events_csv(fh, left: EventStream, right: EventStream) -> None:
    """Write both streams merged by time: ``side,channel,time,pulse_id``."""
    fh.write("side,channel,time,pulse_id\n")
    times = np.concatenate([left.time, right.time])
    order = np.argsort(times, kind="stable")
    sides = ["L"] * len(left) + ["R"] * len(right)
    channels = np.concatenate([left.channel, right.channel]).tolist()
    ids = np.concatenate([left.pulse_id, right.pulse_id]).tolist()
    times = times.tolist()
    for k in order.tolist():
        sign = "+" if channels[k] > 0 else "-"
        fh.write(f"{sides[k]},{sign},{format_float(times[k])},{ids[k]}\n")
