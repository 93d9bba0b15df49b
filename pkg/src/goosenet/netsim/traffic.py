"""Traffic source descriptions and their arrival-time laws."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Union

from ..codec.ethernet import MacAddress
from ..codec.goose import BitString, DataValue
from ..engine import RetransmissionProfile

NS_PER_S = 1_000_000_000


@dataclass(frozen=True)
class GoosePublisher:
    """GOOSE control block published by an IED.

    Events fire at ``event_times_ns`` if given, else every ``event_period_ns``
    starting at ``first_event_ns``. Each event flips the first boolean in the
    dataset. ``frame_bytes`` pads the goID so the first frame has that size.
    """

    node: str
    dst: MacAddress = MacAddress.parse("01:0c:cd:01:00:01")
    appid: int = 0x0001
    priority: int = 4
    vid: int | None = 1
    profile: RetransmissionProfile = field(default_factory=RetransmissionProfile)
    event_times_ns: tuple[int, ...] = ()
    event_period_ns: int | None = NS_PER_S
    first_event_ns: int = 0
    gocb_ref: str = "IED1LD0/LLN0$GO$gcb01"
    dat_set: str = "IED1LD0/LLN0$ds01"
    go_id: str = "IED1LD0/LLN0.gcb01"
    conf_rev: int = 1
    dataset: tuple[DataValue, ...] = (False, BitString.from_bits("0" * 13))
    frame_bytes: int | None = None


@dataclass(frozen=True)
class SvStream:
    node: str
    dst: MacAddress = MacAddress.parse("01:0c:cd:04:00:01")
    appid: int = 0x4000
    samples_per_cycle: int = 256
    frequency_hz: int = 50
    frame_bytes: int = 230
    priority: int = 4
    vid: int | None = 2
    sv_id: str = "MU01"
    conf_rev: int = 1
    start_ns: int = 0


@dataclass(frozen=True)
class Background:
    """Best-effort (or any class) filler traffic towards ``dst``.

    ``load_fraction`` is the long-run share of the sender's link. Arrivals
    are bursts of ``burst`` back-to-back frames, either strictly periodic or
    a seeded Poisson process. Frames are 802.1p tagged when ``priority`` > 0
    or ``vid`` is set.
    """

    node: str
    dst: str | MacAddress
    load_fraction: float
    frame_bytes: int = 1000
    priority: int = 0
    law: str = "periodic"
    burst: int = 1
    vid: int | None = None
    start_ns: int = 0


TrafficSpec = Union[GoosePublisher, SvStream, Background]


def sv_bandwidth(samples_per_cycle: int, frequency_hz: int, frame_bytes: int) -> int:
    """Offered bits per second of a one-ASDU-per-frame SV stream."""
    for name, value in (
        ("samples_per_cycle", samples_per_cycle),
        ("frequency_hz", frequency_hz),
        ("frame_bytes", frame_bytes),
    ):
        if value <= 0:
            raise ValueError(f"{name} must be positive, got {value}")
    return samples_per_cycle * frequency_hz * frame_bytes * 8


def sv_frame_rate(samples_per_cycle: int, frequency_hz: int) -> int:
    if samples_per_cycle <= 0 or frequency_hz <= 0:
        raise ValueError("sampling parameters must be positive")
    return samples_per_cycle * frequency_hz


def periodic_times(start_ns: int, period: Fraction, until_ns: int) -> Iterator[int]:
    """``start + floor(k * period)`` for k = 0, 1, ... while <= until."""
    k = 0
    while True:
        t = start_ns + (k * period.numerator) // period.denominator
        if t > until_ns:
            return
        yield t
        k += 1


def burst_period(spec: Background, bandwidth: int) -> Fraction:
    """Mean gap in ns between bursts that yields the requested load."""
    if not 0.0 <= spec.load_fraction < 1.0:
        raise ValueError(f"load_fraction must be in [0, 1), got {spec.load_fraction}")
    bits = spec.frame_bytes * 8 * spec.burst
    return Fraction(bits * NS_PER_S) / (Fraction(spec.load_fraction) * bandwidth)


def background_schedule(
    spec: Background, bandwidth: int, until_ns: int, rng: random.Random | None = None
) -> Iterator[int]:
    """Arrival instants of bursts (each ``spec.burst`` frames) up to ``until_ns``."""
    if not 0.0 <= spec.load_fraction < 1.0:
        raise ValueError(f"load_fraction must be in [0, 1), got {spec.load_fraction}")
    if spec.load_fraction == 0:
        return
    period = burst_period(spec, bandwidth)
    if spec.law == "periodic":
        yield from periodic_times(spec.start_ns, period, until_ns)
    elif spec.law == "poisson":
        if rng is None:
            raise ValueError("poisson law needs a seeded random.Random")
        mean = float(period)
        t = float(spec.start_ns)
        while True:
            t += rng.expovariate(1.0 / mean)
            if t > until_ns:
                return
            yield int(t)
    else:
        raise ValueError(f"unknown arrival law {spec.law!r}")
