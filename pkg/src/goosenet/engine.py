"""GOOSE publisher retransmission and subscriber supervision state machines.

Both machines are immutable values: every transition takes the current state
and an input and returns a new state plus its outputs. All times are integer
nanoseconds on the caller's clock.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .codec.goose import UINT32_MAX, DataValue, GoosePdu, UtcTime

MS = 1_000_000


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class RetransmissionProfile:
    """How retransmission intervals grow after an event.

    In geometric mode the interval starts at ``t0_ns`` and is multiplied by
    ``multiplier`` on every retransmission, capped at ``tmax_ns``. When
    ``intervals_ns`` is given the k-th gap after an event is taken from that
    list instead (replay of an observed device), then ``tmax_ns`` forever.

    TATL stamped into each PDU is ``tatl_factor`` times the interval to the
    next retransmission, rounded up to whole milliseconds, unless
    ``tatl_fixed_ms`` overrides it.
    """

    t0_ns: int = int(6.5 * MS)
    tmax_ns: int = 350 * MS
    multiplier: Fraction = Fraction(2)
    tatl_factor: Fraction = Fraction(2)
    tatl_fixed_ms: int | None = None
    intervals_ns: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "multiplier", Fraction(self.multiplier))
        object.__setattr__(self, "tatl_factor", Fraction(self.tatl_factor))
        if self.intervals_ns is not None:
            ivs = tuple(int(x) for x in self.intervals_ns)
            object.__setattr__(self, "intervals_ns", ivs)
            if not ivs:
                raise ConfigurationError("replay profile needs at least one interval")
            if any(b < a for a, b in zip(ivs, ivs[1:])) or ivs[0] <= 0 or ivs[-1] > self.tmax_ns:
                raise ConfigurationError("replay intervals must be positive, non-decreasing and <= tmax")
            object.__setattr__(self, "t0_ns", ivs[0])
        if not 0 < self.t0_ns <= self.tmax_ns:
            raise ConfigurationError(f"need 0 < t0 <= tmax, got t0={self.t0_ns} tmax={self.tmax_ns}")
        if self.multiplier <= 1:
            raise ConfigurationError(f"multiplier must exceed 1, got {self.multiplier}")
        if self.tatl_fixed_ms is not None:
            if self.tatl_fixed_ms <= 0:
                raise ConfigurationError("fixed TATL must be positive")
        elif self.tatl_factor < 1:
            raise ConfigurationError(f"tatl_factor must be >= 1, got {self.tatl_factor}")

    @classmethod
    def replay(cls, intervals_ns: Sequence[int], tmax_ns: int | None = None, **kw) -> "RetransmissionProfile":
        ivs = tuple(intervals_ns)
        return cls(intervals_ns=ivs, tmax_ns=tmax_ns if tmax_ns is not None else max(ivs), **kw)

    @classmethod
    def from_timestamps(cls, timestamps_ns: Sequence[int], tmax_ns: int | None = None, **kw) -> "RetransmissionProfile":
        """Replay profile whose gaps are the differences of a captured burst."""
        gaps = [b - a for a, b in zip(timestamps_ns, timestamps_ns[1:])]
        return cls.replay(gaps, tmax_ns, **kw)

    def interval(self, index: int, previous: int) -> int:
        """Gap following retransmission number ``index`` (0 = the event itself)."""
        if self.intervals_ns is not None:
            return self.intervals_ns[index] if index < len(self.intervals_ns) else self.tmax_ns
        if index == 0:
            return self.t0_ns
        grown = previous * self.multiplier
        return min(grown.numerator // grown.denominator, self.tmax_ns)

    def tatl_ms(self, interval_ns: int) -> int:
        if self.tatl_fixed_ms is not None:
            return self.tatl_fixed_ms
        product = self.tatl_factor * interval_ns
        return max(1, -(-product.numerator // (product.denominator * MS)))


def _next_counter(value: int) -> int:
    # 0 is reserved for the first frame after an event
    return 1 if value >= UINT32_MAX else value + 1


@dataclass(frozen=True)
class PublisherState:
    profile: RetransmissionProfile
    gocb_ref: str
    go_id: str
    dat_set: str
    dataset: tuple[DataValue, ...]
    conf_rev: int = 1
    test: bool = False
    nds_com: bool = False
    st_num: int = 0
    sq_num: int = 0
    current_interval: int = 0
    retx_index: int = 0
    event_time: int = 0

    def pdu(self) -> GoosePdu:
        return GoosePdu(
            gocb_ref=self.gocb_ref,
            time_allowed_to_live=self.profile.tatl_ms(self.current_interval),
            dat_set=self.dat_set,
            go_id=self.go_id,
            t=UtcTime.from_ns(self.event_time),
            st_num=self.st_num,
            sq_num=self.sq_num,
            test=self.test,
            conf_rev=self.conf_rev,
            nds_com=self.nds_com,
            all_data=self.dataset,
        )


def publish_event(
    state: PublisherState, new_data: Sequence[DataValue], now: int
) -> tuple[PublisherState, GoosePdu, int]:
    """A dataset change: bump stNum, restart sqNum at 0 and the burst at t0."""
    new_data = tuple(new_data)
    if len(new_data) != len(state.dataset):
        raise ConfigurationError(
            f"dataset has {len(state.dataset)} entries, event carries {len(new_data)}"
        )
    interval = state.profile.interval(0, 0)
    state = replace(
        state,
        dataset=new_data,
        st_num=_next_counter(state.st_num),
        sq_num=0,
        current_interval=interval,
        retx_index=0,
        event_time=now,
    )
    return state, state.pdu(), interval


def on_timer(state: PublisherState, now: int) -> tuple[PublisherState, GoosePdu, int]:
    """Retransmission timer expiry: same data, next sqNum, longer interval."""
    if state.st_num == 0:
        raise ValueError("no event has been published yet")
    index = state.retx_index + 1
    interval = state.profile.interval(index, state.current_interval)
    state = replace(
        state,
        sq_num=_next_counter(state.sq_num),
        current_interval=interval,
        retx_index=index,
    )
    return state, state.pdu(), interval


class ReceiveVerdict(enum.Enum):
    NEW_EVENT = "NewEvent"
    RETRANSMISSION = "Retransmission"
    DUPLICATE = "Duplicate"
    OUT_OF_ORDER = "OutOfOrder"
    STALE_EVENT = "StaleEvent"


class Status(enum.Enum):
    NEVER_SEEN = "never-seen"
    FRESH = "fresh"
    EXPIRED = "expired"


@dataclass(frozen=True)
class SubscriberEntry:
    status: Status = Status.NEVER_SEEN
    last_st_num: int = 0
    last_sq_num: int = 0
    last_arrival: int = 0
    last_tatl_ns: int = 0
    missed: int = 0
    last_gap: int = 0


def classify(last_st: int, last_sq: int, st: int, sq: int) -> tuple[ReceiveVerdict, int]:
    """Verdict for (st, sq) given the last accepted pair, plus the sqNum gap.

    Same-event frames older than the last one seen count as OutOfOrder with
    a zero gap.
    """
    if st > last_st:
        return ReceiveVerdict.NEW_EVENT, 0
    if st < last_st:
        return ReceiveVerdict.STALE_EVENT, 0
    if sq == last_sq:
        return ReceiveVerdict.DUPLICATE, 0
    if sq == _next_counter(last_sq):
        return ReceiveVerdict.RETRANSMISSION, 0
    if sq > last_sq:
        return ReceiveVerdict.OUT_OF_ORDER, sq - last_sq - 1
    return ReceiveVerdict.OUT_OF_ORDER, 0


@dataclass(frozen=True)
class SubscriberState:
    entries: Mapping[str, SubscriberEntry] = field(default_factory=dict)

    @classmethod
    def expecting(cls, go_ids: Iterable[str]) -> "SubscriberState":
        return cls({g: SubscriberEntry() for g in go_ids})

    def __getitem__(self, go_id: str) -> SubscriberEntry:
        return self.entries[go_id]


def on_receive(
    state: SubscriberState, pdu: GoosePdu, now: int
) -> tuple[SubscriberState, ReceiveVerdict]:
    entry = state.entries.get(pdu.go_id, SubscriberEntry())
    if entry.status is Status.NEVER_SEEN:
        verdict, gap = ReceiveVerdict.NEW_EVENT, 0
    else:
        verdict, gap = classify(entry.last_st_num, entry.last_sq_num, pdu.st_num, pdu.sq_num)
    if verdict is ReceiveVerdict.STALE_EVENT:
        return state, verdict
    keep_position = verdict is ReceiveVerdict.OUT_OF_ORDER and gap == 0
    entry = replace(
        entry,
        status=Status.FRESH,
        last_st_num=pdu.st_num,
        last_sq_num=entry.last_sq_num if keep_position else pdu.sq_num,
        last_arrival=now,
        last_tatl_ns=pdu.time_allowed_to_live * MS,
        missed=entry.missed + gap,
        last_gap=gap,
    )
    return SubscriberState({**state.entries, pdu.go_id: entry}), verdict


def check_expiry(state: SubscriberState, now: int) -> tuple[SubscriberState, list[tuple[str, int]]]:
    """Entries whose TATL has run out, with how long ago it ran out (ns)."""
    expired: list[tuple[str, int]] = []
    entries = dict(state.entries)
    for go_id, entry in state.entries.items():
        if entry.status is Status.NEVER_SEEN:
            continue
        overdue = now - entry.last_arrival - entry.last_tatl_ns
        if overdue > 0:
            expired.append((go_id, overdue))
            entries[go_id] = replace(entry, status=Status.EXPIRED)
    return SubscriberState(entries), expired
