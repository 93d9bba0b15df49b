"""Publisher/subscriber frame matching and end-to-end delay statistics."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

from ..codec.errors import CodecError
from ..codec.ethernet import ETHERTYPE_GOOSE, MacAddress, decode_frame
from ..codec.goose import decode_goose
from .pcap import CaptureRecord

NS_PER_S = 1_000_000_000
DEFAULT_THRESHOLD_NS = 4_000_000
DEFAULT_WINDOW_NS = NS_PER_S
# preamble + SFD (8) and minimum inter-frame gap (12)
PER_FRAME_OVERHEAD = 20


class OrderingError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class MatchKey:
    src: MacAddress
    st_num: int
    sq_num: int


@dataclass(frozen=True)
class DelaySample:
    key: MatchKey
    t_tr: int
    t_des: int

    @property
    def delay(self) -> int:
        return self.t_des - self.t_tr


@dataclass(frozen=True)
class GooseRecord:
    """A capture record that decoded as GOOSE, with its match key."""

    record: CaptureRecord
    key: MatchKey

    @property
    def timestamp_ns(self) -> int:
        return self.record.timestamp_ns


@dataclass
class FilterResult:
    records: list[GooseRecord]
    undecodable: int = 0


def filter_goose(records: Iterable[CaptureRecord | GooseRecord], src: MacAddress) -> FilterResult:
    """Keep GOOSE frames (Ethertype 0x88B8, tagged or not) sent by ``src``.

    Frames that fail to decode are skipped and counted.
    """
    kept: list[GooseRecord] = []
    bad = 0
    for rec in records:
        if isinstance(rec, GooseRecord):
            if rec.key.src == src:
                kept.append(rec)
            continue
        try:
            frame = decode_frame(rec.data)
        except CodecError:
            bad += 1
            continue
        if frame.ethertype != ETHERTYPE_GOOSE or frame.src != src:
            continue
        try:
            _, pdu = decode_goose(frame.payload)
        except CodecError:
            bad += 1
            continue
        kept.append(GooseRecord(rec, MatchKey(frame.src, pdu.st_num, pdu.sq_num)))
    return FilterResult(kept, bad)


@dataclass
class MatchResult:
    samples: list[DelaySample]
    unmatched_publisher: int
    unmatched_subscriber: int


def _ordered(records: Sequence[GooseRecord]) -> list[GooseRecord]:
    # total order independent of input order
    return sorted(records, key=lambda r: (r.timestamp_ns, r.key, r.record.data))


def match_pairs(
    pub: Sequence[GooseRecord], sub: Sequence[GooseRecord], window_ns: int = DEFAULT_WINDOW_NS
) -> MatchResult:
    """Pair each publisher frame with the earliest unused subscriber frame
    carrying the same (source, stNum, sqNum) no earlier than it and at most
    ``window_ns`` later."""
    candidates: dict[MatchKey, list[GooseRecord]] = defaultdict(list)
    for rec in _ordered(sub):
        candidates[rec.key].append(rec)
    used: set[int] = set()
    samples: list[DelaySample] = []
    unmatched_pub = 0
    for rec in _ordered(pub):
        chosen = None
        for i, cand in enumerate(candidates.get(rec.key, ())):
            if id(cand) in used or cand.timestamp_ns < rec.timestamp_ns:
                continue
            if cand.timestamp_ns - rec.timestamp_ns <= window_ns:
                chosen = cand
            break
        if chosen is None:
            unmatched_pub += 1
            continue
        used.add(id(chosen))
        samples.append(DelaySample(rec.key, rec.timestamp_ns, chosen.timestamp_ns))
    unmatched_sub = len(sub) - len(used)
    return MatchResult(samples, unmatched_pub, unmatched_sub)


def ete_delay(t_tr: int, t_des: int) -> int:
    """Subscriber-side timestamp minus publisher-side timestamp, in ns."""
    if t_des < t_tr:
        raise OrderingError(f"subscriber timestamp {t_des} precedes publisher timestamp {t_tr}")
    return t_des - t_tr


@dataclass(frozen=True)
class DelayReport:
    """Delay statistics in ns. Statistics are None (undefined) when count is 0."""

    count: int
    total_ns: int
    mean_ns: Fraction | None
    min_ns: int | None
    max_ns: int | None
    stddev_ns: float | None
    threshold_ns: int
    violations: int
    unmatched_publisher: int = 0
    unmatched_subscriber: int = 0

    def as_dict(self) -> dict[str, object]:
        def us(v):
            return None if v is None else round(float(v) / 1000, 3)

        return {
            "count": self.count,
            "mean_us": us(self.mean_ns),
            "min_us": us(self.min_ns),
            "max_us": us(self.max_ns),
            "stddev_us": us(self.stddev_ns),
            "threshold_us": us(self.threshold_ns),
            "violations": self.violations,
            "unmatched_publisher": self.unmatched_publisher,
            "unmatched_subscriber": self.unmatched_subscriber,
        }


def summarize(
    samples: Sequence[DelaySample] | Sequence[int],
    threshold_ns: int = DEFAULT_THRESHOLD_NS,
    unmatched_publisher: int = 0,
    unmatched_subscriber: int = 0,
) -> DelayReport:
    delays = [s.delay if isinstance(s, DelaySample) else int(s) for s in samples]
    n = len(delays)
    total = sum(delays)
    if n == 0:
        return DelayReport(0, 0, None, None, None, None, threshold_ns, 0, unmatched_publisher, unmatched_subscriber)
    mean = Fraction(total, n)
    var = sum((Fraction(d) - mean) ** 2 for d in delays) / n
    return DelayReport(
        count=n,
        total_ns=total,
        mean_ns=mean,
        min_ns=min(delays),
        max_ns=max(delays),
        stddev_ns=math.sqrt(var),
        threshold_ns=threshold_ns,
        violations=sum(1 for d in delays if d > threshold_ns),
        unmatched_publisher=unmatched_publisher,
        unmatched_subscriber=unmatched_subscriber,
    )


def compute_load(
    records: Iterable[CaptureRecord],
    bandwidth: int,
    window_ns: int,
    start_ns: int | None = None,
    overhead: bool = True,
) -> float:
    """Share of ``bandwidth`` used by records inside ``[start, start + window)``.

    Frame sizes come from ``orig_len``; with ``overhead`` each frame also
    pays for preamble and inter-frame gap. ``start`` defaults to the first
    record's timestamp.
    """
    if window_ns <= 0:
        raise ValueError("window must be positive")
    records = list(records)
    if not records:
        return 0.0
    if start_ns is None:
        start_ns = min(r.timestamp_ns for r in records)
    end = start_ns + window_ns
    extra = PER_FRAME_OVERHEAD if overhead else 0
    bits = sum((r.orig_len + extra) * 8 for r in records if start_ns <= r.timestamp_ns < end)
    return bits * NS_PER_S / (bandwidth * window_ns)


CSV_HEADER = ("src_mac", "st_num", "sq_num", "t_pub_ns", "t_sub_ns", "delay_ns")


def write_csv(samples: Iterable[DelaySample], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in samples:
        writer.writerow((str(s.key.src), s.key.st_num, s.key.sq_num, s.t_tr, s.t_des, s.delay))


def format_us(ns: float | Fraction | None) -> str:
    if ns is None:
        return "undefined"
    return f"{float(ns) / 1000:.3f}us"


def format_report(report: DelayReport, extra: dict[str, object] | None = None) -> str:
    """Flat ``key=value`` lines."""
    ms = report.threshold_ns / 1_000_000
    threshold = f"{ms:g}ms"
    lines = [
        f"count={report.count}",
        f"mean={format_us(report.mean_ns)}",
        f"min={format_us(report.min_ns)}",
        f"max={format_us(report.max_ns)}",
        f"stddev={format_us(report.stddev_ns)}",
        f"violations(>{threshold})={report.violations}",
        f"unmatched_publisher={report.unmatched_publisher}",
        f"unmatched_subscriber={report.unmatched_subscriber}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def analyze(
    pub_records: Iterable[CaptureRecord],
    sub_records: Iterable[CaptureRecord],
    src: MacAddress,
    threshold_ns: int = DEFAULT_THRESHOLD_NS,
    window_ns: int = DEFAULT_WINDOW_NS,
) -> tuple[DelayReport, MatchResult]:
    """Filter both captures, match frames and summarise the delays."""
    pub = filter_goose(pub_records, src).records
    sub = filter_goose(sub_records, src).records
    matched = match_pairs(pub, sub, window_ns)
    report = summarize(
        matched.samples, threshold_ns, matched.unmatched_publisher, matched.unmatched_subscriber
    )
    return report, matched
