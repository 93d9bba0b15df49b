from __future__ import annotations

import io
import random
import struct
from collections import Counter
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN_DST, golden_pdu
from goosenet.analyzer import (
    CSV_HEADER,
    CaptureRecord,
    DelaySample,
    OrderingError,
    PcapError,
    PcapFile,
    analyze,
    compute_load,
    dumps,
    ete_delay,
    filter_goose,
    format_report,
    loads,
    match_pairs,
    read_pcap,
    summarize,
    write_csv,
    write_pcap,
)
from goosenet.codec import EthernetFrame, GooseSessionHeader, MacAddress, VlanTag, encode_frame, encode_goose
from goosenet.netsim import Background, Ied, Link, Switch, Tap, Topology, TrafficGen, build

US = 1_000
MS = 1_000_000
# three publishers seen in the captured trace
DEV_A = MacAddress.parse("00:0b:3c:fa:b7:1a")
DEV_B = MacAddress.parse("00:0b:3c:fa:b7:1c")
DEV_C = MacAddress.parse("00:30:de:ff:c0:50")


def goose_bytes(src: MacAddress, st_num: int, sq_num: int, tagged: bool = True) -> bytes:
    pdu = replace(golden_pdu(), st_num=st_num, sq_num=sq_num)
    vlan = VlanTag(pcp=4, vid=1) if tagged else None
    return encode_frame(EthernetFrame(GOLDEN_DST, src, 0x88B8, encode_goose(GooseSessionHeader(2), pdu), vlan))


def rec(t: int, src: MacAddress, st_num: int, sq_num: int, **kw) -> CaptureRecord:
    return CaptureRecord(t, goose_bytes(src, st_num, sq_num, **kw))


def ipv4_record(t: int, src: MacAddress = DEV_A, size: int = 100) -> CaptureRecord:
    return CaptureRecord(t, encode_frame(EthernetFrame(GOLDEN_DST, src, 0x0800, b"\0" * (size - 14))))


class TestPcap:
    def records(self):
        return [rec(1_436_552_836_950_441_000 + i * 6_500_123, DEV_A, 1, i) for i in range(5)]

    @pytest.mark.parametrize("nanosecond", [True, False])
    @pytest.mark.parametrize("big_endian", [True, False])
    def test_roundtrip(self, nanosecond, big_endian):
        recs = self.records()
        if not nanosecond:
            recs = [replace(r, timestamp_ns=r.timestamp_ns // US * US) for r in recs]
        raw = dumps(PcapFile(recs, nanosecond=nanosecond, big_endian=big_endian))
        back = loads(raw)
        assert back.records == recs
        assert back.nanosecond is nanosecond and back.big_endian is big_endian
        assert dumps(back) == raw

    def test_magic_on_write(self):
        assert dumps(PcapFile())[:4] == struct.pack("<I", 0xA1B23C4D)
        assert dumps(PcapFile(nanosecond=False))[:4] == struct.pack("<I", 0xA1B2C3D4)

    def test_empty_file_is_24_bytes(self, tmp_path):
        path = tmp_path / "empty.pcap"
        write_pcap(path, PcapFile())
        assert path.stat().st_size == 24
        assert read_pcap(path).records == []

    def test_oversize_record(self):
        raw = bytearray(dumps(PcapFile(self.records()[:1])))
        struct.pack_into("<II", raw, 24 + 8, 70_000, 70_000)
        with pytest.raises(PcapError, match="snaplen") as info:
            loads(bytes(raw))
        assert info.value.record == 0 and info.value.offset == 24

    def test_truncated_record(self):
        raw = dumps(PcapFile(self.records()))
        with pytest.raises(PcapError, match="truncated"):
            loads(raw[:-3])

    def test_bad_magic_and_linktype(self):
        raw = bytearray(dumps(PcapFile()))
        with pytest.raises(PcapError, match="magic"):
            loads(b"\0\0\0\0" + bytes(raw[4:]))
        struct.pack_into("<I", raw, 20, 105)
        with pytest.raises(PcapError, match="link type"):
            loads(bytes(raw))
        with pytest.raises(PcapError):
            loads(b"\xd4\xc3\xb2\xa1")

    def test_unsorted_write_rejected(self):
        with pytest.raises(PcapError, match="sorted"):
            dumps(PcapFile(self.records()[::-1]))

    def test_microsecond_file_keeps_us(self):
        with pytest.raises(PcapError):
            dumps(PcapFile([CaptureRecord(1_001, b"\0" * 60)], nanosecond=False))

    def test_read_assigns_capture_id(self, tmp_path):
        path = tmp_path / "pubtap.pcap"
        write_pcap(path, PcapFile(self.records()))
        assert {r.capture_id for r in read_pcap(path).records} == {"pubtap"}

    def test_scapy_written_file(self, tmp_path):
        scapy = pytest.importorskip("scapy.all")
        path = tmp_path / "scapy.pcap"
        packets = []
        for i, r in enumerate(self.records()):
            pkt = scapy.Ether(r.data)
            pkt.time = Fraction(r.timestamp_ns // US, 1_000_000)
            packets.append(pkt)
        packets.append(scapy.Ether(src=str(DEV_B), dst="ff:ff:ff:ff:ff:ff") / scapy.IP() / scapy.UDP())
        packets[-1].time = packets[-2].time + 1
        scapy.wrpcap(str(path), packets)
        pcap = read_pcap(path)
        assert not pcap.nanosecond
        assert [r.data for r in pcap.records[:5]] == [r.data for r in self.records()]
        assert [r.timestamp_ns for r in pcap.records[:5]] == [r.timestamp_ns // US * US for r in self.records()]
        got = filter_goose(pcap.records, DEV_A)
        assert [g.key.sq_num for g in got.records] == [0, 1, 2, 3, 4]


class TestFilter:
    def trace(self):
        return [
            rec(0, DEV_A, 1, 0),
            rec(10 * MS, DEV_B, 7, 4182, tagged=False),
            ipv4_record(11 * MS),
            rec(20 * MS, DEV_A, 1, 1),
            rec(30 * MS, DEV_C, 3, 72),
            CaptureRecord(31 * MS, encode_frame(EthernetFrame(GOLDEN_DST, DEV_A, 0x88B8, b"\x00\x02\x00\x10junk"))),
            rec(40 * MS, DEV_A, 1, 2, tagged=False),
        ]

    def test_keeps_only_source(self):
        result = filter_goose(self.trace(), DEV_A)
        assert [(g.key.st_num, g.key.sq_num) for g in result.records] == [(1, 0), (1, 1), (1, 2)]
        assert result.undecodable == 1

    def test_absent_mac(self):
        assert filter_goose(self.trace(), MacAddress.parse("02:00:00:00:00:99")).records == []

    def test_background_removed(self):
        kept = filter_goose(self.trace(), DEV_A).records
        assert all(g.record.data[12:14] in (b"\x88\xb8", b"\x81\x00") for g in kept)

    def test_idempotent(self):
        once = filter_goose(self.trace(), DEV_A).records
        assert filter_goose(once, DEV_A).records == once

    def test_short_frame_counted(self):
        assert filter_goose([CaptureRecord(0, b"\0" * 5)], DEV_A).undecodable == 1


def keyed(records, src=DEV_A):
    return filter_goose(records, src).records


class TestMatching:
    def test_26us_example(self):
        t = 5 * MS
        out = match_pairs(keyed([rec(t, DEV_A, 1, 857)]), keyed([rec(t + 26 * US, DEV_A, 1, 857)]))
        assert [s.delay for s in out.samples] == [26 * US]
        assert (out.unmatched_publisher, out.unmatched_subscriber) == (0, 0)

    def test_duplicate_subscriber_key(self):
        pub = keyed([rec(0, DEV_A, 1, 5)])
        sub = keyed([rec(30 * US, DEV_A, 1, 5), rec(10 * US, DEV_A, 1, 5)])
        out = match_pairs(pub, sub)
        assert [s.t_des for s in out.samples] == [10 * US]
        assert out.unmatched_subscriber == 1

    def test_earlier_subscriber_rejected(self):
        out = match_pairs(keyed([rec(10 * US, DEV_A, 1, 5)]), keyed([rec(8 * US, DEV_A, 1, 5)]))
        assert out.samples == []
        assert (out.unmatched_publisher, out.unmatched_subscriber) == (1, 1)

    def test_window(self):
        pub = keyed([rec(0, DEV_A, 1, 5)])
        sub = keyed([rec(1_000 * MS + 1, DEV_A, 1, 5)])
        assert match_pairs(pub, sub).samples == []
        assert len(match_pairs(pub, sub, window_ns=2_000 * MS).samples) == 1

    def test_sq_reuse_across_events(self):
        # sqNum cycles each event; stNum keeps the keys apart
        pub = keyed([rec(0, DEV_A, 1, 0), rec(1_000 * MS, DEV_A, 2, 0)])
        sub = keyed([rec(1_000 * MS + 50 * US, DEV_A, 2, 0), rec(40 * US, DEV_A, 1, 0)])
        out = match_pairs(pub, sub)
        assert sorted(s.delay for s in out.samples) == [40 * US, 50 * US]

    @settings(max_examples=100)
    @given(st.lists(st.tuples(st.integers(1, 3), st.integers(0, 5), st.integers(0, 10 * MS), st.integers(-100, 5000)), max_size=30), st.randoms())
    def test_injective_and_order_free(self, rows, rnd):
        pub = keyed([rec(t, DEV_A, s, q) for s, q, t, _ in rows])
        sub = keyed([rec(max(0, t + d * US), DEV_A, s, q) for s, q, t, d in rows])
        out = match_pairs(pub, sub)
        # injective on both sides: no record is used more often than it occurs
        used_pub = Counter((x.key, x.t_tr) for x in out.samples)
        used_sub = Counter((x.key, x.t_des) for x in out.samples)
        assert not used_pub - Counter((r.key, r.timestamp_ns) for r in pub)
        assert not used_sub - Counter((r.key, r.timestamp_ns) for r in sub)
        assert all(x.delay >= 0 for x in out.samples)
        assert len(out.samples) + out.unmatched_publisher == len(pub)
        assert len(out.samples) + out.unmatched_subscriber == len(sub)
        shuffled_pub, shuffled_sub = pub[:], sub[:]
        rnd.shuffle(shuffled_pub)
        rnd.shuffle(shuffled_sub)
        again = match_pairs(shuffled_pub, shuffled_sub)
        assert summarize(again.samples) == summarize(out.samples)


class TestDelay:
    def test_identity(self):
        assert ete_delay(5, 5) == 0

    def test_subtraction(self):
        assert ete_delay(10**9, 10**9 + 310 * US) == 310 * US

    def test_ordering_error(self):
        with pytest.raises(OrderingError):
            ete_delay(10, 9)


class TestSummarize:
    def test_small(self):
        r = summarize([10 * US, 20 * US, 30 * US])
        assert (r.mean_ns, r.min_ns, r.max_ns) == (20 * US, 10 * US, 30 * US)

    def test_constant_26us(self):
        r = summarize([26 * US] * 1000)
        assert r.mean_ns == 26 * US and r.stddev_ns == 0 and r.violations == 0

    def test_threshold_strict(self):
        assert summarize([3_900 * US, 4_100 * US]).violations == 1
        assert summarize([4 * MS]).violations == 0
        assert summarize([1_100 * US]).violations == 0
        assert summarize([1_100 * US], threshold_ns=1 * MS).violations == 1

    def test_empty_is_undefined(self):
        r = summarize([])
        assert r.count == 0 and r.mean_ns is None and r.stddev_ns is None
        assert "mean=undefined" in format_report(r)

    @given(st.lists(st.integers(0, 10**10), min_size=1, max_size=50))
    def test_mean_law(self, delays):
        r = summarize(delays)
        assert r.mean_ns * r.count == sum(delays) == r.total_ns
        assert isinstance(r.mean_ns, Fraction)

    def test_report_format(self):
        text = format_report(summarize([26 * US]), {"load": "0.3000"})
        assert "violations(>4ms)=0" in text
        assert "mean=26.000us" in text
        assert text.endswith("load=0.3000\n")

    def test_csv(self):
        sample = DelaySample(keyed([rec(0, DEV_A, 1, 857)])[0].key, 100, 126)
        buf = io.StringIO()
        write_csv([sample], buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == ",".join(CSV_HEADER) == "src_mac,st_num,sq_num,t_pub_ns,t_sub_ns,delay_ns"
        assert lines[1] == f"{DEV_A},1,857,100,126,26"


class TestLoad:
    def back_to_back(self):
        slot = (1518 + 20) * 8 * 10  # ns per frame at 100 Mb/s, with preamble and gap
        n = 1_000_000_000 // slot
        return [CaptureRecord(i * slot, b"", orig_len=1518) for i in range(n)]

    def test_no_records(self):
        assert compute_load([], 100_000_000, 10**9) == 0.0

    def test_back_to_back(self):
        recs = self.back_to_back()
        assert compute_load(recs, 100_000_000, 10**9, start_ns=0) == pytest.approx(1.0, abs=2e-4)
        assert compute_load(recs, 100_000_000, 10**9, start_ns=0, overhead=False) == pytest.approx(0.987, abs=1e-3)

    def test_simulated_30pct_capture(self):
        topo = Topology(
            (Ied("sub", DEV_B), TrafficGen("bg", DEV_C), Switch("sw")),
            (Link("bg", "sw"), Link("sw", "sub")),
            (Tap("T", ("sw", "sub"), near="sub"),),
        )
        result = build(topo, [Background("bg", "sub", 0.3, 1000, law="poisson")], seed=2).run(10**10)
        load = compute_load(result.captures["T"], 100_000_000, 10**10, start_ns=0, overhead=False)
        assert load == pytest.approx(0.30, abs=0.01)
        assert load == pytest.approx(result.link_utilization("sw", "sub"), abs=1e-6)

    def test_window_must_be_positive(self):
        with pytest.raises(ValueError):
            compute_load([], 100_000_000, 0)


class TestAnalyze:
    def test_synthetic_ground_truth(self):
        rnd = random.Random(3)
        pub, sub, truth = [], [], []
        t = 0
        for sq in range(300):
            t += rnd.randrange(1 * MS, 7 * MS)
            d = rnd.randrange(12_960, 3 * MS)
            pub.append(rec(t, DEV_A, 1, sq))
            sub.append(rec(t + d, DEV_A, 1, sq))
            truth.append(d)
        sub.sort(key=lambda r: r.timestamp_ns)
        pub.append(ipv4_record(t + 1))
        report, matched = analyze(pub, sub, DEV_A)
        assert [s.delay for s in matched.samples] == truth
        assert report.mean_ns == Fraction(sum(truth), len(truth))
        assert report.unmatched_publisher == report.unmatched_subscriber == 0
