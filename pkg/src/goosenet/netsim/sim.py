"""Discrete-event simulation of a switched full-duplex Ethernet.

The clock is an integer nanosecond count. Events are ordered by
``(time, insertion sequence)`` so runs are reproducible bit for bit.
Frames move as lightweight :class:`Packet` objects; their bytes are only
materialised when a capture point keeps them.
"""

from __future__ import annotations

import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from ..analyzer.pcap import CaptureRecord
from ..codec.ethernet import (
    DEFAULT_MAX_FRAME,
    ETHERTYPE_IPV4,
    EthernetFrame,
    MacAddress,
    VlanTag,
    encode_frame,
)
from ..codec.goose import GooseSessionHeader, decode_goose, encode_goose
from ..codec.sv import SvApdu, SvAsdu, encode_sv, pad_sv_id
from ..engine import (
    PublisherState,
    SubscriberState,
    check_expiry,
    on_receive,
    on_timer,
    publish_event,
)
from .topology import Ied, Link, Switch, Topology, TrafficGen, ValidationError
from .traffic import (
    NS_PER_S,
    Background,
    GoosePublisher,
    SvStream,
    TrafficSpec,
    background_schedule,
    periodic_times,
    sv_bandwidth,
    sv_frame_rate,
)

MIN_FRAME = 18


class Packet:
    __slots__ = ("uid", "size", "pcp", "vid", "dst", "src", "ethertype", "data", "make", "source", "meta")

    def __init__(self, uid, size, pcp, vid, dst, src, ethertype, data=None, make=None, source="", meta=None):
        self.uid = uid
        self.size = size
        self.pcp = pcp
        self.vid = vid
        self.dst = dst
        self.src = src
        self.ethertype = ethertype
        self.data = data
        self.make = make
        self.source = source
        self.meta = meta

    def bytes(self) -> bytes:
        if self.data is None:
            self.data = self.make()
        return self.data


class _Capture:
    __slots__ = ("capture_id", "snaplen", "ethertypes", "records")

    def __init__(self, capture_id: str, snaplen: int, ethertypes: frozenset[int]):
        self.capture_id = capture_id
        self.snaplen = snaplen
        self.ethertypes = ethertypes
        self.records: list[tuple[int, int, Packet]] = []


class _Port:
    """Egress side of one link direction, with eight strict-priority FIFOs."""

    __slots__ = (
        "sim", "owner", "peer", "key", "bandwidth", "propagation", "loss_rng", "loss",
        "queues", "depth", "limit", "busy", "receiver", "taps", "rx_taps", "mirrors", "capture",
        "enqueued", "delivered", "lost", "dropped", "tx_frames", "tx_bits", "max_depth", "in_service",
    )

    def __init__(self, sim: "Simulation", owner: str, peer: str, link: Link, limit: int | None, loss_rng):
        self.sim = sim
        self.owner = owner
        self.peer = peer
        self.key = f"{owner}>{peer}"
        self.bandwidth = link.bandwidth
        self.propagation = link.propagation_ns
        self.loss = link.loss
        self.loss_rng = loss_rng
        self.queues = [deque() for _ in range(8)]
        self.depth = 0
        self.limit = limit
        self.busy = False
        self.receiver: Callable[[Packet, str], None] | None = None
        # taps at the sending end see every frame; taps at the receiving end
        # only see frames that survive the link
        self.taps: list[_Capture] = []
        self.rx_taps: list[_Capture] = []
        # SPAN mirror ports fed with copies of frames leaving this port
        self.mirrors: list[_Port] = []
        self.capture: _Capture | None = None
        self.enqueued = self.delivered = self.lost = self.dropped = 0
        self.tx_frames = self.tx_bits = self.max_depth = 0
        self.in_service = 0

    def tx_time(self, size: int) -> int:
        return -(-size * 8 * NS_PER_S // self.bandwidth)

    def enqueue(self, pkt: Packet) -> bool:
        self.enqueued += 1
        if self.limit is not None and self.depth >= self.limit:
            self.dropped += 1
            return False
        self.queues[pkt.pcp].append(pkt)
        self.depth += 1
        if self.depth > self.max_depth:
            self.max_depth = self.depth
        if not self.busy:
            self._start()
        return True

    def _start(self) -> None:
        queues = self.queues
        for pcp in range(7, -1, -1):
            if queues[pcp]:
                pkt = queues[pcp].popleft()
                break
        else:
            return
        self.depth -= 1
        self.busy = True
        self.in_service = 1
        sim = self.sim
        sim.schedule(sim.now + self.tx_time(pkt.size), self._done, pkt)

    def _done(self, pkt: Packet) -> None:
        sim = self.sim
        now = sim.now
        self.tx_frames += 1
        self.tx_bits += pkt.size * 8
        self.in_service = 0
        for cap in self.taps:
            sim.record(cap, now, pkt)
        for mirror in self.mirrors:
            mirror.enqueue(pkt)
        self.busy = False
        if self.depth:
            self._start()
        if self.loss and self.loss_rng.random() < self.loss:
            self.lost += 1
            return
        self.delivered += 1
        for cap in self.rx_taps:
            sim.record(cap, now + self.propagation, pkt)
        if self.capture is not None:
            sim.record(self.capture, now + self.propagation, pkt)
        if self.receiver is not None:
            if self.propagation:
                sim.schedule(now + self.propagation, self.receiver, pkt, self.owner)
            else:
                self.receiver(pkt, self.owner)


@dataclass
class SimulationResult:
    until_ns: int
    captures: dict[str, list[CaptureRecord]]
    counters: dict[str, int]
    trace: dict[int, dict[str, int]]
    emissions: dict[str, list[tuple[int, int, int, int]]]
    utilization: dict[str, float] = field(default_factory=dict)

    def link_utilization(self, sender: str, receiver: str) -> float:
        return self.utilization[f"{sender}>{receiver}"]


class _SwitchState:
    def __init__(self, spec: Switch, ports: dict[str, _Port]):
        self.spec = spec
        self.ports = ports
        self.mac_table: dict[bytes, str] = {m.octets: p for m, p in spec.static_macs.items()}
        self.members = {vid: frozenset(ps) for vid, ps in spec.vlan_membership.items()}
        self.mirror: dict[str, list[_Port]] = {}
        self.mirror_ports: set[str] = set()
        self.flood_cache: dict[tuple[str, int], list[_Port]] = {}
        self.vlan_filtered = 0


class Simulation:
    def __init__(self, topology: Topology, traffic: Iterable[TrafficSpec], seed: int = 0):
        self.topology = topology
        self.traffic = tuple(traffic)
        self.seed = seed
        self.now = 0
        self._heap: list = []
        self._seq = 0
        self._uid = 0
        self.events = 0
        self.captures: dict[str, _Capture] = {}
        self.trace: dict[int, dict[str, int]] = {}
        self.emissions: dict[str, list[tuple[int, int, int, int]]] = {}
        self.counters: dict[str, int] = {}
        self._ports: dict[tuple[str, str], _Port] = {}
        self._switches: dict[str, _SwitchState] = {}
        self._nic: dict[str, _Port] = {}
        self._subscribers: dict[str, SubscriberState] = {}
        self._node_rx: dict[str, int] = {}
        self._macs: dict[str, MacAddress] = {}
        self._wire()

    # -- event loop -------------------------------------------------------

    def schedule(self, time: int, fn: Callable, *args) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (time, self._seq, fn, args))

    def record(self, cap: _Capture, time: int, pkt: Packet) -> None:
        if cap.ethertypes and pkt.ethertype not in cap.ethertypes:
            return
        cap.records.append((time, len(cap.records), pkt))
        self.trace.setdefault(pkt.uid, {})[cap.capture_id] = time

    def next_uid(self) -> int:
        self._uid += 1
        return self._uid

    def run(self, until_ns: int) -> SimulationResult:
        if until_ns <= 0:
            raise ValueError("until must be positive")
        heap = self._heap
        pop = heapq.heappop
        count = 0
        while heap and heap[0][0] <= until_ns:
            time, _, fn, args = pop(heap)
            self.now = time
            fn(*args)
            count += 1
        self.events += count
        self.now = max(self.now, until_ns)
        return self._result(until_ns)

    # -- construction -----------------------------------------------------

    def _wire(self) -> None:
        topo = self.topology
        for node in topo.nodes:
            if isinstance(node, (Ied, TrafficGen)):
                self._macs[node.name] = node.mac
        for i, link in enumerate(topo.links):
            for owner, peer in ((link.a, link.b), (link.b, link.a)):
                node = topo.node(owner)
                limit = node.queue_limit if isinstance(node, Switch) else None
                rng = random.Random(f"{self.seed}:loss:{i}:{owner}") if link.loss else None
                self._ports[(owner, peer)] = _Port(self, owner, peer, link, limit, rng)
        for node in topo.nodes:
            if isinstance(node, Switch):
                ports = {peer: p for (owner, peer), p in self._ports.items() if owner == node.name}
                self._switches[node.name] = _SwitchState(node, ports)
            else:
                nbrs = topo.neighbours(node.name)
                if nbrs:
                    self._nic[node.name] = self._ports[(node.name, nbrs[0])]
        for (owner, peer), port in self._ports.items():
            target = topo.node(peer)
            if isinstance(target, Switch):
                sw = self._switches[peer]
                port.receiver = lambda pkt, frm, sw=sw: self._switch_rx(sw, pkt, frm)
            else:
                port.receiver = lambda pkt, frm, name=peer: self._end_rx(name, pkt)
        for sw in self._switches.values():
            if not sw.spec.learning:
                self._fill_mac_table(sw)
        for tap in topo.taps:
            cap = _Capture(tap.capture_id, tap.snaplen, tap.ethertypes)
            self.captures[tap.capture_id] = cap
            link = topo.find_link(*tap.link)
            near = tap.near or link.a
            for owner, peer in ((link.a, link.b), (link.b, link.a)):
                port = self._ports[(owner, peer)]
                (port.taps if owner == near else port.rx_taps).append(cap)
        for span in topo.spans:
            cap = _Capture(span.capture_id, span.snaplen, span.ethertypes)
            self.captures[span.capture_id] = cap
            sw = self._switches[span.switch]
            mirror = sw.ports[span.mirror_port]
            mirror.limit = span.queue_limit
            mirror.capture = cap
            sw.mirror_ports.add(span.mirror_port)
            for src in span.source_ports:
                sw.mirror.setdefault(src, []).append(mirror)
                sw.ports[src].mirrors.append(mirror)
        for index, spec in enumerate(self.traffic):
            self._attach(index, spec)

    def _fill_mac_table(self, sw: _SwitchState) -> None:
        topo = self.topology
        for first in sw.ports:
            # breadth-first walk away from this switch through `first`
            seen = {sw.spec.name, first}
            frontier = [first]
            while frontier:
                name = frontier.pop()
                if name in self._macs:
                    sw.mac_table.setdefault(self._macs[name].octets, first)
                for nxt in topo.neighbours(name):
                    if nxt not in seen:
                        seen.add(nxt)
                        frontier.append(nxt)

    # -- forwarding -------------------------------------------------------

    def _switch_rx(self, sw: _SwitchState, pkt: Packet, ingress: str) -> None:
        for mirror in sw.mirror.get(ingress, ()):
            mirror.enqueue(pkt)
        if sw.spec.learning and not pkt.src[0] & 1:
            sw.mac_table[pkt.src] = ingress
        if sw.spec.processing_ns:
            self.schedule(self.now + sw.spec.processing_ns, self._forward, sw, pkt, ingress)
        else:
            self._forward(sw, pkt, ingress)

    def _forward(self, sw: _SwitchState, pkt: Packet, ingress: str) -> None:
        members = sw.members.get(pkt.vid) if pkt.vid else None
        if not pkt.dst[0] & 1:
            port_name = sw.mac_table.get(pkt.dst)
            if port_name is not None:
                if port_name == ingress:
                    return
                if members is not None and port_name not in members:
                    sw.vlan_filtered += 1
                    return
                sw.ports[port_name].enqueue(pkt)
                return
        key = (ingress, pkt.vid)
        targets = sw.flood_cache.get(key)
        if targets is None:
            targets = [
                port
                for name, port in sw.ports.items()
                if name != ingress
                and name not in sw.mirror_ports
                and (members is None or name in members)
            ]
            sw.flood_cache[key] = targets
        for port in targets:
            port.enqueue(pkt)

    def _end_rx(self, name: str, pkt: Packet) -> None:
        self._node_rx[name] = self._node_rx.get(name, 0) + 1
        if pkt.meta is not None and pkt.meta[0] == "goose":
            frame_payload = pkt.bytes()[18 if pkt.vid is not None else 14:]
            _, pdu = decode_goose(frame_payload)
            state = self._subscribers.get(name, SubscriberState())
            state, verdict = on_receive(state, pdu, self.now)
            self._subscribers[name] = state
            key = f"ied.{name}.goose.{verdict.value}"
            self.counters[key] = self.counters.get(key, 0) + 1

    # -- traffic sources --------------------------------------------------

    def _resolve_dst(self, dst) -> MacAddress:
        if isinstance(dst, MacAddress):
            return dst
        return self._macs[dst]

    def _attach(self, index: int, spec: TrafficSpec) -> None:
        name = f"{type(spec).__name__.lower()}{index}@{spec.node}"
        self.emissions[name] = []
        if isinstance(spec, GoosePublisher):
            _GooseSource(self, name, spec)
        elif isinstance(spec, SvStream):
            _SvSource(self, name, spec)
        elif isinstance(spec, Background):
            _BackgroundSource(self, name, spec, random.Random(f"{self.seed}:bg:{index}"))

    def emit(self, source: str, node: str, pkt: Packet, meta: tuple[int, int] = (0, 0)) -> None:
        self.emissions[source].append((self.now, meta[0], meta[1], pkt.uid))
        self._nic[node].enqueue(pkt)

    # -- inspection -------------------------------------------------------

    def queue_depth(self, owner: str, peer: str, pcp: int | None = None) -> int:
        port = self._ports[(owner, peer)]
        if pcp is None:
            return port.depth
        return len(port.queues[pcp])

    def _result(self, until_ns: int) -> SimulationResult:
        counters: dict[str, int] = {"sim.events": self.events, "sim.time_ns": until_ns}
        counters.update(self.counters)
        utilization = {}
        for port in self._ports.values():
            k = f"link.{port.key}"
            counters[k + ".enqueued"] = port.enqueued
            counters[k + ".delivered"] = port.delivered
            counters[k + ".lost"] = port.lost
            counters[k + ".dropped"] = port.dropped
            counters[k + ".in_flight"] = port.depth + port.in_service
            counters[k + ".tx_frames"] = port.tx_frames
            counters[k + ".tx_bits"] = port.tx_bits
            counters[k + ".queue_max"] = port.max_depth
            utilization[port.key] = port.tx_bits * NS_PER_S / (port.bandwidth * until_ns)
        for name, sw in self._switches.items():
            counters[f"switch.{name}.vlan_filtered"] = sw.vlan_filtered
        for name, count in sorted(self._node_rx.items()):
            counters[f"node.{name}.rx_frames"] = count
        for name, state in sorted(self._subscribers.items()):
            _, expired = check_expiry(state, until_ns)
            counters[f"ied.{name}.goose.expired"] = len(expired)
        captures: dict[str, list[CaptureRecord]] = {}
        for cid, cap in self.captures.items():
            recs = sorted(cap.records, key=lambda r: (r[0], r[1]))
            captures[cid] = [
                CaptureRecord(t, pkt.bytes()[: cap.snaplen], pkt.size, cid) for t, _, pkt in recs
            ]
            counters[f"capture.{cid}.records"] = len(recs)
        for tap in self.topology.taps:
            counters[f"capture.{tap.capture_id}.dropped"] = 0
        for span in self.topology.spans:
            mirror = self._switches[span.switch].ports[span.mirror_port]
            counters[f"capture.{span.capture_id}.dropped"] = mirror.dropped
        for source, log in self.emissions.items():
            counters[f"source.{source}.frames"] = len(log)
        return SimulationResult(
            until_ns=until_ns,
            captures=captures,
            counters=dict(sorted(counters.items())),
            trace=self.trace,
            emissions=self.emissions,
            utilization=utilization,
        )


def _tag(priority: int, vid: int | None) -> VlanTag | None:
    if vid is None and priority == 0:
        return None
    return VlanTag(pcp=priority, vid=vid or 0)


class _GooseSource:
    def __init__(self, sim: Simulation, name: str, spec: GoosePublisher):
        self.sim = sim
        self.name = name
        self.spec = spec
        self.src = sim._macs[spec.node]
        self.vlan = _tag(spec.priority, spec.vid)
        go_id = spec.go_id
        if spec.frame_bytes is not None:
            go_id = self._pad_go_id(go_id, spec.frame_bytes)
        self.state = PublisherState(
            profile=spec.profile,
            gocb_ref=spec.gocb_ref,
            go_id=go_id,
            dat_set=spec.dat_set,
            dataset=spec.dataset,
            conf_rev=spec.conf_rev,
        )
        self.generation = 0
        times = spec.event_times_ns
        if times:
            self._events = iter(sorted(times))
        else:
            self._events = periodic_times(spec.first_event_ns, Fraction(spec.event_period_ns), 2**62)
        self._schedule_next_event()

    def _pad_go_id(self, go_id: str, target: int) -> str:
        for extra in range(0, 130 - len(go_id)):
            state = PublisherState(
                profile=self.spec.profile,
                gocb_ref=self.spec.gocb_ref,
                go_id=go_id + "_" * extra,
                dat_set=self.spec.dat_set,
                dataset=self.spec.dataset,
                conf_rev=self.spec.conf_rev,
            )
            _, pdu, _ = publish_event(state, self.spec.dataset, 0)
            if self._frame(pdu).size == target:
                return go_id + "_" * extra
        raise ValidationError([f"GOOSE publisher on {self.spec.node!r}: cannot reach {target}-byte frames"])

    def _frame(self, pdu) -> Packet:
        payload = encode_goose(GooseSessionHeader(self.spec.appid), pdu)
        frame = EthernetFrame(self.spec.dst, self.src, 0x88B8, payload, self.vlan)
        data = encode_frame(frame)
        return Packet(
            self.sim.next_uid(), len(data), frame.priority, self.vlan.vid if self.vlan else None,
            self.spec.dst.octets, self.src.octets, 0x88B8, data=data, source=self.name,
            meta=("goose", pdu.st_num, pdu.sq_num),
        )

    def _schedule_next_event(self) -> None:
        t = next(self._events, None)
        if t is not None:
            self.sim.schedule(t, self._event)

    def _event(self) -> None:
        sim = self.sim
        data = list(self.state.dataset)
        for i, v in enumerate(data):
            if isinstance(v, bool):
                data[i] = not v
                break
        self.generation += 1
        self.state, pdu, delay = publish_event(self.state, data, sim.now)
        self._send(pdu)
        sim.schedule(sim.now + delay, self._timer, self.generation)
        self._schedule_next_event()

    def _timer(self, generation: int) -> None:
        if generation != self.generation:
            return
        self.state, pdu, delay = on_timer(self.state, self.sim.now)
        self._send(pdu)
        self.sim.schedule(self.sim.now + delay, self._timer, generation)

    def _send(self, pdu) -> None:
        pkt = self._frame(pdu)
        self.sim.emit(self.name, self.spec.node, pkt, (pdu.st_num, pdu.sq_num))


def _sample_block(k: int, rate: int) -> tuple[tuple[int, int], ...]:
    # three-phase currents/voltages with matching neutral, 1 mA / 10 mV units
    angle = 2 * math.pi * 50 * k / rate
    out = []
    for amplitude in (1000, 10000):
        phases = [int(amplitude * math.sin(angle - shift)) for shift in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
        phases.append(-sum(phases))
        out.extend((v, 0) for v in phases)
    return tuple(out)


class _SvSource:
    def __init__(self, sim: Simulation, name: str, spec: SvStream):
        self.sim = sim
        self.name = name
        self.spec = spec
        self.src = sim._macs[spec.node]
        self.vlan = _tag(spec.priority, spec.vid)
        self.rate = sv_frame_rate(spec.samples_per_cycle, spec.frequency_hz)
        self.sv_id = pad_sv_id(spec.sv_id, spec.frame_bytes, tagged=self.vlan is not None)
        self.period = Fraction(NS_PER_S, self.rate)
        self.k = 0
        self.pcp = spec.priority
        self.vid = self.vlan.vid if self.vlan else None
        sim.schedule(spec.start_ns, self._tick)

    def _make(self, k: int) -> Callable[[], bytes]:
        def build() -> bytes:
            smp = k % self.rate
            asdu = SvAsdu(self.sv_id, smp % 65536, self.spec.conf_rev, _sample_block(smp, self.rate), 1)
            payload = encode_sv(SvApdu(self.spec.appid, (asdu,)))
            return encode_frame(EthernetFrame(self.spec.dst, self.src, 0x88BA, payload, self.vlan))

        return build

    def _tick(self) -> None:
        sim = self.sim
        k = self.k
        pkt = Packet(
            sim.next_uid(), self.spec.frame_bytes, self.pcp, self.vid,
            self.spec.dst.octets, self.src.octets, 0x88BA, make=self._make(k), source=self.name,
        )
        sim.emit(self.name, self.spec.node, pkt, (0, k % self.rate))
        self.k = k + 1
        nxt = self.spec.start_ns + (self.k * self.period.numerator) // self.period.denominator
        sim.schedule(nxt, self._tick)


class _BackgroundSource:
    def __init__(self, sim: Simulation, name: str, spec: Background, rng: random.Random):
        self.sim = sim
        self.name = name
        self.spec = spec
        src = sim._macs[spec.node]
        dst = sim._resolve_dst(spec.dst)
        vlan = _tag(spec.priority, spec.vid)
        header = 14 + (4 if vlan else 0)
        frame = EthernetFrame(dst, src, ETHERTYPE_IPV4, bytes(spec.frame_bytes - header), vlan)
        self.data = encode_frame(frame)
        self.dst = dst.octets
        self.src = src.octets
        self.pcp = spec.priority
        self.vid = vlan.vid if vlan else None
        link = sim._nic[spec.node]
        self._times = background_schedule(spec, link.bandwidth, 2**62, rng)
        self._schedule_next()

    def _schedule_next(self) -> None:
        t = next(self._times, None)
        if t is not None:
            self.sim.schedule(t, self._arrival)

    def _arrival(self) -> None:
        sim = self.sim
        for _ in range(self.spec.burst):
            pkt = Packet(
                sim.next_uid(), self.spec.frame_bytes, self.pcp, self.vid, self.dst, self.src,
                ETHERTYPE_IPV4, data=self.data, source=self.name,
            )
            sim.emit(self.name, self.spec.node, pkt)
        self._schedule_next()


def traffic_problems(topology: Topology, traffic: tuple[TrafficSpec, ...], max_frame: int) -> list[str]:
    found: list[str] = []
    kinds = {n.name: n for n in topology.nodes}
    offered: dict[str, float] = {}
    for i, spec in enumerate(traffic):
        label = f"traffic[{i}] ({type(spec).__name__} on {spec.node!r})"
        node = kinds.get(spec.node)
        if node is None:
            found.append(f"{label}: unknown node")
            continue
        if isinstance(node, Switch):
            found.append(f"{label}: traffic cannot originate at a switch")
            continue
        nbrs = topology.neighbours(spec.node)
        bandwidth = topology.find_link(spec.node, nbrs[0]).bandwidth if nbrs else None
        if isinstance(spec, (GoosePublisher, SvStream)) and not isinstance(node, Ied):
            found.append(f"{label}: GOOSE/SV publishers must be IEDs")
        if not 0 <= spec.priority <= 7:
            found.append(f"{label}: priority {spec.priority} outside 0..7")
        if isinstance(spec, GoosePublisher):
            if not spec.event_times_ns and not spec.event_period_ns:
                found.append(f"{label}: needs event times or an event period")
            if spec.event_period_ns is not None and spec.event_period_ns <= 0:
                found.append(f"{label}: event period must be positive")
            if spec.frame_bytes is not None and not MIN_FRAME <= spec.frame_bytes <= max_frame:
                found.append(f"{label}: frame_bytes {spec.frame_bytes} outside {MIN_FRAME}..{max_frame}")
        elif isinstance(spec, SvStream):
            try:
                bits = sv_bandwidth(spec.samples_per_cycle, spec.frequency_hz, spec.frame_bytes)
            except ValueError as exc:
                found.append(f"{label}: {exc}")
                continue
            try:
                pad_sv_id(spec.sv_id, spec.frame_bytes, tagged=_tag(spec.priority, spec.vid) is not None)
            except ValueError as exc:
                found.append(f"{label}: {exc}")
            if bandwidth:
                offered[spec.node] = offered.get(spec.node, 0.0) + bits / bandwidth
        elif isinstance(spec, Background):
            if not 0.0 <= spec.load_fraction < 1.0:
                found.append(f"{label}: load_fraction {spec.load_fraction} outside [0, 1)")
            if spec.law not in ("periodic", "poisson"):
                found.append(f"{label}: unknown law {spec.law!r}")
            if spec.burst < 1:
                found.append(f"{label}: burst must be >= 1")
            if not 60 <= spec.frame_bytes <= max_frame:
                found.append(f"{label}: frame_bytes {spec.frame_bytes} outside 60..{max_frame}")
            if isinstance(spec.dst, str) and not isinstance(kinds.get(spec.dst), (Ied, TrafficGen)):
                found.append(f"{label}: destination {spec.dst!r} is not an end node")
            offered[spec.node] = offered.get(spec.node, 0.0) + spec.load_fraction
    for node, load in offered.items():
        if load >= 1.0:
            found.append(f"node {node!r}: offered load {load:.3f} oversubscribes its link")
    return found


def build(
    topology: Topology,
    traffic: Iterable[TrafficSpec],
    seed: int = 0,
    max_frame: int = DEFAULT_MAX_FRAME,
) -> Simulation:
    """Validate everything up front, then return a simulation at time 0."""
    traffic = tuple(traffic)
    problems = topology.problems()
    if not problems:
        problems += traffic_problems(topology, traffic, max_frame)
    if problems:
        raise ValidationError(problems)
    return Simulation(topology, traffic, seed)


def run(sim: Simulation, until_ns: int) -> SimulationResult:
    return sim.run(until_ns)
