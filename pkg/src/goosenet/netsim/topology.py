"""Network description: nodes, full-duplex links and passive capture points."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

from ..codec.ethernet import MacAddress

DEFAULT_BANDWIDTH = 100_000_000


class ValidationError(ValueError):
    """Raised by :func:`build` with every problem found, not just the first."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid simulation setup:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class Ied:
    name: str
    mac: MacAddress


@dataclass(frozen=True)
class TrafficGen:
    name: str
    mac: MacAddress


@dataclass(frozen=True)
class Switch:
    """Store-and-forward switch. Ports are named after the neighbour node.

    With ``learning`` off the MAC table is filled from the topology before
    the run; otherwise it starts empty and learns source addresses.
    ``vlan_membership`` maps a VID to the ports allowed to carry it; VIDs
    absent from the map reach every port. ``queue_limit`` bounds each egress
    port (frames, all classes together); None means unbounded.
    """

    name: str
    processing_ns: int = 0
    vlan_membership: Mapping[int, frozenset[str]] = field(default_factory=dict)
    static_macs: Mapping[MacAddress, str] = field(default_factory=dict)
    learning: bool = False
    queue_limit: int | None = None


Node = Union[Ied, TrafficGen, Switch]


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    bandwidth: int = DEFAULT_BANDWIDTH
    propagation_ns: int = 0
    loss: float = 0.0

    @property
    def key(self) -> frozenset[str]:
        return frozenset((self.a, self.b))

    @property
    def name(self) -> str:
        return f"{self.a}-{self.b}"


@dataclass(frozen=True)
class Tap:
    """Passive copy of both directions of a link.

    Timestamps are the arrival of the frame's last bit at the tap, which
    sits next to ``near`` (default: the link's first endpoint).
    ``ethertypes`` acts as a capture filter when not empty.
    """

    capture_id: str
    link: tuple[str, str]
    near: str | None = None
    snaplen: int = 65535
    ethertypes: frozenset[int] = frozenset()


@dataclass(frozen=True)
class Span:
    """Switch port mirroring: copies of frames received on or sent from
    ``source_ports`` queue for the ``mirror_port``, which has finite room."""

    capture_id: str
    switch: str
    mirror_port: str
    source_ports: tuple[str, ...]
    queue_limit: int = 64
    snaplen: int = 65535
    ethertypes: frozenset[int] = frozenset()


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    taps: tuple[Tap, ...] = ()
    spans: tuple[Span, ...] = ()

    def node(self, name: str) -> Node:
        for n in self.nodes:
            if n.name == name:
                return n
        raise KeyError(name)

    def neighbours(self, name: str) -> list[str]:
        out = []
        for link in self.links:
            if link.a == name:
                out.append(link.b)
            elif link.b == name:
                out.append(link.a)
        return out

    def find_link(self, x: str, y: str) -> Link | None:
        key = frozenset((x, y))
        for link in self.links:
            if link.key == key:
                return link
        return None

    def problems(self) -> list[str]:
        found: list[str] = []
        names = [n.name for n in self.nodes]
        seen: set[str] = set()
        for name in names:
            if name in seen:
                found.append(f"duplicate node name {name!r}")
            seen.add(name)
        macs: dict[MacAddress, str] = {}
        for n in self.nodes:
            if isinstance(n, (Ied, TrafficGen)):
                if n.mac in macs:
                    found.append(f"node {n.name!r} reuses MAC {n.mac} of {macs[n.mac]!r}")
                macs[n.mac] = n.name
        link_keys: set[frozenset[str]] = set()
        for link in self.links:
            for end in (link.a, link.b):
                if end not in seen:
                    found.append(f"link {link.name}: unknown node {end!r}")
            if link.a == link.b:
                found.append(f"link {link.name}: both ends are the same node")
            if link.key in link_keys:
                found.append(f"link {link.name}: duplicate link between the same nodes")
            link_keys.add(link.key)
            if link.bandwidth <= 0:
                found.append(f"link {link.name}: bandwidth must be positive")
            if link.propagation_ns < 0:
                found.append(f"link {link.name}: negative propagation delay")
            if not 0.0 <= link.loss < 1.0:
                found.append(f"link {link.name}: loss must be in [0, 1)")
        for n in self.nodes:
            if isinstance(n, (Ied, TrafficGen)):
                degree = len(self.neighbours(n.name))
                if degree != 1:
                    found.append(f"end node {n.name!r} needs exactly one link, has {degree}")
            if isinstance(n, Switch):
                ports = set(self.neighbours(n.name))
                if n.processing_ns < 0:
                    found.append(f"switch {n.name!r}: negative processing latency")
                for vid, members in n.vlan_membership.items():
                    if not 0 <= vid <= 4095:
                        found.append(f"switch {n.name!r}: VID {vid} out of range")
                    for p in members:
                        if p not in ports:
                            found.append(f"switch {n.name!r}: VLAN {vid} member {p!r} is not a port")
                for mac, port in n.static_macs.items():
                    if port not in ports:
                        found.append(f"switch {n.name!r}: static MAC {mac} points at non-port {port!r}")
        capture_ids: set[str] = set()
        for tap in self.taps:
            if tap.capture_id in capture_ids:
                found.append(f"duplicate capture id {tap.capture_id!r}")
            capture_ids.add(tap.capture_id)
            link = self.find_link(*tap.link)
            if link is None:
                found.append(f"tap {tap.capture_id!r}: no link between {tap.link[0]!r} and {tap.link[1]!r}")
            elif tap.near is not None and tap.near not in tap.link:
                found.append(f"tap {tap.capture_id!r}: near={tap.near!r} is not an endpoint of its link")
        for span in self.spans:
            if span.capture_id in capture_ids:
                found.append(f"duplicate capture id {span.capture_id!r}")
            capture_ids.add(span.capture_id)
            try:
                sw = self.node(span.switch)
            except KeyError:
                found.append(f"span {span.capture_id!r}: unknown switch {span.switch!r}")
                continue
            if not isinstance(sw, Switch):
                found.append(f"span {span.capture_id!r}: {span.switch!r} is not a switch")
                continue
            ports = set(self.neighbours(span.switch))
            if span.mirror_port not in ports:
                found.append(f"span {span.capture_id!r}: mirror port {span.mirror_port!r} does not exist")
            if span.mirror_port in span.source_ports:
                found.append(f"span {span.capture_id!r}: mirror port is also a source port")
            for p in span.source_ports:
                if p not in ports:
                    found.append(f"span {span.capture_id!r}: source port {p!r} does not exist")
            if span.queue_limit < 1:
                found.append(f"span {span.capture_id!r}: queue_limit must be >= 1")
        return found
