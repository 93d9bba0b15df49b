"""Line-oriented scenario files.

A scenario has four sections. ``[scenario]`` and ``[analysis]`` hold
``key = value`` pairs; ``[topology]`` and ``[traffic]`` hold one statement
per line, a keyword followed by positional names and ``key=value`` options::

    [scenario]
    name = baseline_30pct
    duration = 180s
    seed = 1

    [topology]
    switch sw processing=1us
    ied pub mac=02:00:00:fa:b7:1a
    ied sub mac=02:00:00:fa:b7:1b
    gen bg mac=02:00:00:00:00:01
    link pub sw
    link sw sub bandwidth=100M
    link bg sw
    vlan sw 2 ports=mu,sub
    tap pubtap pub sw near=pub filter=goose
    tap subtap sw sub near=sub filter=goose
    span mirror sw port=ana sources=pub,sub limit=64

    [traffic]
    goose pub period=1s frame=162 profile=replay:6.523ms,6.565ms tmax=350ms
    background bg dst=sub load=0.30 frame=1000 law=poisson

    [analysis]
    publisher = pub
    capture = pubtap subtap
    threshold = 4ms
    window = 1s

Every problem is reported with its line number; parsing never stops at the
first error.
"""

from __future__ import annotations

import hashlib
import re
import shlex
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .codec.ethernet import DEFAULT_MAX_FRAME, ETHERTYPE_GOOSE, ETHERTYPE_IPV4, ETHERTYPE_SV, MacAddress
from .engine import ConfigurationError, RetransmissionProfile
from .netsim import (
    Background,
    GoosePublisher,
    Ied,
    Link,
    Span,
    SvStream,
    Switch,
    Tap,
    Topology,
    TrafficGen,
    TrafficSpec,
)
from .netsim.sim import traffic_problems

DEFAULT_DURATION_NS = 180 * 1_000_000_000
SECTIONS = ("scenario", "topology", "traffic", "analysis")

_UNITS = {"ns": 1, "us": 1_000, "µs": 1_000, "ms": 1_000_000, "s": 1_000_000_000}
_RATE_UNITS = {"": 1, "k": 1_000, "M": 1_000_000, "G": 1_000_000_000}
_FILTERS = {"goose": ETHERTYPE_GOOSE, "sv": ETHERTYPE_SV, "ipv4": ETHERTYPE_IPV4}


class ScenarioError(ValueError):
    def __init__(self, problems: list[str], source: str = "<scenario>"):
        self.problems = problems
        self.source = source
        super().__init__(f"{source}: {len(problems)} problem(s)\n  " + "\n  ".join(problems))


def parse_duration(text: str) -> int:
    """'6.5ms' -> 6500000. A bare number is taken as seconds."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(ns|us|µs|ms|s)?\s*", text)
    if not m:
        raise ValueError(f"bad duration {text!r}")
    value = Fraction(m.group(1)) * _UNITS[m.group(2) or "s"]
    if value.denominator != 1:
        raise ValueError(f"duration {text!r} is finer than 1 ns")
    return int(value)


def parse_rate(text: str) -> int:
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([kMG]?)(?:b/s|bps)?\s*", text)
    if not m:
        raise ValueError(f"bad bit rate {text!r}")
    value = Fraction(m.group(1)) * _RATE_UNITS[m.group(2)]
    if value.denominator != 1 or value <= 0:
        raise ValueError(f"bit rate {text!r} must be a positive whole number of bit/s")
    return int(value)


@dataclass(frozen=True)
class Analysis:
    publisher: str
    pub_capture: str
    sub_capture: str
    threshold_ns: int = 4_000_000
    window_ns: int = 1_000_000_000


@dataclass(frozen=True)
class Scenario:
    name: str
    topology: Topology
    traffic: tuple[TrafficSpec, ...]
    analysis: Analysis
    duration_ns: int = DEFAULT_DURATION_NS
    seed: int = 0
    text: str = field(default="", repr=False, compare=False)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def publisher_mac(self) -> MacAddress:
        try:
            return MacAddress.parse(self.analysis.publisher)
        except ValueError:
            node = self.topology.node(self.analysis.publisher)
            return node.mac  # type: ignore[union-attr]


class _Line:
    def __init__(self, lineno: int, words: list[str]):
        self.lineno = lineno
        self.positional: list[str] = []
        self.options: dict[str, str] = {}
        self.used: set[str] = set()
        for w in words:
            if "=" in w:
                k, v = w.split("=", 1)
                self.options[k] = v
            else:
                self.positional.append(w)

    def get(self, key: str, default: str | None = None) -> str | None:
        self.used.add(key)
        return self.options.get(key, default)


class _Parser:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source
        self.problems: list[str] = []
        self.nodes: dict[str, object] = {}
        self.node_lines: dict[str, int] = {}
        self.links: list[Link] = []
        self.taps: list[Tap] = []
        self.spans: list[Span] = []
        self.vlans: dict[str, dict[int, frozenset[str]]] = {}
        self.traffic: list[TrafficSpec] = []
        self.settings: dict[str, dict[str, tuple[int, str]]] = {"scenario": {}, "analysis": {}}
        self.statements: dict[str, list[_Line]] = {"topology": [], "traffic": []}

    def error(self, lineno: int | None, message: str) -> None:
        self.problems.append(f"line {lineno}: {message}" if lineno else message)

    def convert(self, line: _Line, key: str, fn, default=None, where: str = ""):
        raw = line.get(key)
        if raw is None:
            return default
        try:
            return fn(raw)
        except (ValueError, ConfigurationError) as exc:
            self.error(line.lineno, f"{where}field {key!r}: {exc}")
            return default

    def split(self) -> None:
        section = None
        for lineno, raw in enumerate(self.text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            m = re.fullmatch(r"\[(\w+)\]", line)
            if m:
                section = m.group(1)
                if section not in SECTIONS:
                    self.error(lineno, f"unknown section [{section}]")
                    section = None
                continue
            if section is None:
                self.error(lineno, "statement outside a known section")
                continue
            if section in self.settings:
                if "=" not in line:
                    self.error(lineno, f"expected 'key = value' in [{section}]")
                    continue
                key, value = (p.strip() for p in line.split("=", 1))
                if key in self.settings[section]:
                    self.error(lineno, f"duplicate key {key!r} in [{section}]")
                self.settings[section][key] = (lineno, value)
            else:
                try:
                    words = shlex.split(line)
                except ValueError as exc:
                    self.error(lineno, str(exc))
                    continue
                self.statements[section].append(_Line(lineno, words))

    def finish_line(self, line: _Line, what: str) -> None:
        for key in line.options:
            if key not in line.used:
                self.error(line.lineno, f"{what}: unknown field {key!r}")

    # -- topology -----------------------------------------------------------

    def topology(self) -> None:
        handlers = {
            "switch": self.t_switch,
            "ied": self.t_end,
            "gen": self.t_end,
            "link": self.t_link,
            "tap": self.t_tap,
            "span": self.t_span,
            "vlan": self.t_vlan,
        }
        # nodes, then links, then captures, so lines may appear in any order
        rank = {"switch": 0, "ied": 0, "gen": 0, "link": 1, "vlan": 1}
        ordered = sorted(
            self.statements["topology"],
            key=lambda ln: (rank.get(ln.positional[0], 2) if ln.positional else 2, ln.lineno),
        )
        for line in ordered:
            if not line.positional:
                self.error(line.lineno, "empty statement")
                continue
            kind = line.positional[0]
            handler = handlers.get(kind)
            if handler is None:
                self.error(line.lineno, f"unknown topology statement {kind!r}")
                continue
            handler(line)
            self.finish_line(line, kind)

    def _name(self, line: _Line, index: int, what: str) -> str | None:
        if len(line.positional) <= index:
            self.error(line.lineno, f"{what}: missing name")
            return None
        return line.positional[index]

    def _known(self, line: _Line, name: str, what: str) -> bool:
        if name not in self.nodes:
            self.error(line.lineno, f"{what}: unknown node {name!r}")
            return False
        return True

    def _add_node(self, line: _Line, name: str, node) -> None:
        if name in self.nodes:
            self.error(line.lineno, f"node {name!r} already defined on line {self.node_lines[name]}")
            return
        self.nodes[name] = node
        self.node_lines[name] = line.lineno

    def t_switch(self, line: _Line) -> None:
        name = self._name(line, 1, "switch")
        processing = self.convert(line, "processing", parse_duration, 0, "switch: ")
        limit = self.convert(line, "queue_limit", int, None, "switch: ")
        learning = self.convert(line, "learning", _parse_bool, False, "switch: ")
        if name:
            self._add_node(line, name, ("switch", processing, limit, learning))

    def t_end(self, line: _Line) -> None:
        kind = line.positional[0]
        name = self._name(line, 1, kind)
        mac = self.convert(line, "mac", MacAddress.parse, None, f"{kind}: ")
        if mac is None and "mac" not in line.options:
            self.error(line.lineno, f"{kind}: field 'mac' is required")
        if name and mac is not None:
            cls = Ied if kind == "ied" else TrafficGen
            self._add_node(line, name, cls(name, mac))

    def t_link(self, line: _Line) -> None:
        if len(line.positional) != 3:
            self.error(line.lineno, "link: expected 'link <node> <node>'")
            return
        a, b = line.positional[1:]
        bandwidth = self.convert(line, "bandwidth", parse_rate, 100_000_000, "link: ")
        prop = self.convert(line, "propagation", parse_duration, 0, "link: ")
        loss = self.convert(line, "loss", _parse_fraction("loss", 0.0, 1.0), 0.0, "link: ")
        if self._known(line, a, "link") & self._known(line, b, "link"):
            self.links.append(Link(a, b, bandwidth, prop, loss))

    def _filter(self, line: _Line, what: str) -> frozenset[int]:
        raw = line.get("filter")
        if not raw:
            return frozenset()
        out = set()
        for part in raw.split(","):
            part = part.strip().lower()
            if part in _FILTERS:
                out.add(_FILTERS[part])
            else:
                try:
                    out.add(int(part, 16))
                except ValueError:
                    self.error(line.lineno, f"{what}: field 'filter': unknown protocol {part!r}")
        return frozenset(out)

    def t_tap(self, line: _Line) -> None:
        if len(line.positional) != 4:
            self.error(line.lineno, "tap: expected 'tap <capture-id> <node> <node>'")
            return
        cid, a, b = line.positional[1:]
        near = line.get("near")
        snaplen = self.convert(line, "snaplen", int, 65535, "tap: ")
        filt = self._filter(line, "tap")
        ok = self._known(line, a, "tap") & self._known(line, b, "tap")
        if ok and not any({l.a, l.b} == {a, b} for l in self.links):
            self.error(line.lineno, f"tap {cid!r}: no link between {a!r} and {b!r}")
            ok = False
        if near is not None and near not in (a, b):
            self.error(line.lineno, f"tap {cid!r}: field 'near' must be {a!r} or {b!r}")
            ok = False
        if ok:
            self.taps.append(Tap(cid, (a, b), near, snaplen, filt))

    def t_span(self, line: _Line) -> None:
        if len(line.positional) != 3:
            self.error(line.lineno, "span: expected 'span <capture-id> <switch>'")
            return
        cid, sw = line.positional[1:]
        port = line.get("port")
        sources = tuple(s for s in (line.get("sources") or "").split(",") if s)
        limit = self.convert(line, "limit", int, 64, "span: ")
        snaplen = self.convert(line, "snaplen", int, 65535, "span: ")
        filt = self._filter(line, "span")
        if port is None:
            self.error(line.lineno, "span: field 'port' is required")
        if not sources:
            self.error(line.lineno, "span: field 'sources' is required")
        ok = self._known(line, sw, "span")
        for p in (port, *sources):
            if p is not None and not self._known(line, p, "span"):
                ok = False
        if port in sources:
            self.error(line.lineno, f"span {cid!r}: mirror port {port!r} is also a source")
            ok = False
        if ok and port is not None:
            self.spans.append(Span(cid, sw, port, sources, limit, snaplen, filt))

    def t_vlan(self, line: _Line) -> None:
        if len(line.positional) != 3:
            self.error(line.lineno, "vlan: expected 'vlan <switch> <vid> ports=a,b'")
            return
        sw, vid_text = line.positional[1:]
        ports = [p for p in (line.get("ports") or "").split(",") if p]
        try:
            vid = int(vid_text)
            if not 1 <= vid <= 4094:
                raise ValueError
        except ValueError:
            self.error(line.lineno, f"vlan: VID {vid_text!r} must be 1..4094")
            return
        if self._known(line, sw, "vlan") and all(self._known(line, p, "vlan") for p in ports):
            self.vlans.setdefault(sw, {})[vid] = frozenset(ports)

    # -- traffic ------------------------------------------------------------

    def traffic_section(self) -> None:
        for line in self.statements["traffic"]:
            if len(line.positional) != 2:
                self.error(line.lineno, "traffic: expected '<kind> <node> key=value ...'")
                continue
            kind, node = line.positional
            handler = {"goose": self.s_goose, "sv": self.s_sv, "background": self.s_background}.get(kind)
            if handler is None:
                self.error(line.lineno, f"unknown traffic kind {kind!r}")
                continue
            if not self._known(line, node, kind):
                continue
            spec = handler(line, node)
            self.finish_line(line, kind)
            if spec is not None:
                self.traffic.append(spec)

    def _priority(self, line: _Line, default: int, what: str) -> int:
        return self.convert(line, "priority", _parse_int_range("priority", 0, 7), default, what)

    def _vid(self, line: _Line, default: int | None, what: str) -> int | None:
        raw = line.get("vid")
        if raw is None:
            return default
        if raw == "none":
            return None
        try:
            return _parse_int_range("vid", 0, 4095)(raw)
        except ValueError as exc:
            self.error(line.lineno, f"{what}field 'vid': {exc}")
            return default

    def s_goose(self, line: _Line, node: str) -> GoosePublisher | None:
        w = "goose: "
        before = len(self.problems)
        kw = {}
        dst = self.convert(line, "dst", MacAddress.parse, None, w)
        if dst is not None:
            kw["dst"] = dst
        appid = self.convert(line, "appid", lambda v: int(v, 0), None, w)
        if appid is not None:
            kw["appid"] = appid
        kw["priority"] = self._priority(line, 4, w)
        kw["vid"] = self._vid(line, 1, w)
        period = self.convert(line, "period", parse_duration, 1_000_000_000, w)
        first = self.convert(line, "first", parse_duration, 0, w)
        events = self.convert(
            line, "events", lambda v: tuple(parse_duration(x) for x in v.split(",")), (), w
        )
        frame = self.convert(line, "frame", int, None, w)
        for key in ("gocb", "dataset", "goid"):
            value = line.get(key)
            if value is not None:
                kw[{"gocb": "gocb_ref", "dataset": "dat_set", "goid": "go_id"}[key]] = value
        conf_rev = self.convert(line, "confrev", int, None, w)
        if conf_rev is not None:
            kw["conf_rev"] = conf_rev
        profile = self._profile(line, w)
        if len(self.problems) != before or profile is None:
            return None
        return GoosePublisher(
            node,
            profile=profile,
            event_times_ns=events,
            event_period_ns=None if events else period,
            first_event_ns=first,
            frame_bytes=frame,
            **kw,
        )

    def _profile(self, line: _Line, w: str) -> RetransmissionProfile | None:
        raw = line.get("profile", "geometric")
        t0 = self.convert(line, "t0", parse_duration, 6_500_000, w)
        tmax = self.convert(line, "tmax", parse_duration, 350_000_000, w)
        mult = self.convert(line, "multiplier", Fraction, Fraction(2), w)
        factor = self.convert(line, "tatl_factor", Fraction, Fraction(2), w)
        fixed = self.convert(line, "tatl", lambda v: parse_duration(v) // 1_000_000, None, w)
        try:
            if raw == "geometric":
                return RetransmissionProfile(t0, tmax, mult, factor, fixed)
            if raw.startswith("replay:"):
                gaps = [parse_duration(x) for x in raw[len("replay:"):].split(",")]
                return RetransmissionProfile.replay(gaps, tmax, multiplier=mult, tatl_factor=factor, tatl_fixed_ms=fixed)
            raise ValueError(f"unknown profile {raw!r}")
        except (ValueError, ConfigurationError) as exc:
            self.error(line.lineno, f"{w}field 'profile': {exc}")
            return None

    def s_sv(self, line: _Line, node: str) -> SvStream | None:
        w = "sv: "
        before = len(self.problems)
        kw = {}
        dst = self.convert(line, "dst", MacAddress.parse, None, w)
        if dst is not None:
            kw["dst"] = dst
        svid = line.get("svid")
        if svid is not None:
            kw["sv_id"] = svid
        spec = SvStream(
            node,
            samples_per_cycle=self.convert(line, "samples", _parse_int_range("samples", 1, 10**6), 256, w),
            frequency_hz=self.convert(line, "frequency", _parse_int_range("frequency", 1, 10**4), 50, w),
            frame_bytes=self.convert(line, "frame", _parse_int_range("frame", 18, 1822), 230, w),
            priority=self._priority(line, 4, w),
            vid=self._vid(line, 2, w),
            start_ns=self.convert(line, "start", parse_duration, 0, w),
            **kw,
        )
        return spec if len(self.problems) == before else None

    def s_background(self, line: _Line, node: str) -> Background | None:
        w = "background: "
        before = len(self.problems)
        dst = line.get("dst")
        if dst is None:
            self.error(line.lineno, f"{w}field 'dst' is required")
        elif dst not in self.nodes:
            try:
                dst = MacAddress.parse(dst)
            except ValueError:
                self.error(line.lineno, f"{w}field 'dst': unknown node {dst!r}")
        load = self.convert(line, "load", _parse_fraction("load", 0.0, 1.0), None, w)
        if load is None and "load" not in line.options:
            self.error(line.lineno, f"{w}field 'load' is required")
        law = line.get("law", "periodic")
        if law not in ("periodic", "poisson"):
            self.error(line.lineno, f"{w}field 'law': expected periodic or poisson, got {law!r}")
        spec_kw = dict(
            frame_bytes=self.convert(line, "frame", _parse_int_range("frame", 60, 1822), 1000, w),
            priority=self._priority(line, 0, w),
            burst=self.convert(line, "burst", _parse_int_range("burst", 1, 10**4), 1, w),
            vid=self._vid(line, None, w),
            start_ns=self.convert(line, "start", parse_duration, 0, w),
        )
        if len(self.problems) != before:
            return None
        return Background(node, dst, load, law=law, **spec_kw)

    # -- key/value sections ---------------------------------------------------

    def key_values(self) -> tuple[str, int, int, Analysis | None]:
        sc = self.settings["scenario"]
        an = self.settings["analysis"]
        allowed = {"scenario": {"name", "duration", "seed"}, "analysis": {"publisher", "capture", "threshold", "window"}}
        for section, values in self.settings.items():
            for key, (lineno, _) in values.items():
                if key not in allowed[section]:
                    self.error(lineno, f"[{section}]: unknown field {key!r}")

        def setting(values, key, fn, default):
            if key not in values:
                return default
            lineno, raw = values[key]
            try:
                return fn(raw)
            except ValueError as exc:
                self.error(lineno, f"field {key!r}: {exc}")
                return default

        name = sc.get("name", (0, Path(self.source).stem))[1]
        duration = setting(sc, "duration", parse_duration, DEFAULT_DURATION_NS)
        if duration <= 0:
            self.error(sc["duration"][0], "field 'duration': must be positive")
        seed = setting(sc, "seed", lambda v: _parse_int_range("seed", 0, 2**64 - 1)(v), 0)
        analysis = None
        if "publisher" not in an or "capture" not in an:
            self.error(None, "[analysis]: fields 'publisher' and 'capture' are required")
        else:
            lineno, publisher = an["publisher"]
            if publisher not in self.nodes:
                try:
                    MacAddress.parse(publisher)
                except ValueError:
                    self.error(lineno, f"field 'publisher': unknown node {publisher!r}")
            elif not isinstance(self.nodes[publisher], Ied):
                self.error(lineno, f"field 'publisher': {publisher!r} is not an IED")
            clineno, capture = an["capture"]
            pair = capture.split()
            ids = {t.capture_id for t in self.taps} | {s.capture_id for s in self.spans}
            if len(pair) != 2:
                self.error(clineno, "field 'capture': expected two capture ids")
            else:
                for cid in pair:
                    if cid not in ids:
                        self.error(clineno, f"field 'capture': unknown capture id {cid!r}")
            threshold = setting(an, "threshold", parse_duration, 4_000_000)
            window = setting(an, "window", parse_duration, 1_000_000_000)
            if len(pair) == 2:
                analysis = Analysis(publisher, pair[0], pair[1], threshold, window)
        return name, duration, seed, analysis

    def build_nodes(self) -> list:
        nodes = []
        for name, node in self.nodes.items():
            if isinstance(node, tuple):
                _, processing, limit, learning = node
                nodes.append(
                    Switch(name, processing, self.vlans.get(name, {}), {}, learning, limit)
                )
            else:
                nodes.append(node)
        return nodes


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int_range(name: str, low: int, high: int):
    def parse(text: str) -> int:
        value = int(text, 0)
        if not low <= value <= high:
            raise ValueError(f"{name}={value} outside {low}..{high}")
        return value

    return parse


def _parse_fraction(name: str, low: float, high: float):
    def parse(text: str) -> float:
        value = float(text)
        if not low <= value < high:
            raise ValueError(f"{name}={value} outside [{low:g}, {high:g})")
        return value

    return parse


def parse_scenario_text(text: str, source: str = "<scenario>") -> Scenario:
    p = _Parser(text, source)
    p.split()
    p.topology()
    p.traffic_section()
    name, duration, seed, analysis = p.key_values()
    if p.problems:
        raise ScenarioError(p.problems, source)
    topology = Topology(tuple(p.build_nodes()), tuple(p.links), tuple(p.taps), tuple(p.spans))
    problems = topology.problems()
    if not problems:
        problems = traffic_problems(topology, tuple(p.traffic), DEFAULT_MAX_FRAME)
    if problems:
        raise ScenarioError(problems, source)
    return Scenario(name, topology, tuple(p.traffic), analysis, duration, seed, text)


def bundled_names() -> list[str]:
    files = resources.files("goosenet.scenarios")
    return sorted(f.name[: -len(".scn")] for f in files.iterdir() if f.name.endswith(".scn"))


def bundled_text(name: str) -> str:
    return resources.files("goosenet.scenarios").joinpath(f"{name}.scn").read_text()


def parse_scenario(path_or_name: str | Path) -> Scenario:
    """Parse a scenario file, or a bundled scenario given by bare name."""
    path = Path(path_or_name)
    if not path.exists() and str(path_or_name) in bundled_names():
        return parse_scenario_text(bundled_text(str(path_or_name)), f"{path_or_name}.scn")
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError([f"cannot read scenario: {exc}"], str(path)) from None
    return parse_scenario_text(text, str(path))
