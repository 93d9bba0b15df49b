"""Command line: run scenarios end to end, or analyze a pair of captures.

Exit codes: 0 success, 2 scenario or usage error, 3 runtime or I/O error,
4 the analysis matched no frames.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .analyzer import (
    DelayReport,
    PcapError,
    PcapFile,
    analyze,
    format_report,
    read_pcap,
    write_csv,
    write_pcap,
)
from .codec.ethernet import MacAddress
from .netsim import SvStream, ValidationError, build, sv_bandwidth
from .scenario import Scenario, ScenarioError, bundled_names, parse_duration, parse_scenario

EXIT_OK = 0
EXIT_SCENARIO = 2
EXIT_RUNTIME = 3
EXIT_NO_MATCH = 4


class RunError(RuntimeError):
    """Failure after the scenario was accepted (I/O, simulation)."""


@dataclass
class RunManifest:
    scenario: str
    scenario_hash: str
    seed: int
    duration_ns: int
    tool_version: str
    files: dict[str, str]
    headline: dict[str, object]
    created: str = field(default="", compare=False)

    def to_json(self) -> str:
        return json.dumps(
            {
                "scenario": self.scenario,
                "scenario_hash": self.scenario_hash,
                "seed": self.seed,
                "duration_ns": self.duration_ns,
                "tool_version": self.tool_version,
                "files": self.files,
                "headline": self.headline,
                "created": self.created,
            },
            indent=2,
            sort_keys=True,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        return cls.from_json(Path(path).read_text())


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _check_writable(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise RunError(f"output directory {out} is not writable: {exc}") from None


def _subscriber_link(scenario: Scenario) -> tuple[str, str] | None:
    """Direction of the subscriber-side capture link that carries traffic to the near node."""
    for tap in scenario.topology.taps:
        if tap.capture_id == scenario.analysis.sub_capture:
            a, b = tap.link
            near = tap.near or b
            return (a if near == b else b, near)
    return None


def _headline(report: DelayReport, load: float | None, sv_mbps: float | None, tap_drops: int) -> dict[str, object]:
    out = report.as_dict()
    out["mean_ns"] = None if report.mean_ns is None else str(report.mean_ns)
    out["load"] = None if load is None else round(load, 6)
    out["sv_offered_mbps"] = sv_mbps
    out["tap_drops"] = tap_drops
    return out


def run_scenario(scenario: Scenario, out_dir: str | Path, seed: int | None = None) -> RunManifest:
    """Simulate, capture, analyze and write every artifact into ``out_dir``."""
    out = Path(out_dir)
    _check_writable(out)
    seed = scenario.seed if seed is None else seed
    try:
        sim = build(scenario.topology, scenario.traffic, seed)
    except ValidationError as exc:
        raise ScenarioError(exc.problems) from None
    result = sim.run(scenario.duration_ns)

    files: dict[str, Path] = {}
    try:
        for cid in sorted(result.captures):
            path = out / f"{cid}.pcap"
            write_pcap(path, PcapFile(result.captures[cid]))
            files[path.name] = path
        src = scenario.publisher_mac()
        an = scenario.analysis
        report, matched = analyze(
            result.captures[an.pub_capture], result.captures[an.sub_capture], src, an.threshold_ns, an.window_ns
        )
        csv_path = out / "delays.csv"
        with csv_path.open("w", newline="") as fh:
            write_csv(matched.samples, fh)
        files[csv_path.name] = csv_path

        link = _subscriber_link(scenario)
        load = result.link_utilization(*link) if link else None
        sv_specs = [t for t in scenario.traffic if isinstance(t, SvStream)]
        sv_mbps = (
            sum(sv_bandwidth(s.samples_per_cycle, s.frequency_hz, s.frame_bytes) for s in sv_specs) / 1e6
            if sv_specs
            else None
        )
        tap_drops = sum(result.counters[f"capture.{t.capture_id}.dropped"] for t in scenario.topology.taps)
        headline = _headline(report, load, sv_mbps, tap_drops)
        extra: dict[str, object] = {}
        if link:
            extra[f"load({link[0]}->{link[1]})"] = f"{load:.4f}"
        if sv_mbps is not None:
            extra["sv_offered"] = f"{sv_mbps:.3f}Mb/s"
        extra["tap_drops"] = tap_drops
        for span in scenario.topology.spans:
            extra[f"span_drops({span.capture_id})"] = result.counters[f"capture.{span.capture_id}.dropped"]
        report_path = out / "report.txt"
        report_path.write_text(format_report(report, extra))
        files[report_path.name] = report_path

        manifest = RunManifest(
            scenario=scenario.name,
            scenario_hash=scenario.digest,
            seed=seed,
            duration_ns=scenario.duration_ns,
            tool_version=__version__,
            files={name: _sha256(p) for name, p in sorted(files.items())},
            headline=headline,
            created=datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        )
        (out / "manifest.json").write_text(manifest.to_json())
    except OSError as exc:
        raise RunError(f"writing results to {out}: {exc}") from None
    return manifest


def _us(value) -> str:
    return "undefined" if value is None else f"{value:.3f}us"


def report(manifest: RunManifest) -> tuple[str, int]:
    """Human-readable summary of a run and the exit status it deserves."""
    h = manifest.headline
    lines = [f"scenario={manifest.scenario} seed={manifest.seed}"]
    if not h["count"]:
        lines.append("no matched frames")
    lines += [
        f"count={h['count']}",
        f"mean={_us(h['mean_us'])}",
        f"min={_us(h['min_us'])}",
        f"max={_us(h['max_us'])}",
        f"violations(>{h['threshold_us'] / 1000:g}ms)={h['violations']}",
        f"unmatched_publisher={h['unmatched_publisher']}",
        f"unmatched_subscriber={h['unmatched_subscriber']}",
    ]
    if h.get("load") is not None:
        lines.append(f"load={h['load']:.4f}")
    if h.get("sv_offered_mbps") is not None:
        lines.append(f"sv_offered={h['sv_offered_mbps']:.3f}Mb/s")
    lines.append(f"tap_drops={h['tap_drops']}")
    return "\n".join(lines) + "\n", EXIT_OK if h["count"] else EXIT_NO_MATCH


def _cmd_run(args: argparse.Namespace) -> int:
    status = EXIT_OK
    for name in args.scenario:
        try:
            scenario = parse_scenario(name)
            if args.duration is not None:
                scenario = replace(scenario, duration_ns=args.duration)
        except ScenarioError as exc:
            print(exc, file=sys.stderr)
            status = status or EXIT_SCENARIO
            continue
        out = Path(args.out)
        if len(args.scenario) > 1:
            out = out / scenario.name
        try:
            manifest = run_scenario(scenario, out, args.seed)
        except ScenarioError as exc:
            print(exc, file=sys.stderr)
            status = status or EXIT_SCENARIO
            continue
        except RunError as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = status or EXIT_RUNTIME
            continue
        text, code = report(manifest)
        sys.stdout.write(text)
        status = status or code
    return status


def _cmd_analyze(args: argparse.Namespace) -> int:
    try:
        src = MacAddress.parse(args.src)
    except ValueError as exc:
        print(f"error: --src: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        pub = read_pcap(args.pub).records
        sub = read_pcap(args.sub).records
    except (OSError, PcapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    rep, matched = analyze(pub, sub, src, args.threshold, args.window)
    text = format_report(rep)
    if args.out:
        out = Path(args.out)
        try:
            _check_writable(out)
            with (out / "delays.csv").open("w", newline="") as fh:
                write_csv(matched.samples, fh)
            (out / "report.txt").write_text(text)
        except (OSError, RunError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
    if rep.count == 0:
        sys.stdout.write("no matched frames\n")
    sys.stdout.write(text)
    return EXIT_OK if rep.count else EXIT_NO_MATCH


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        manifest = RunManifest.load(args.manifest)
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: {args.manifest}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    text, code = report(manifest)
    sys.stdout.write(text)
    return code


def _cmd_list(args: argparse.Namespace) -> int:
    for name in bundled_names():
        print(name)
    return EXIT_OK


def _duration(text: str) -> int:
    try:
        return parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="goosenet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one or more scenarios (file path or bundled name)")
    p.add_argument("scenario", nargs="+")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=_seed, default=None, help="override the scenario seed")
    p.add_argument("--duration", type=_duration, default=None, help="override simulated duration, e.g. 10s")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("analyze", help="match GOOSE frames between two captures")
    p.add_argument("pub", help="publisher-side pcap")
    p.add_argument("sub", help="subscriber-side pcap")
    p.add_argument("--src", required=True, help="publisher MAC address")
    p.add_argument("--threshold", type=_duration, default=4_000_000, help="violation threshold (default 4ms)")
    p.add_argument("--window", type=_duration, default=1_000_000_000, help="match window (default 1s)")
    p.add_argument("--out", default=None, help="write delays.csv and report.txt here")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("report", help="summarise a manifest.json")
    p.add_argument("manifest")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(func=_cmd_list)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
