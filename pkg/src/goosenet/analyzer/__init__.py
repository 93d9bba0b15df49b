from .delay import (
    CSV_HEADER,
    DEFAULT_THRESHOLD_NS,
    DEFAULT_WINDOW_NS,
    DelayReport,
    DelaySample,
    FilterResult,
    GooseRecord,
    MatchKey,
    MatchResult,
    OrderingError,
    analyze,
    compute_load,
    ete_delay,
    filter_goose,
    format_report,
    match_pairs,
    summarize,
    write_csv,
)
from .pcap import CaptureRecord, PcapError, PcapFile, dumps, loads, read_pcap, write_pcap

__all__ = [
    "CSV_HEADER",
    "CaptureRecord",
    "DEFAULT_THRESHOLD_NS",
    "DEFAULT_WINDOW_NS",
    "DelayReport",
    "DelaySample",
    "FilterResult",
    "GooseRecord",
    "MatchKey",
    "MatchResult",
    "OrderingError",
    "PcapError",
    "PcapFile",
    "analyze",
    "compute_load",
    "dumps",
    "ete_delay",
    "filter_goose",
    "format_report",
    "loads",
    "match_pairs",
    "read_pcap",
    "summarize",
    "write_csv",
    "write_pcap",
]
