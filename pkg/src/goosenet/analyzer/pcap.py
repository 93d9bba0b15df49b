"""Classic libpcap capture files (Ethernet link type only)."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

MAGIC_US = 0xA1B2C3D4
MAGIC_NS = 0xA1B23C4D
LINKTYPE_ETHERNET = 1
GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16
MAX_RECORD = 65535


class PcapError(ValueError):
    def __init__(self, message: str, record: int | None = None, offset: int | None = None):
        self.record = record
        self.offset = offset
        where = []
        if record is not None:
            where.append(f"record {record}")
        if offset is not None:
            where.append(f"offset {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass(frozen=True)
class CaptureRecord:
    """One captured frame; ``timestamp_ns`` is when its last bit was seen."""

    timestamp_ns: int
    data: bytes
    orig_len: int = -1
    capture_id: str = ""

    def __post_init__(self) -> None:
        if self.orig_len < 0:
            object.__setattr__(self, "orig_len", len(self.data))


@dataclass
class PcapFile:
    records: list[CaptureRecord] = field(default_factory=list)
    nanosecond: bool = True
    big_endian: bool = False
    snaplen: int = MAX_RECORD
    linktype: int = LINKTYPE_ETHERNET
    version: tuple[int, int] = (2, 4)
    thiszone: int = 0
    sigfigs: int = 0


def dumps(pcap: PcapFile) -> bytes:
    order = ">" if pcap.big_endian else "<"
    magic = MAGIC_NS if pcap.nanosecond else MAGIC_US
    unit = 1 if pcap.nanosecond else 1000
    out = [
        struct.pack(
            order + "IHHiIII",
            magic,
            pcap.version[0],
            pcap.version[1],
            pcap.thiszone,
            pcap.sigfigs,
            pcap.snaplen,
            pcap.linktype,
        )
    ]
    rec_hdr = struct.Struct(order + "IIII")
    last = None
    for i, rec in enumerate(pcap.records):
        if last is not None and rec.timestamp_ns < last:
            raise PcapError("records must be sorted by timestamp", record=i)
        last = rec.timestamp_ns
        if len(rec.data) > pcap.snaplen:
            raise PcapError(f"{len(rec.data)} captured bytes exceed snaplen {pcap.snaplen}", record=i)
        sec, frac = divmod(rec.timestamp_ns, 1_000_000_000)
        if not pcap.nanosecond and frac % unit:
            raise PcapError("timestamp has sub-microsecond part in a microsecond file", record=i)
        out.append(rec_hdr.pack(sec, frac // unit, len(rec.data), rec.orig_len))
        out.append(rec.data)
    return b"".join(out)


def loads(raw: bytes, capture_id: str = "") -> PcapFile:
    if len(raw) < GLOBAL_HEADER_LEN:
        raise PcapError("file shorter than the 24-byte global header", offset=0)
    (magic_le,) = struct.unpack_from("<I", raw, 0)
    (magic_be,) = struct.unpack_from(">I", raw, 0)
    if magic_le in (MAGIC_US, MAGIC_NS):
        order, magic = "<", magic_le
    elif magic_be in (MAGIC_US, MAGIC_NS):
        order, magic = ">", magic_be
    else:
        raise PcapError(f"bad magic {raw[:4].hex()}", offset=0)
    vmaj, vmin, thiszone, sigfigs, snaplen, linktype = struct.unpack_from(order + "HHiIII", raw, 4)
    if linktype != LINKTYPE_ETHERNET:
        raise PcapError(f"link type {linktype} is not Ethernet", offset=20)
    nanosecond = magic == MAGIC_NS
    unit = 1 if nanosecond else 1000
    limit = min(snaplen, MAX_RECORD) if snaplen else MAX_RECORD
    rec_hdr = struct.Struct(order + "IIII")
    records = []
    pos = GLOBAL_HEADER_LEN
    index = 0
    while pos < len(raw):
        if pos + RECORD_HEADER_LEN > len(raw):
            raise PcapError("truncated record header", record=index, offset=pos)
        sec, frac, incl, orig = rec_hdr.unpack_from(raw, pos)
        if incl > limit:
            raise PcapError(f"record claims {incl} bytes, above snaplen {limit}", record=index, offset=pos)
        if frac >= 1_000_000_000 // unit:
            raise PcapError(f"timestamp fraction {frac} out of range", record=index, offset=pos + 4)
        pos += RECORD_HEADER_LEN
        if pos + incl > len(raw):
            raise PcapError("truncated record data", record=index, offset=pos)
        records.append(
            CaptureRecord(sec * 1_000_000_000 + frac * unit, bytes(raw[pos:pos + incl]), orig, capture_id)
        )
        pos += incl
        index += 1
    return PcapFile(
        records=records,
        nanosecond=nanosecond,
        big_endian=order == ">",
        snaplen=snaplen,
        linktype=linktype,
        version=(vmaj, vmin),
        thiszone=thiszone,
        sigfigs=sigfigs,
    )


def read_pcap(path: str | Path, capture_id: str | None = None) -> PcapFile:
    path = Path(path)
    return loads(path.read_bytes(), capture_id if capture_id is not None else path.stem)


def write_pcap(path: str | Path, pcap: PcapFile) -> None:
    Path(path).write_bytes(dumps(pcap))
