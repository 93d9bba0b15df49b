"""Ethernet II frames with optional IEEE 802.1Q tag."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import CodecError, FrameSizeError, TruncatedFrameError

ETHERTYPE_VLAN = 0x8100
ETHERTYPE_GOOSE = 0x88B8
ETHERTYPE_SV = 0x88BA
ETHERTYPE_IPV4 = 0x0800

HEADER_LEN = 14
VLAN_TAG_LEN = 4

# 1822 is the tagged GOOSE maximum quoted for station-bus networks;
# 1522 is the plain IEEE 802.1Q tagged maximum.
DEFAULT_MAX_FRAME = 1822
STRICT_MAX_FRAME = 1522


@dataclass(frozen=True, order=True)
class MacAddress:
    octets: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.octets, bytes) or len(self.octets) != 6:
            raise ValueError(f"MAC address needs exactly 6 octets, got {self.octets!r}")

    @classmethod
    def parse(cls, text: str) -> "MacAddress":
        parts = text.replace("-", ":").split(":")
        if len(parts) != 6:
            raise ValueError(f"bad MAC address {text!r}")
        try:
            return cls(bytes(int(p, 16) for p in parts))
        except ValueError:
            raise ValueError(f"bad MAC address {text!r}") from None

    @property
    def is_multicast(self) -> bool:
        return bool(self.octets[0] & 0x01)

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self.octets)


@dataclass(frozen=True)
class VlanTag:
    pcp: int = 0
    dei: bool = False
    vid: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.pcp <= 7:
            raise ValueError(f"pcp {self.pcp} outside 0..7")
        if not 0 <= self.vid <= 4095:
            raise ValueError(f"vid {self.vid} outside 0..4095")

    @property
    def tci(self) -> int:
        return self.pcp << 13 | int(self.dei) << 12 | self.vid

    @classmethod
    def from_tci(cls, tci: int) -> "VlanTag":
        return cls(pcp=tci >> 13, dei=bool((tci >> 12) & 1), vid=tci & 0x0FFF)


@dataclass(frozen=True)
class EthernetFrame:
    dst: MacAddress
    src: MacAddress
    ethertype: int
    payload: bytes = b""
    vlan: VlanTag | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.ethertype <= 0xFFFF:
            raise ValueError(f"ethertype {self.ethertype:#x} is not 16-bit")
        if self.ethertype == ETHERTYPE_VLAN:
            raise ValueError("ethertype 0x8100 is reserved for the VLAN tag; use vlan=")

    @property
    def is_goose(self) -> bool:
        return self.ethertype == ETHERTYPE_GOOSE

    @property
    def is_sv(self) -> bool:
        return self.ethertype == ETHERTYPE_SV

    @property
    def priority(self) -> int:
        return self.vlan.pcp if self.vlan is not None else 0


def wire_size(frame: EthernetFrame) -> int:
    return HEADER_LEN + (VLAN_TAG_LEN if frame.vlan is not None else 0) + len(frame.payload)


def encode_frame(frame: EthernetFrame, max_frame: int = DEFAULT_MAX_FRAME) -> bytes:
    size = wire_size(frame)
    if size > max_frame:
        raise FrameSizeError(f"frame of {size} bytes exceeds limit {max_frame}", field="payload")
    parts = [frame.dst.octets, frame.src.octets]
    if frame.vlan is not None:
        parts.append(struct.pack("!HH", ETHERTYPE_VLAN, frame.vlan.tci))
    parts.append(struct.pack("!H", frame.ethertype))
    parts.append(frame.payload)
    return b"".join(parts)


def decode_frame(data: bytes, max_frame: int = DEFAULT_MAX_FRAME) -> EthernetFrame:
    if len(data) < HEADER_LEN:
        raise TruncatedFrameError(
            f"need {HEADER_LEN} header bytes, got {len(data)}", field="header", offset=len(data)
        )
    if len(data) > max_frame:
        raise FrameSizeError(f"frame of {len(data)} bytes exceeds limit {max_frame}")
    dst = MacAddress(bytes(data[0:6]))
    src = MacAddress(bytes(data[6:12]))
    (ethertype,) = struct.unpack_from("!H", data, 12)
    vlan = None
    pos = 14
    if ethertype == ETHERTYPE_VLAN:
        if len(data) < HEADER_LEN + VLAN_TAG_LEN:
            raise TruncatedFrameError("truncated 802.1Q tag", field="vlan", offset=len(data))
        tci, ethertype = struct.unpack_from("!HH", data, 14)
        vlan = VlanTag.from_tci(tci)
        pos = 18
        if ethertype == ETHERTYPE_VLAN:
            raise CodecError("stacked VLAN tags are not supported", field="vlan", offset=16)
    return EthernetFrame(dst=dst, src=src, ethertype=ethertype, payload=bytes(data[pos:]), vlan=vlan)


def peek_ethertype(data: bytes) -> int | None:
    """Ethertype after skipping one VLAN tag, or None for short buffers."""
    if len(data) < HEADER_LEN:
        return None
    (et,) = struct.unpack_from("!H", data, 12)
    if et == ETHERTYPE_VLAN:
        if len(data) < HEADER_LEN + VLAN_TAG_LEN:
            return None
        (et,) = struct.unpack_from("!H", data, 16)
    return et
