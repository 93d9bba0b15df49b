"""GOOSE session header and BER-encoded goosePdu.

Wire profile: application tag 0x61 wraps twelve context-specific fields
0x80..0x8A and 0xAB (allData), always in this order::

    gocbRef timeAllowedtoLive datSet goID t stNum sqNum test confRev
    ndsCom numDatSetEntries allData

allData items use the IEC 61850-8-1 Data tags for boolean (0x83),
bit-string (0x84), integer (0x85) and visible-string (0x8A).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Union

from . import ber
from .errors import CodecError, FieldSizeError

SESSION_HEADER_LEN = 8
MAX_STRING = 129
UINT32_MAX = 0xFFFFFFFF

TAG_GOOSE_PDU = 0x61
TAG_ALL_DATA = 0xAB

DATA_BOOLEAN = 0x83
DATA_BIT_STRING = 0x84
DATA_INTEGER = 0x85
DATA_VISIBLE_STRING = 0x8A

_FRACTION_SCALE = 1 << 24
_NS = 1_000_000_000


@dataclass(frozen=True)
class UtcTime:
    """8-byte UtcTime: 32-bit seconds, 24-bit binary fraction, quality byte."""

    seconds: int
    fraction: int = 0
    quality: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seconds <= UINT32_MAX:
            raise ValueError(f"seconds {self.seconds} outside 32-bit range")
        if not 0 <= self.fraction < _FRACTION_SCALE:
            raise ValueError(f"fraction {self.fraction} outside 24-bit range")
        if not 0 <= self.quality <= 0xFF:
            raise ValueError(f"quality {self.quality} is not a byte")

    @classmethod
    def from_ns(cls, ns: int, quality: int = 0) -> "UtcTime":
        seconds, rem = divmod(ns, _NS)
        fraction = (rem * _FRACTION_SCALE + _NS // 2) // _NS
        if fraction == _FRACTION_SCALE:
            seconds, fraction = seconds + 1, 0
        return cls(seconds, fraction, quality)

    @property
    def nanoseconds(self) -> int:
        # truncated like protocol analyzers display it; from_ns() inverts this
        return self.seconds * _NS + self.fraction * _NS // _FRACTION_SCALE

    def to_bytes(self) -> bytes:
        return struct.pack("!I", self.seconds) + self.fraction.to_bytes(3, "big") + bytes([self.quality])

    @classmethod
    def from_bytes(cls, raw: bytes) -> "UtcTime":
        return cls(
            int.from_bytes(raw[0:4], "big"), int.from_bytes(raw[4:7], "big"), raw[7]
        )

    def isoformat(self) -> str:
        ns = self.nanoseconds
        base = datetime.fromtimestamp(ns // _NS, tz=timezone.utc)
        return f"{base:%Y-%m-%dT%H:%M:%S}.{ns % _NS:09d}Z"


@dataclass(frozen=True)
class BitString:
    nbits: int
    data: bytes

    def __post_init__(self) -> None:
        if self.nbits < 0 or len(self.data) != (self.nbits + 7) // 8:
            raise ValueError(f"{self.nbits} bits need {(self.nbits + 7) // 8} bytes, got {len(self.data)}")
        pad = -self.nbits % 8
        if pad and self.data[-1] & ((1 << pad) - 1):
            raise ValueError("bit-string padding bits must be zero")

    @classmethod
    def from_bits(cls, bits: str) -> "BitString":
        """Build from a string of '0'/'1' characters, most significant first."""
        n = len(bits)
        value = int(bits or "0", 2) << (-n % 8)
        return cls(n, value.to_bytes((n + 7) // 8, "big"))


DataValue = Union[bool, int, BitString, str]


@dataclass(frozen=True)
class GooseSessionHeader:
    appid: int
    length: int = 0
    reserved1: int = 0
    reserved2: int = 0


@dataclass(frozen=True)
class GoosePdu:
    gocb_ref: str
    time_allowed_to_live: int
    dat_set: str
    go_id: str
    t: UtcTime
    st_num: int
    sq_num: int
    test: bool = False
    conf_rev: int = 1
    nds_com: bool = False
    all_data: tuple[DataValue, ...] = field(default_factory=tuple)

    @property
    def num_dat_set_entries(self) -> int:
        return len(self.all_data)


def _check_string(name: str, value: str, *, allow_empty: bool = False) -> bytes:
    try:
        raw = value.encode("ascii")
    except UnicodeEncodeError:
        raise CodecError("visible-string must be ASCII", field=name) from None
    if not raw and not allow_empty:
        raise FieldSizeError("string must not be empty", field=name)
    if len(raw) > MAX_STRING:
        raise FieldSizeError(f"{len(raw)} bytes exceeds {MAX_STRING}", field=name)
    return raw


def _check_unsigned(name: str, value: int, low: int = 0) -> bytes:
    if isinstance(value, bool) or not low <= value <= UINT32_MAX:
        raise CodecError(f"value {value!r} outside {low}..{UINT32_MAX}", field=name)
    return ber.encode_integer(value)


def encode_data_value(value: DataValue) -> bytes:
    if isinstance(value, bool):
        return ber.tlv(DATA_BOOLEAN, b"\xff" if value else b"\x00")
    if isinstance(value, int):
        return ber.tlv(DATA_INTEGER, ber.encode_integer(value))
    if isinstance(value, BitString):
        return ber.tlv(DATA_BIT_STRING, bytes([-value.nbits % 8]) + value.data)
    if isinstance(value, str):
        return ber.tlv(DATA_VISIBLE_STRING, _check_string("allData", value, allow_empty=True))
    raise CodecError(f"unsupported data value {value!r}", field="allData")


def encode_pdu(pdu: GoosePdu) -> bytes:
    if pdu.time_allowed_to_live <= 0:
        raise CodecError("timeAllowedtoLive must be positive", field="timeAllowedtoLive")
    body = b"".join(
        [
            ber.tlv(0x80, _check_string("gocbRef", pdu.gocb_ref)),
            ber.tlv(0x81, _check_unsigned("timeAllowedtoLive", pdu.time_allowed_to_live, 1)),
            ber.tlv(0x82, _check_string("datSet", pdu.dat_set)),
            ber.tlv(0x83, _check_string("goID", pdu.go_id)),
            ber.tlv(0x84, pdu.t.to_bytes()),
            ber.tlv(0x85, _check_unsigned("stNum", pdu.st_num)),
            ber.tlv(0x86, _check_unsigned("sqNum", pdu.sq_num)),
            ber.tlv(0x87, b"\xff" if pdu.test else b"\x00"),
            ber.tlv(0x88, _check_unsigned("confRev", pdu.conf_rev)),
            ber.tlv(0x89, b"\xff" if pdu.nds_com else b"\x00"),
            ber.tlv(0x8A, ber.encode_integer(pdu.num_dat_set_entries)),
            ber.tlv(TAG_ALL_DATA, b"".join(encode_data_value(v) for v in pdu.all_data)),
        ]
    )
    return ber.tlv(TAG_GOOSE_PDU, body)


def encode_goose(header: GooseSessionHeader, pdu: GoosePdu) -> bytes:
    """Session header followed by the goosePdu; the length field is recomputed."""
    if not 0 <= header.appid <= 0xFFFF:
        raise CodecError(f"appid {header.appid} is not 16-bit", field="APPID")
    body = encode_pdu(pdu)
    return struct.pack("!HHHH", header.appid, SESSION_HEADER_LEN + len(body), 0, 0) + body


_FIELDS = (
    (0x80, "gocbRef"),
    (0x81, "timeAllowedtoLive"),
    (0x82, "datSet"),
    (0x83, "goID"),
    (0x84, "t"),
    (0x85, "stNum"),
    (0x86, "sqNum"),
    (0x87, "test"),
    (0x88, "confRev"),
    (0x89, "ndsCom"),
    (0x8A, "numDatSetEntries"),
    (TAG_ALL_DATA, "allData"),
)


def _decode_bool(content: bytes, name: str, offset: int) -> bool:
    if len(content) != 1:
        raise CodecError("boolean must be one byte", field=name, offset=offset)
    return content[0] != 0


def _decode_string(content: bytes, name: str, offset: int) -> str:
    if len(content) > MAX_STRING:
        raise FieldSizeError(f"{len(content)} bytes exceeds {MAX_STRING}", field=name, offset=offset)
    try:
        return content.decode("ascii")
    except UnicodeDecodeError:
        raise CodecError("visible-string must be ASCII", field=name, offset=offset) from None


def _decode_all_data(buf: bytes, start: int, end: int) -> list[DataValue]:
    values: list[DataValue] = []
    pos = start
    while pos < end:
        name = f"allData[{len(values)}]"
        tag, cs, ce = ber.read_tlv(buf, pos, end, name)
        content = buf[cs:ce]
        if tag == DATA_BOOLEAN:
            values.append(_decode_bool(content, name, cs))
        elif tag == DATA_INTEGER:
            values.append(ber.decode_integer(content, name, cs))
        elif tag == DATA_BIT_STRING:
            if not content or content[0] > 7 or (len(content) == 1 and content[0]):
                raise CodecError("bad bit-string unused-bits octet", field=name, offset=cs)
            nbits = (len(content) - 1) * 8 - content[0]
            try:
                values.append(BitString(nbits, bytes(content[1:])))
            except ValueError as exc:
                raise CodecError(str(exc), field=name, offset=cs) from None
        elif tag == DATA_VISIBLE_STRING:
            values.append(_decode_string(content, name, cs))
        else:
            raise CodecError(f"unknown data tag {tag:#04x}", field=name, offset=pos)
        pos = ce
    return values


def decode_pdu(buf: bytes, offset: int = 0) -> tuple[GoosePdu, int]:
    """Decode a goosePdu starting at ``offset``; returns the PDU and its end offset."""
    tag, start, end = ber.read_tlv(buf, offset, len(buf), "goosePdu")
    if tag != TAG_GOOSE_PDU:
        raise CodecError(f"expected goosePdu tag 0x61, got {tag:#04x}", field="goosePdu", offset=offset)
    raw: dict[str, object] = {}
    pos = start
    for expected, name in _FIELDS:
        if pos >= end:
            raise CodecError("missing field", field=name, offset=pos)
        tag, cs, ce = ber.read_tlv(buf, pos, end, name)
        if tag != expected:
            raise CodecError(
                f"unknown or out-of-order tag {tag:#04x} (expected {expected:#04x})",
                field=name,
                offset=pos,
            )
        content = bytes(buf[cs:ce])
        if name in ("gocbRef", "datSet", "goID"):
            raw[name] = _decode_string(content, name, cs)
            if not raw[name]:
                raise CodecError("string must not be empty", field=name, offset=cs)
        elif name == "t":
            if len(content) != 8:
                raise CodecError("UtcTime must be 8 bytes", field=name, offset=cs)
            raw[name] = UtcTime.from_bytes(content)
        elif name in ("test", "ndsCom"):
            raw[name] = _decode_bool(content, name, cs)
        elif name == "allData":
            raw[name] = _decode_all_data(buf, cs, ce)
        else:
            value = ber.decode_integer(content, name, cs)
            if not 0 <= value <= UINT32_MAX:
                raise CodecError(f"value {value} outside unsigned 32-bit range", field=name, offset=cs)
            raw[name] = value
        pos = ce
    if pos != end:
        raise CodecError("trailing bytes inside goosePdu", field="goosePdu", offset=pos)
    all_data = tuple(raw["allData"])  # type: ignore[arg-type]
    if raw["numDatSetEntries"] != len(all_data):
        raise CodecError(
            f"numDatSetEntries={raw['numDatSetEntries']} but allData has {len(all_data)} items",
            field="numDatSetEntries",
        )
    if raw["timeAllowedtoLive"] == 0:
        raise CodecError("timeAllowedtoLive must be positive", field="timeAllowedtoLive")
    pdu = GoosePdu(
        gocb_ref=raw["gocbRef"],  # type: ignore[arg-type]
        time_allowed_to_live=raw["timeAllowedtoLive"],  # type: ignore[arg-type]
        dat_set=raw["datSet"],  # type: ignore[arg-type]
        go_id=raw["goID"],  # type: ignore[arg-type]
        t=raw["t"],  # type: ignore[arg-type]
        st_num=raw["stNum"],  # type: ignore[arg-type]
        sq_num=raw["sqNum"],  # type: ignore[arg-type]
        test=raw["test"],  # type: ignore[arg-type]
        conf_rev=raw["confRev"],  # type: ignore[arg-type]
        nds_com=raw["ndsCom"],  # type: ignore[arg-type]
        all_data=all_data,
    )
    return pdu, end


def decode_goose(data: bytes) -> tuple[GooseSessionHeader, GoosePdu]:
    """Inverse of :func:`encode_goose`; checks ``length == 8 + PDU size``.

    Bytes beyond the declared length (Ethernet minimum-size padding) are ignored.
    """
    if len(data) < SESSION_HEADER_LEN:
        raise CodecError("truncated GOOSE session header", field="header", offset=len(data))
    header = GooseSessionHeader(*struct.unpack_from("!HHHH", data, 0))
    _, _, pdu_end = ber.read_tlv(data, SESSION_HEADER_LEN, len(data), "goosePdu")
    if pdu_end != header.length:
        raise CodecError(
            f"length field {header.length} != 8 + goosePdu size {pdu_end - SESSION_HEADER_LEN}",
            field="Length",
            offset=2,
        )
    pdu, _ = decode_pdu(data[:pdu_end], SESSION_HEADER_LEN)
    return header, pdu
