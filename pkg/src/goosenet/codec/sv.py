"""Sampled-Value APDU (savPdu) in the 9-2 style layout.

Each ASDU carries eight INT32 samples (Ia Ib Ic In Va Vb Vc Vn), every one
followed by a 32-bit quality word. smpCnt and confRev use fixed widths as
merging units do, so frame size depends only on the ASDU count and svID
lengths.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from . import ber
from .errors import CodecError, FieldSizeError
from .ethernet import HEADER_LEN, VLAN_TAG_LEN

TAG_SAV_PDU = 0x60
TAG_NO_ASDU = 0x80
TAG_SEQ_ASDU = 0xA2
TAG_ASDU = 0x30
TAG_SV_ID = 0x80
TAG_SMP_CNT = 0x82
TAG_CONF_REV = 0x83
TAG_SMP_SYNCH = 0x85
TAG_SEQ_DATA = 0x87

SAMPLES_PER_ASDU = 8
MAX_SV_ID = 129
_SEQ_DATA = struct.Struct("!" + "iI" * SAMPLES_PER_ASDU)


@dataclass(frozen=True)
class SvAsdu:
    sv_id: str
    smp_cnt: int
    conf_rev: int
    samples: tuple[tuple[int, int], ...]
    smp_synch: int = 0

    def __post_init__(self) -> None:
        if len(self.samples) != SAMPLES_PER_ASDU:
            raise ValueError(f"ASDU needs {SAMPLES_PER_ASDU} samples, got {len(self.samples)}")
        if not 0 <= self.smp_cnt <= 0xFFFF:
            raise ValueError(f"smpCnt {self.smp_cnt} is not 16-bit")


@dataclass(frozen=True)
class SvApdu:
    appid: int
    asdus: tuple[SvAsdu, ...]

    @property
    def no_asdu(self) -> int:
        return len(self.asdus)

    @property
    def length(self) -> int:
        return len(encode_sv(self))


def _encode_asdu(asdu: SvAsdu) -> bytes:
    raw_id = asdu.sv_id.encode("ascii")
    if not raw_id:
        raise CodecError("svID must not be empty", field="svID")
    if len(raw_id) > MAX_SV_ID:
        raise FieldSizeError(f"{len(raw_id)} bytes exceeds {MAX_SV_ID}", field="svID")
    if not 0 <= asdu.conf_rev <= 0xFFFFFFFF:
        raise CodecError(f"confRev {asdu.conf_rev} is not 32-bit", field="confRev")
    if not 0 <= asdu.smp_synch <= 0xFF:
        raise CodecError(f"smpSynch {asdu.smp_synch} is not a byte", field="smpSynch")
    flat = [x for pair in asdu.samples for x in pair]
    try:
        seq = _SEQ_DATA.pack(*flat)
    except struct.error as exc:
        raise CodecError(f"sample out of range: {exc}", field="seqData") from None
    return ber.tlv(
        TAG_ASDU,
        ber.tlv(TAG_SV_ID, raw_id)
        + ber.tlv(TAG_SMP_CNT, struct.pack("!H", asdu.smp_cnt))
        + ber.tlv(TAG_CONF_REV, struct.pack("!I", asdu.conf_rev))
        + ber.tlv(TAG_SMP_SYNCH, bytes([asdu.smp_synch]))
        + ber.tlv(TAG_SEQ_DATA, seq),
    )


def encode_sv(apdu: SvApdu) -> bytes:
    if not apdu.asdus:
        raise CodecError("an SV APDU needs at least one ASDU", field="noASDU")
    if not 0 <= apdu.appid <= 0xFFFF:
        raise CodecError(f"appid {apdu.appid} is not 16-bit", field="APPID")
    body = ber.tlv(
        TAG_SAV_PDU,
        ber.tlv(TAG_NO_ASDU, ber.encode_integer(len(apdu.asdus)))
        + ber.tlv(TAG_SEQ_ASDU, b"".join(_encode_asdu(a) for a in apdu.asdus)),
    )
    return struct.pack("!HHHH", apdu.appid, 8 + len(body), 0, 0) + body


def _expect(buf: bytes, pos: int, end: int, tag: int, name: str) -> tuple[int, int]:
    got, cs, ce = ber.read_tlv(buf, pos, end, name)
    if got != tag:
        raise CodecError(f"expected tag {tag:#04x}, got {got:#04x}", field=name, offset=pos)
    return cs, ce


def _decode_asdu(buf: bytes, start: int, end: int, index: int) -> SvAsdu:
    prefix = f"ASDU[{index}]."
    cs, ce = _expect(buf, start, end, TAG_SV_ID, prefix + "svID")
    try:
        sv_id = buf[cs:ce].decode("ascii")
    except UnicodeDecodeError:
        raise CodecError("svID must be ASCII", field=prefix + "svID", offset=cs) from None
    if not sv_id or len(sv_id) > MAX_SV_ID:
        raise FieldSizeError(f"svID length {len(sv_id)}", field=prefix + "svID", offset=cs)
    fixed = (
        (TAG_SMP_CNT, "smpCnt", 2),
        (TAG_CONF_REV, "confRev", 4),
        (TAG_SMP_SYNCH, "smpSynch", 1),
        (TAG_SEQ_DATA, "seqData", _SEQ_DATA.size),
    )
    values = {}
    pos = ce
    for tag, name, width in fixed:
        cs, ce = _expect(buf, pos, end, tag, prefix + name)
        if ce - cs != width:
            raise CodecError(f"expected {width} bytes, got {ce - cs}", field=prefix + name, offset=cs)
        values[name] = bytes(buf[cs:ce])
        pos = ce
    if pos != end:
        raise CodecError("trailing bytes in ASDU", field=prefix.rstrip("."), offset=pos)
    flat = _SEQ_DATA.unpack(values["seqData"])
    return SvAsdu(
        sv_id=sv_id,
        smp_cnt=int.from_bytes(values["smpCnt"], "big"),
        conf_rev=int.from_bytes(values["confRev"], "big"),
        samples=tuple(zip(flat[0::2], flat[1::2])),
        smp_synch=values["smpSynch"][0],
    )


def decode_sv(data: bytes) -> SvApdu:
    if len(data) < 8:
        raise CodecError("truncated SV session header", field="header", offset=len(data))
    appid, length, _, _ = struct.unpack_from("!HHHH", data, 0)
    cs, pdu_end = _expect(data, 8, len(data), TAG_SAV_PDU, "savPdu")
    if pdu_end != length:
        raise CodecError(f"length field {length} != {pdu_end}", field="Length", offset=2)
    ncs, nce = _expect(data, cs, pdu_end, TAG_NO_ASDU, "noASDU")
    no_asdu = ber.decode_integer(data[ncs:nce], "noASDU", ncs)
    if no_asdu < 1:
        raise CodecError(f"noASDU={no_asdu}", field="noASDU", offset=ncs)
    scs, sce = _expect(data, nce, pdu_end, TAG_SEQ_ASDU, "seqASDU")
    if sce != pdu_end:
        raise CodecError("trailing bytes in savPdu", field="savPdu", offset=sce)
    asdus = []
    pos = scs
    while pos < sce:
        acs, ace = _expect(data, pos, sce, TAG_ASDU, f"ASDU[{len(asdus)}]")
        asdus.append(_decode_asdu(data, acs, ace, len(asdus)))
        pos = ace
    if len(asdus) != no_asdu:
        raise CodecError(f"noASDU={no_asdu} but {len(asdus)} ASDUs present", field="noASDU", offset=ncs)
    return SvApdu(appid=appid, asdus=tuple(asdus))


def sv_frame_size(sv_id_len: int, n_asdu: int = 1, tagged: bool = True) -> int:
    """Ethernet wire size of an SV frame whose ASDUs all use an svID of this length."""
    asdu = ber.tlv_size(
        ber.tlv_size(sv_id_len) + ber.tlv_size(2) + ber.tlv_size(4) + ber.tlv_size(1)
        + ber.tlv_size(_SEQ_DATA.size)
    )
    inner = ber.tlv_size(len(ber.encode_integer(n_asdu))) + ber.tlv_size(asdu * n_asdu)
    return HEADER_LEN + (VLAN_TAG_LEN if tagged else 0) + 8 + ber.tlv_size(inner)


def pad_sv_id(sv_id: str, frame_bytes: int, tagged: bool = True, fill: str = "_") -> str:
    """Extend ``sv_id`` with ``fill`` so a one-ASDU frame is exactly ``frame_bytes`` long."""
    for n in range(max(len(sv_id), 1), MAX_SV_ID + 1):
        if sv_frame_size(n, 1, tagged) == frame_bytes:
            return sv_id + fill * (n - len(sv_id))
    raise ValueError(f"no svID length starting from {sv_id!r} yields a {frame_bytes}-byte frame")
