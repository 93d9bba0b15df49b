from .errors import CodecError, FieldSizeError, FrameSizeError, TruncatedFrameError
from .ethernet import (
    DEFAULT_MAX_FRAME,
    ETHERTYPE_GOOSE,
    ETHERTYPE_IPV4,
    ETHERTYPE_SV,
    ETHERTYPE_VLAN,
    STRICT_MAX_FRAME,
    EthernetFrame,
    MacAddress,
    VlanTag,
    decode_frame,
    encode_frame,
    peek_ethertype,
    wire_size,
)
from .goose import (
    BitString,
    DataValue,
    GoosePdu,
    GooseSessionHeader,
    UtcTime,
    decode_goose,
    encode_goose,
)
from .sv import SvApdu, SvAsdu, decode_sv, encode_sv, pad_sv_id, sv_frame_size

__all__ = [
    "BitString",
    "CodecError",
    "DataValue",
    "DEFAULT_MAX_FRAME",
    "ETHERTYPE_GOOSE",
    "ETHERTYPE_IPV4",
    "ETHERTYPE_SV",
    "ETHERTYPE_VLAN",
    "EthernetFrame",
    "FieldSizeError",
    "FrameSizeError",
    "GoosePdu",
    "GooseSessionHeader",
    "MacAddress",
    "STRICT_MAX_FRAME",
    "SvApdu",
    "SvAsdu",
    "TruncatedFrameError",
    "UtcTime",
    "VlanTag",
    "decode_frame",
    "decode_goose",
    "decode_sv",
    "encode_frame",
    "encode_goose",
    "encode_sv",
    "pad_sv_id",
    "peek_ethertype",
    "sv_frame_size",
    "wire_size",
]
