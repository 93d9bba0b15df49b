"""Minimal BER tag-length-value primitives used by the GOOSE and SV codecs.

Only single-byte tags and definite lengths are supported. Encoders always
produce the shortest length form; the decoder rejects anything else so that
every value has exactly one wire representation.
"""

from __future__ import annotations

from .errors import CodecError


def encode_length(n: int) -> bytes:
    if n < 0:
        raise ValueError(f"negative length {n}")
    if n < 0x80:
        return bytes([n])
    body = n.to_bytes((n.bit_length() + 7) // 8, "big")
    if len(body) > 4:
        raise ValueError(f"length {n} too large")
    return bytes([0x80 | len(body)]) + body


def tlv(tag: int, value: bytes) -> bytes:
    return bytes([tag]) + encode_length(len(value)) + value


def tlv_size(value_len: int) -> int:
    return 1 + len(encode_length(value_len)) + value_len


def encode_integer(value: int) -> bytes:
    """Minimal two's-complement content octets for ``value``."""
    n = (value + (value < 0)).bit_length() // 8 + 1
    return value.to_bytes(n, "big", signed=True)


def decode_integer(content: bytes, field: str, offset: int) -> int:
    if not content:
        raise CodecError("empty integer", field=field, offset=offset)
    if len(content) > 1:
        first, second = content[0], content[1]
        if (first == 0x00 and second < 0x80) or (first == 0xFF and second >= 0x80):
            raise CodecError("non-minimal integer encoding", field=field, offset=offset)
    return int.from_bytes(content, "big", signed=True)


def read_tlv(buf: bytes, offset: int, end: int, field: str) -> tuple[int, int, int]:
    """Read one TLV header at ``offset``.

    Returns ``(tag, content_start, content_end)``. Raises :class:`CodecError`
    on truncation, indefinite or non-minimal lengths, or overrun of ``end``.
    """
    if offset + 2 > end:
        raise CodecError("truncated TLV header", field=field, offset=offset)
    tag = buf[offset]
    first = buf[offset + 1]
    pos = offset + 2
    if first < 0x80:
        length = first
    elif first == 0x80:
        raise CodecError("indefinite length not allowed", field=field, offset=offset + 1)
    else:
        nbytes = first & 0x7F
        if nbytes > 4 or pos + nbytes > end:
            raise CodecError("truncated or oversized length", field=field, offset=offset + 1)
        length = int.from_bytes(buf[pos:pos + nbytes], "big")
        if encode_length(length) != buf[offset + 1:pos + nbytes]:
            raise CodecError("non-minimal length encoding", field=field, offset=offset + 1)
        pos += nbytes
    if pos + length > end:
        raise CodecError(
            f"value of {length} bytes overruns container", field=field, offset=offset
        )
    return tag, pos, pos + length
