from __future__ import annotations


class CodecError(ValueError):
    """Malformed input or an encode-side invariant violation.

    ``field`` names the offending field when known and ``offset`` is the byte
    offset into the buffer being decoded.
    """

    def __init__(self, message: str, *, field: str | None = None, offset: int | None = None):
        self.field = field
        self.offset = offset
        where = []
        if field is not None:
            where.append(f"field={field}")
        if offset is not None:
            where.append(f"offset={offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class TruncatedFrameError(CodecError):
    pass


class FrameSizeError(CodecError):
    pass


class FieldSizeError(CodecError):
    pass
