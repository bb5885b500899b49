"""Canonical binary encoding for values crossing the isolate boundary.

Tag byte, then payload (little endian):
  0x00 Unit
  0x01 Int            signed 64-bit
  0x02 Bool           one byte, 0 or 1
  0x03 Str            u32 byte length + UTF-8 bytes
  0x04 List           u32 count + element encodings
  0x05 HashRef        u64 object hash + u32 class id
  0x06 NeutralObject  u32 class id + u32 field count + field encodings

Every value has exactly one encoding and decode rejects anything else
(unknown tags, bool bytes above 1, invalid UTF-8, trailing bytes), so
encode/decode is a bijection between values and their byte strings.

Wire values are structural tuples, independent of the runtime heap:
  ("unit",) ("int", v) ("bool", b) ("str", s) ("list", [wv...])
  ("href", hash, class_id) ("neutral", class_id, [wv...])
"""

from __future__ import annotations

import struct

from ..errors import MarshalError

TAG_UNIT = 0x00
TAG_INT = 0x01
TAG_BOOL = 0x02
TAG_STR = 0x03
TAG_LIST = 0x04
TAG_HASHREF = 0x05
TAG_NEUTRAL = 0x06

WireValue = tuple

UNIT: WireValue = ("unit",)

_I64_MIN = -(2**63)
_I64_MAX = 2**63 - 1

_PACK_Q = struct.Struct("<q")
_PACK_I = struct.Struct("<I")
_PACK_QI = struct.Struct("<QI")
_PACK_II = struct.Struct("<II")

_B_UNIT = bytes([TAG_UNIT])
_B_INT = bytes([TAG_INT])
_B_STR = bytes([TAG_STR])
_B_LIST = bytes([TAG_LIST])
_B_HASHREF = bytes([TAG_HASHREF])
_B_NEUTRAL = bytes([TAG_NEUTRAL])


def encode(value: WireValue) -> bytes:
    """Encode a wire value to its canonical byte string."""
    kind = value[0]
    if kind == "unit":
        return _B_UNIT
    if kind == "int":
        v = value[1]
        if not _I64_MIN <= v <= _I64_MAX:
            raise MarshalError(f"integer {v} out of 64-bit range")
        return _B_INT + _PACK_Q.pack(v)
    if kind == "bool":
        return bytes([TAG_BOOL, 1 if value[1] else 0])
    if kind == "str":
        data = value[1].encode("utf-8")
        return _B_STR + _PACK_I.pack(len(data)) + data
    if kind == "list":
        items = value[1]
        out = [_B_LIST, _PACK_I.pack(len(items))]
        pack_len = _PACK_I.pack
        for item in items:
            if item[0] == "str":
                data = item[1].encode("utf-8")
                out.append(_B_STR + pack_len(len(data)) + data)
            else:
                out.append(encode(item))
        return b"".join(out)
    if kind == "href":
        _, h, class_id = value
        return _B_HASHREF + _PACK_QI.pack(h, class_id)
    if kind == "neutral":
        _, class_id, fields = value
        out = [_B_NEUTRAL, _PACK_II.pack(class_id, len(fields))]
        out += [encode(f) for f in fields]
        return b"".join(out)
    raise MarshalError(f"unknown wire value kind {kind!r}")


def decode_prefix(data: bytes, offset: int = 0) -> tuple[WireValue, int]:
    """Decode one value starting at offset; returns (value, next offset)."""
    if offset >= len(data):
        raise MarshalError("truncated wire data")
    tag = data[offset]
    offset += 1
    if tag == TAG_UNIT:
        return UNIT, offset
    if tag == TAG_INT:
        if offset + 8 > len(data):
            raise MarshalError("truncated Int")
        (v,) = struct.unpack_from("<q", data, offset)
        return ("int", v), offset + 8
    if tag == TAG_BOOL:
        if offset >= len(data):
            raise MarshalError("truncated Bool")
        b = data[offset]
        if b > 1:
            raise MarshalError(f"non-canonical Bool byte {b}")
        return ("bool", b == 1), offset + 1
    if tag == TAG_STR:
        if offset + 4 > len(data):
            raise MarshalError("truncated Str length")
        (n,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + n > len(data):
            raise MarshalError("truncated Str payload")
        try:
            s = data[offset:offset + n].decode("utf-8")
        except UnicodeDecodeError as e:
            raise MarshalError(f"invalid UTF-8 in Str: {e}") from e
        return ("str", s), offset + n
    if tag == TAG_LIST:
        if offset + 4 > len(data):
            raise MarshalError("truncated List count")
        (n,) = struct.unpack_from("<I", data, offset)
        offset += 4
        items = []
        append = items.append
        size = len(data)
        unpack_len = _PACK_I.unpack_from
        for _ in range(n):
            if offset < size and data[offset] == TAG_STR:
                if offset + 5 > size:
                    raise MarshalError("truncated Str length")
                (sn,) = unpack_len(data, offset + 1)
                end = offset + 5 + sn
                if end > size:
                    raise MarshalError("truncated Str payload")
                try:
                    s = data[offset + 5:end].decode("utf-8")
                except UnicodeDecodeError as e:
                    raise MarshalError(f"invalid UTF-8 in Str: {e}") from e
                append(("str", s))
                offset = end
            else:
                item, offset = decode_prefix(data, offset)
                append(item)
        return ("list", items), offset
    if tag == TAG_HASHREF:
        if offset + 12 > len(data):
            raise MarshalError("truncated HashRef")
        h, class_id = struct.unpack_from("<QI", data, offset)
        return ("href", h, class_id), offset + 12
    if tag == TAG_NEUTRAL:
        if offset + 8 > len(data):
            raise MarshalError("truncated NeutralObject header")
        class_id, n = struct.unpack_from("<II", data, offset)
        offset += 8
        fields = []
        for _ in range(n):
            f, offset = decode_prefix(data, offset)
            fields.append(f)
        return ("neutral", class_id, fields), offset
    raise MarshalError(f"unknown wire tag 0x{tag:02x}")


def decode(data: bytes) -> WireValue:
    """Decode exactly one value; trailing bytes are rejected."""
    value, offset = decode_prefix(data, 0)
    if offset != len(data):
        raise MarshalError(f"{len(data) - offset} trailing byte(s) after value")
    return value


def decode_sequence(data: bytes, count: int) -> list[WireValue]:
    """Decode exactly count back-to-back values consuming all bytes."""
    values = []
    offset = 0
    for _ in range(count):
        v, offset = decode_prefix(data, offset)
        values.append(v)
    if offset != len(data):
        raise MarshalError(f"{len(data) - offset} trailing byte(s) after sequence")
    return values
