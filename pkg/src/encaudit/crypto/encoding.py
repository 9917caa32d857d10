"""Byte encodings for log values.

Every plaintext value handed to a cipher is first tagged so that strings and
integers never collide, and so that two values of the same kind and length
always encode to byte strings of the same length.
"""

import struct

INT_MIN = -(2 ** 63)
INT_MAX = 2 ** 63 - 1


def encode_value(v):
    """Encode a str, bytes or int into tagged bytes."""
    if isinstance(v, bool):
        raise TypeError("booleans are not log values")
    if isinstance(v, int):
        if not INT_MIN <= v <= INT_MAX:
            raise OverflowError(f"integer {v} does not fit in 64 bits")
        return b"i" + struct.pack(">q", v)
    if isinstance(v, str):
        return b"s" + v.encode("utf-8")
    if isinstance(v, (bytes, bytearray)):
        return b"b" + bytes(v)
    raise TypeError(f"unsupported value type {type(v).__name__}")


def decode_value(data):
    """Inverse of :func:`encode_value`."""
    if not data:
        raise ValueError("empty encoding")
    tag, body = data[:1], data[1:]
    if tag == b"i":
        if len(body) != 8:
            raise ValueError("bad integer encoding")
        return struct.unpack(">q", body)[0]
    if tag == b"s":
        return body.decode("utf-8")
    if tag == b"b":
        return bytes(body)
    raise ValueError(f"unknown value tag {tag!r}")
