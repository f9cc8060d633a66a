"""ULEB128 encoding, shared by the DEX parser and the patch wire format."""


def encode_uleb128(value: int) -> bytes:
    if value < 0:
        raise ValueError("uleb128 encodes non-negative integers only")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def decode_uleb128(data, offset: int = 0) -> tuple[int, int]:
    """Decode at `offset`; returns (value, bytes consumed)."""
    result = 0
    shift = 0
    pos = offset
    while True:
        if pos >= len(data):
            raise ValueError("truncated uleb128")
        byte = data[pos]
        result |= (byte & 0x7F) << shift
        pos += 1
        if not byte & 0x80:
            return result, pos - offset
        shift += 7
        if shift > 63:
            raise ValueError("uleb128 too long")
