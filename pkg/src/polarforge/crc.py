"""Bitwise CRC over bit sequences (MSB first, no reflection, zero init and xorout)."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_bits


@dataclass(frozen=True)
class CrcSpec:
    """CRC of ``width`` bits; ``polynomial`` holds the coefficients below x^width (0x07 = x^8+x^2+x+1)."""

    width: int = 8
    polynomial: int = 0x07

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("CRC width must be positive")
        if not 0 <= self.polynomial < (1 << self.width):
            raise ValueError("polynomial must fit in width bits (leading term implied)")

    @property
    def generator_bits(self):
        """All width + 1 generator coefficients, highest degree first."""
        full = (1 << self.width) | self.polynomial
        return np.array([(full >> k) & 1 for k in range(self.width, -1, -1)], dtype=np.uint8)


def crc_remainder(bits, crc=CrcSpec()):
    bits = check_bits(bits)
    reg = 0
    top = 1 << (crc.width - 1)
    mask = (1 << crc.width) - 1
    for b in bits:
        feedback = bool(reg & top) ^ bool(b)
        reg = (reg << 1) & mask
        if feedback:
            reg ^= crc.polynomial
    return np.array([(reg >> k) & 1 for k in range(crc.width - 1, -1, -1)], dtype=np.uint8)


def crc_attach(bits, crc=CrcSpec()):
    bits = check_bits(bits)
    return np.concatenate([bits, crc_remainder(bits, crc)])


def crc_check(bits, crc=CrcSpec()):
    bits = check_bits(bits)
    if bits.shape[-1] < crc.width:
        raise ValueError(f"word shorter than the {crc.width}-bit CRC")
    k = bits.shape[-1] - crc.width
    return bool(np.array_equal(crc_remainder(bits[:k], crc), bits[k:]))


def bytes_to_bits(data):
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_int(bits):
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out
