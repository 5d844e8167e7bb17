# services/distill/key_buffer.py

from enum import IntEnum

import numpy as np

from services.errors import DistillError

WORD_BITS = 64


class KeyStage(IntEnum):
    RAW = 0
    SIFTED = 1
    ESTIMATED = 2
    RECONCILED = 3
    SECRET = 4


def _pack(bits):
    packed = np.packbits(bits, bitorder='big')
    padding = (-len(packed)) % 8
    if padding:
        packed = np.concatenate([packed, np.zeros(padding, dtype=np.uint8)])
    return packed.view('>u8').astype(np.uint64)


class KeyBuffer:
    """
    Bit string packed 64 bits per word, most significant bit first.

    Bits past `length` in the last word are always zero, so parities and
    Hamming distances can be computed wordwise.
    """
    __slots__ = ('words', 'length', 'stage')

    def __init__(self, words, length, stage=KeyStage.RAW):
        words = np.asarray(words, dtype=np.uint64)
        if len(words) != -(-length // WORD_BITS):
            raise DistillError(f"{len(words)} words cannot hold exactly {length} bits")
        self.words = words
        self.length = int(length)
        self.stage = KeyStage(stage)

    @classmethod
    def from_bits(cls, bits, stage=KeyStage.RAW):
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size and bits.max() > 1:
            raise DistillError("Key bits must be 0 or 1")
        return cls(_pack(bits), len(bits), stage)

    @classmethod
    def from_string(cls, text, stage=KeyStage.RAW):
        return cls.from_bits([int(ch) for ch in text], stage)

    @classmethod
    def empty(cls, stage=KeyStage.RAW):
        return cls(np.zeros(0, dtype=np.uint64), 0, stage)

    def to_bits(self):
        raw = self.words.astype('>u8').view(np.uint8)
        return np.unpackbits(raw, bitorder='big')[:self.length]

    def __len__(self):
        return self.length

    def __eq__(self, other):
        if not isinstance(other, KeyBuffer):
            return NotImplemented
        return self.length == other.length and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.length, self.words.tobytes()))

    def __repr__(self):
        preview = ''.join(map(str, self.to_bits()[:32]))
        suffix = '...' if self.length > 32 else ''
        return f"KeyBuffer({self.stage.name.lower()}, {self.length} bits, {preview}{suffix})"

    def with_stage(self, stage):
        stage = KeyStage(stage)
        if stage < self.stage:
            raise DistillError(f"Key stage cannot move back from {self.stage.name} to {stage.name}")
        return KeyBuffer(self.words.copy(), self.length, stage)

    def parity(self):
        if not self.length:
            return 0
        return int(np.bitwise_count(np.bitwise_xor.reduce(self.words))) & 1

    def hamming_distance(self, other):
        if self.length != other.length:
            raise DistillError(f"Key lengths differ: {self.length} != {other.length}")
        return int(np.bitwise_count(self.words ^ other.words).sum())

    def xor(self, other):
        if self.length != other.length:
            raise DistillError(f"Key lengths differ: {self.length} != {other.length}")
        return KeyBuffer(self.words ^ other.words, self.length, self.stage)

    def take(self, indices):
        return KeyBuffer.from_bits(self.to_bits()[np.asarray(indices, dtype=np.int64)], self.stage)

    def drop(self, indices):
        keep = np.ones(self.length, dtype=bool)
        keep[np.asarray(indices, dtype=np.int64)] = False
        return KeyBuffer.from_bits(self.to_bits()[keep], self.stage)

    def concat(self, other):
        stage = max(self.stage, other.stage)
        return KeyBuffer.from_bits(np.concatenate([self.to_bits(), other.to_bits()]), stage)

    def to_hex(self):
        """
        Lowercase hex, most significant bit first; the last nibble is zero-padded.
        """
        if not self.length:
            return ''
        raw = self.words.astype('>u8').view(np.uint8).tobytes().hex()
        return raw[:-(-self.length // 4)]
