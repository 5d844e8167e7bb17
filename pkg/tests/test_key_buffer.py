import numpy as np
import pytest

from services.distill.key_buffer import KeyBuffer, KeyStage
from services.errors import DistillError


def random_bits(n, seed=0):
    return np.random.default_rng(seed).integers(0, 2, size=n, dtype=np.uint8)


@pytest.mark.parametrize("n", [0, 1, 63, 64, 65, 1000])
def test_bits_survive_packing(n):
    bits = random_bits(n, seed=n)
    key = KeyBuffer.from_bits(bits)
    assert len(key) == n
    assert np.array_equal(key.to_bits(), bits)
    assert len(key.words) == -(-n // 64)


def test_rejects_non_binary_values():
    with pytest.raises(DistillError):
        KeyBuffer.from_bits([0, 1, 2])


def test_parity_and_hamming_distance_match_unpacked_arithmetic():
    a, b = random_bits(777, 1), random_bits(777, 2)
    ka, kb = KeyBuffer.from_bits(a), KeyBuffer.from_bits(b)
    assert ka.parity() == int(a.sum()) % 2
    assert ka.hamming_distance(kb) == int(np.sum(a != b))
    assert np.array_equal(ka.xor(kb).to_bits(), a ^ b)
    assert KeyBuffer.empty().parity() == 0


def test_length_mismatch_is_rejected():
    with pytest.raises(DistillError):
        KeyBuffer.from_string('101').hamming_distance(KeyBuffer.from_string('10'))


def test_take_drop_concat():
    key = KeyBuffer.from_string('1011001110', KeyStage.SIFTED)
    assert key.take([0, 2, 9]) == KeyBuffer.from_string('110')
    assert key.drop([0, 2, 9]) == KeyBuffer.from_string('0100111')
    joined = key.take([0, 1]).concat(key.drop([0, 1]))
    assert joined == key
    assert joined.stage == KeyStage.SIFTED


def test_stage_moves_forward_only():
    key = KeyBuffer.from_string('1010', KeyStage.SIFTED)
    assert key.with_stage(KeyStage.RECONCILED).stage == KeyStage.RECONCILED
    assert key.with_stage(KeyStage.SIFTED).stage == KeyStage.SIFTED
    with pytest.raises(DistillError):
        key.with_stage(KeyStage.RAW)


@pytest.mark.parametrize("text, expected", [
    ('', ''),
    ('1', '8'),
    ('1011', 'b'),
    ('10110000' * 2, 'b0b0'),
    ('101', 'a'),
])
def test_to_hex_is_msb_first(text, expected):
    assert KeyBuffer.from_string(text).to_hex() == expected


def test_equality_ignores_stage_but_hash_is_consistent():
    a = KeyBuffer.from_string('1100', KeyStage.RAW)
    b = KeyBuffer.from_string('1100', KeyStage.SECRET)
    assert a == b
    assert hash(a) == hash(b)
    assert a != KeyBuffer.from_string('1101')
