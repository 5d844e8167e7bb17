# services/session/messages.py

import json
from dataclasses import dataclass, field
from typing import Dict, Tuple

from services.errors import ChannelError

MESSAGE_TYPES = (
    'basis_announce',
    'sample_indices',
    'sample_bits',
    'parity_request',
    'parity_response',
    'shuffle_seed',
    'hash_seed',
    'fingerprint',
    'abort',
)


@dataclass(frozen=True)
class Message:
    """
    One classical-channel message: a type, the block it belongs to and
    named arrays of integers.
    """
    type: str
    block: int
    payload: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.type not in MESSAGE_TYPES:
            raise ChannelError(f"Unknown message type '{self.type}'")
        for name in self.payload:
            if name in ('type', 'block'):
                raise ChannelError(f"Payload field '{name}' collides with a header field")

    @classmethod
    def make(cls, type_, block, **arrays):
        payload = {name: tuple(int(v) for v in values) for name, values in arrays.items()}
        return cls(type_, int(block), payload)

    def get(self, name):
        try:
            return self.payload[name]
        except KeyError:
            raise ChannelError(f"'{self.type}' message for block {self.block} lacks '{name}'") from None

    @property
    def parity_bits(self):
        """
        Number of parity bits this message discloses.
        """
        return len(self.payload.get('parities', ())) if self.type == 'parity_response' else 0

    def to_wire(self):
        document = {'type': self.type, 'block': self.block}
        document.update({name: list(values) for name, values in self.payload.items()})
        return json.dumps(document, separators=(',', ':'), ensure_ascii=False)

    @classmethod
    def from_wire(cls, line):
        try:
            document = json.loads(line)
        except json.JSONDecodeError as e:
            raise ChannelError(f"Malformed message: {e}") from None
        if not isinstance(document, dict) or 'type' not in document or 'block' not in document:
            raise ChannelError(f"Message lacks type/block: {line!r}")
        arrays = {}
        for name, values in document.items():
            if name in ('type', 'block'):
                continue
            if not isinstance(values, list) or not all(isinstance(v, int) for v in values):
                raise ChannelError(f"Payload field '{name}' must be an array of integers")
            arrays[name] = values
        if not isinstance(document['block'], int):
            raise ChannelError("Message block must be an integer")
        return cls.make(document['type'], document['block'], **arrays)
