"""Downlink feedback message and its little-endian wire codec"""
import math
import struct
from dataclasses import dataclass, field
from typing import Dict

from .errors import CodecError

# u32 sender, f64 fb, u32 neighbor count, then (u32 index, f64 gain) pairs
_HEADER = struct.Struct("<IdI")
_PAIR = struct.Struct("<Id")


@dataclass(frozen=True)
class FeedbackMsg:
    """The only data a downlink user broadcasts each round"""
    sender: int
    fb: float                      # q_j / IN_j
    pilot_gain_to_bs: float        # g_dl[j] estimated at the BS
    pilot_gain_to_ul: Dict[int, float] = field(default_factory=dict)  # g_ij^I per overhearing uplink i

    def __post_init__(self):
        if not (self.fb > 0 and math.isfinite(self.fb)):
            raise CodecError(f"feedback value must be positive and finite, got {self.fb}")
        if self.sender < 0:
            raise CodecError(f"sender index must be nonnegative, got {self.sender}")


def wire_size(neighbor_count: int) -> int:
    """Encoded size in bytes of a message with this many overhearing neighbors"""
    return _HEADER.size + neighbor_count * _PAIR.size


def encode_feedback(msg: FeedbackMsg) -> bytes:
    """Pack a message; neighbor pairs are written in index order"""
    pairs = sorted(msg.pilot_gain_to_ul.items())
    parts = [_HEADER.pack(msg.sender, msg.fb, len(pairs))]
    parts.extend(_PAIR.pack(i, g) for i, g in pairs)
    return b"".join(parts)


def decode_feedback(payload: bytes, pilot_gain_to_bs: float) -> FeedbackMsg:
    """Unpack a message; the BS pilot gain is measured by the receiver, not sent"""
    if len(payload) < _HEADER.size:
        raise CodecError(f"payload too short: {len(payload)} bytes")
    sender, fb, count = _HEADER.unpack_from(payload, 0)
    if len(payload) != wire_size(count):
        raise CodecError(f"payload length {len(payload)} does not match {count} neighbor entries")
    gains = {}
    for k in range(count):
        i, g = _PAIR.unpack_from(payload, _HEADER.size + k * _PAIR.size)
        gains[i] = g
    return FeedbackMsg(sender=sender, fb=fb, pilot_gain_to_bs=pilot_gain_to_bs, pilot_gain_to_ul=gains)
