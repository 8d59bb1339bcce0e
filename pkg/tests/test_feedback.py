"""Unit tests for the feedback message and its wire codec"""
import struct

import pytest

from models.errors import CodecError
from models.feedback import FeedbackMsg, decode_feedback, encode_feedback, wire_size


@pytest.fixture
def message():
    return FeedbackMsg(sender=2, fb=1000.0, pilot_gain_to_bs=2.512e-6, pilot_gain_to_ul={4: 1e-6, 0: 3e-7})


@pytest.mark.unit
class TestFeedbackMsg:
    """Test message construction"""

    def test_nonpositive_feedback(self):
        """Test fb <= 0 is rejected"""
        with pytest.raises(CodecError):
            FeedbackMsg(sender=0, fb=0.0, pilot_gain_to_bs=1e-6)

    def test_negative_sender(self):
        """Test a negative sender index is rejected"""
        with pytest.raises(CodecError):
            FeedbackMsg(sender=-1, fb=1.0, pilot_gain_to_bs=1e-6)


@pytest.mark.unit
class TestCodec:
    """Test the little-endian wire format"""

    def test_wire_size(self):
        """Test 16 header bytes plus 12 per neighbor"""
        assert wire_size(0) == 16
        assert wire_size(3) == 52

    def test_header_layout(self):
        """Test u32 sender, f64 fb, u32 count"""
        payload = encode_feedback(FeedbackMsg(sender=3, fb=1000.0, pilot_gain_to_bs=1e-6))
        assert payload == struct.pack("<IdI", 3, 1000.0, 0)

    def test_pairs_in_index_order(self, message):
        """Test neighbor pairs are written sorted by uplink index"""
        payload = encode_feedback(message)
        assert len(payload) == wire_size(2)
        assert struct.unpack_from("<I", payload, 16)[0] == 0
        assert struct.unpack_from("<I", payload, 28)[0] == 4

    def test_round_trip(self, message):
        """Test decode inverts encode, with the BS gain supplied by the receiver"""
        decoded = decode_feedback(encode_feedback(message), pilot_gain_to_bs=2.512e-6)
        assert decoded == message

    def test_short_payload(self):
        """Test a truncated header raises"""
        with pytest.raises(CodecError):
            decode_feedback(b"\x00" * 10, pilot_gain_to_bs=1e-6)

    def test_length_mismatch(self, message):
        """Test a payload missing a pair raises"""
        with pytest.raises(CodecError):
            decode_feedback(encode_feedback(message)[:-12], pilot_gain_to_bs=1e-6)
