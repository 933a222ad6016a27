from .codec import (
    SCHEMA_VERSION,
    FrameMsg,
    TrackletMsg,
    TrailingGarbageError,
    TruncatedError,
    UnsupportedVersionError,
    WireError,
    decode_frame_msg,
    decode_tracklet_msg,
    encode_frame_msg,
    encode_tracklet_msg,
    format_tracklet_text,
    parse_tracklet_text,
    read_frame_stream,
    read_stream,
    read_tracklet_stream,
    read_tracklet_text,
    write_frame_stream,
    write_stream,
    write_tracklet_stream,
    write_tracklet_text,
)
from .channel import SimulatedChannel

__all__ = [
    "SCHEMA_VERSION",
    "FrameMsg",
    "TrackletMsg",
    "TrailingGarbageError",
    "TruncatedError",
    "UnsupportedVersionError",
    "WireError",
    "SimulatedChannel",
    "decode_frame_msg",
    "decode_tracklet_msg",
    "encode_frame_msg",
    "encode_tracklet_msg",
    "format_tracklet_text",
    "parse_tracklet_text",
    "read_frame_stream",
    "read_stream",
    "read_tracklet_stream",
    "read_tracklet_text",
    "write_frame_stream",
    "write_stream",
    "write_tracklet_stream",
    "write_tracklet_text",
]
