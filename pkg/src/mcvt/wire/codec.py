"""Binary codec for the edge-to-server metadata link.

Conventions, shared by every record type:

* little-endian throughout
* counts, lengths, and ids are u32
* reals are IEEE-754 binary64 (f64)
* strings are UTF-8 bytes with a u32 byte-length prefix
* optional fields carry a one-byte presence flag (0 absent, 1 present)
* gate rasters are u8 intensity cells (integers 0..255, not reals)

A stream file is a plain concatenation of ``[u32 length][payload]`` records.
There is also a line-delimited text form for fixtures: whitespace-separated
fields in declaration order, reals printed with 9 significant digits.

Decoding never throws anything but :class:`WireError` subclasses on bad
input: short buffers raise :class:`TruncatedError`, a version tag this
codec does not understand raises :class:`UnsupportedVersionError`, and
leftover bytes after a complete message raise :class:`TrailingGarbageError`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..core import BBox, GeoPoint, Observation, Tracklet

SCHEMA_VERSION = 1

_U32 = struct.Struct("<I")
_U8 = struct.Struct("<B")
_F64 = struct.Struct("<d")

_U32_MAX = 0xFFFFFFFF

# smallest possible encodings, used to reject absurd counts before allocating
_MIN_OBS_BYTES = 4 + 8 + 4 * 8 + 8 + 1
_MIN_DET_BYTES = 4 * 8 + 8 + 4


class WireError(Exception):
    """Base for every decode failure."""


class TruncatedError(WireError):
    pass


class UnsupportedVersionError(WireError):
    pass


class TrailingGarbageError(WireError):
    pass


@dataclass(eq=False)
class TrackletMsg:
    """One completed tracklet's metadata, as shipped to the server."""

    camera_id: str
    track_id: int
    observations: tuple[Observation, ...]
    feature: np.ndarray
    emitted_at_ms: float
    schema_version: int = SCHEMA_VERSION

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TrackletMsg):
            return NotImplemented
        return (
            self.schema_version == other.schema_version
            and self.camera_id == other.camera_id
            and self.track_id == other.track_id
            and self.observations == other.observations
            and self.emitted_at_ms == other.emitted_at_ms
            and np.array_equal(self.feature, other.feature)
        )

    def to_tracklet(self) -> Tracklet:
        return Tracklet(
            camera_id=self.camera_id,
            track_id=self.track_id,
            observations=self.observations,
            feature=np.asarray(self.feature, dtype=np.float64),
        )

    @classmethod
    def from_tracklet(cls, t: Tracklet, emitted_at_ms: float) -> "TrackletMsg":
        if t.feature is None:
            raise ValueError("cannot ship a tracklet without an aggregated feature")
        return cls(
            camera_id=t.camera_id,
            track_id=t.track_id,
            observations=t.observations,
            feature=np.asarray(t.feature, dtype=np.float64),
            emitted_at_ms=emitted_at_ms,
        )


@dataclass(eq=False)
class FrameMsg:
    """One camera frame's detections (and optionally its gate raster)."""

    camera_id: str
    frame_index: int
    timestamp_ms: float
    detections: tuple[tuple[BBox, float, int], ...]  # (bbox, confidence, class_id)
    grid: Optional[np.ndarray] = None  # uint8 (rows, cols)
    schema_version: int = SCHEMA_VERSION

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrameMsg):
            return NotImplemented
        same_grid = (
            (self.grid is None and other.grid is None)
            or (self.grid is not None and other.grid is not None
                and np.array_equal(self.grid, other.grid))
        )
        return (
            self.schema_version == other.schema_version
            and self.camera_id == other.camera_id
            and self.frame_index == other.frame_index
            and self.timestamp_ms == other.timestamp_ms
            and self.detections == other.detections
            and same_grid
        )


# ---------------------------------------------------------------------------
# primitive writers / cursor reader


def _check_u32(value: int, what: str) -> int:
    if not (0 <= value <= _U32_MAX):
        raise ValueError(f"{what} does not fit u32: {value}")
    return value


class _Cursor:
    __slots__ = ("buf", "pos")

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    @property
    def remaining(self) -> int:
        return len(self.buf) - self.pos

    def take(self, n: int) -> bytes:
        if self.remaining < n:
            raise TruncatedError(
                f"truncated: needed {n} bytes at offset {self.pos}, have {self.remaining}"
            )
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def u8(self) -> int:
        return _U8.unpack(self.take(1))[0]

    def presence(self) -> bool:
        flag = self.u8()
        if flag > 1:
            raise WireError(f"invalid presence byte {flag} at offset {self.pos - 1}")
        return bool(flag)

    def f64(self) -> float:
        return _F64.unpack(self.take(8))[0]

    def string(self) -> str:
        n = self.u32()
        if n > self.remaining:
            raise TruncatedError(
                f"truncated: string of {n} bytes at offset {self.pos}, have {self.remaining}"
            )
        raw = self.take(n)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TruncatedError(f"malformed utf-8 string at offset {self.pos - n}") from exc


def _put_string(out: bytearray, s: str) -> None:
    raw = s.encode("utf-8")
    out += _U32.pack(_check_u32(len(raw), "string length"))
    out += raw


# ---------------------------------------------------------------------------
# tracklet messages


def encode_tracklet_msg(msg: TrackletMsg) -> bytes:
    out = bytearray()
    out += _U32.pack(_check_u32(msg.schema_version, "schema_version"))
    _put_string(out, msg.camera_id)
    out += _U32.pack(_check_u32(msg.track_id, "track_id"))
    out += _U32.pack(_check_u32(len(msg.observations), "observation count"))
    for o in msg.observations:
        out += _U32.pack(_check_u32(o.frame_index, "frame_index"))
        out += _F64.pack(o.timestamp_ms)
        out += _F64.pack(o.bbox.x)
        out += _F64.pack(o.bbox.y)
        out += _F64.pack(o.bbox.w)
        out += _F64.pack(o.bbox.h)
        out += _F64.pack(o.confidence)
        if o.gps is None:
            out += _U8.pack(0)
        else:
            out += _U8.pack(1)
            out += _F64.pack(o.gps.lat)
            out += _F64.pack(o.gps.lon)
    feat = np.asarray(msg.feature, dtype=np.float64)
    if feat.ndim != 1:
        raise ValueError("feature must be a 1-D vector")
    out += _U32.pack(_check_u32(feat.shape[0], "feature length"))
    out += feat.astype("<f8").tobytes()
    out += _F64.pack(msg.emitted_at_ms)
    return bytes(out)


def decode_tracklet_msg(buf: bytes) -> TrackletMsg:
    cur = _Cursor(buf)
    version = cur.u32()
    if version != SCHEMA_VERSION:
        raise UnsupportedVersionError(f"unsupported version: {version}")
    camera_id = cur.string()
    track_id = cur.u32()
    n_obs = cur.u32()
    if n_obs * _MIN_OBS_BYTES > cur.remaining:
        raise TruncatedError(
            f"truncated: {n_obs} observations cannot fit in {cur.remaining} bytes"
        )
    obs = []
    for _ in range(n_obs):
        frame_index = cur.u32()
        timestamp_ms = cur.f64()
        bbox = BBox(cur.f64(), cur.f64(), cur.f64(), cur.f64())
        confidence = cur.f64()
        gps = None
        if cur.presence():
            gps = GeoPoint(cur.f64(), cur.f64())
        obs.append(Observation(frame_index, timestamp_ms, bbox, confidence, gps))
    dim = cur.u32()
    if dim * 8 > cur.remaining:
        raise TruncatedError(f"truncated: feature of {dim} reals cannot fit in {cur.remaining} bytes")
    feature = np.frombuffer(cur.take(dim * 8), dtype="<f8").astype(np.float64)
    emitted_at_ms = cur.f64()
    if cur.remaining:
        raise TrailingGarbageError(f"trailing garbage: {cur.remaining} bytes after message")
    return TrackletMsg(camera_id, track_id, tuple(obs), feature, emitted_at_ms, version)


# ---------------------------------------------------------------------------
# frame messages (detection streams feeding the edge pipelines)


def encode_frame_msg(msg: FrameMsg) -> bytes:
    out = bytearray()
    out += _U32.pack(_check_u32(msg.schema_version, "schema_version"))
    _put_string(out, msg.camera_id)
    out += _U32.pack(_check_u32(msg.frame_index, "frame_index"))
    out += _F64.pack(msg.timestamp_ms)
    out += _U32.pack(_check_u32(len(msg.detections), "detection count"))
    for bbox, conf, class_id in msg.detections:
        out += _F64.pack(bbox.x)
        out += _F64.pack(bbox.y)
        out += _F64.pack(bbox.w)
        out += _F64.pack(bbox.h)
        out += _F64.pack(conf)
        out += _U32.pack(_check_u32(class_id, "class_id"))
    if msg.grid is None:
        out += _U8.pack(0)
    else:
        grid = np.ascontiguousarray(msg.grid, dtype=np.uint8)
        if grid.ndim != 2:
            raise ValueError("grid must be a 2-D uint8 raster")
        out += _U8.pack(1)
        out += _U32.pack(_check_u32(grid.shape[0], "grid rows"))
        out += _U32.pack(_check_u32(grid.shape[1], "grid cols"))
        out += grid.tobytes()
    return bytes(out)


def decode_frame_msg(buf: bytes) -> FrameMsg:
    cur = _Cursor(buf)
    version = cur.u32()
    if version != SCHEMA_VERSION:
        raise UnsupportedVersionError(f"unsupported version: {version}")
    camera_id = cur.string()
    frame_index = cur.u32()
    timestamp_ms = cur.f64()
    n_dets = cur.u32()
    if n_dets * _MIN_DET_BYTES > cur.remaining:
        raise TruncatedError(f"truncated: {n_dets} detections cannot fit in {cur.remaining} bytes")
    dets = []
    for _ in range(n_dets):
        bbox = BBox(cur.f64(), cur.f64(), cur.f64(), cur.f64())
        conf = cur.f64()
        class_id = cur.u32()
        dets.append((bbox, conf, class_id))
    grid = None
    if cur.presence():
        rows = cur.u32()
        cols = cur.u32()
        if rows * cols > cur.remaining:
            raise TruncatedError(
                f"truncated: {rows}x{cols} grid cannot fit in {cur.remaining} bytes"
            )
        grid = np.frombuffer(cur.take(rows * cols), dtype=np.uint8).reshape(rows, cols).copy()
    if cur.remaining:
        raise TrailingGarbageError(f"trailing garbage: {cur.remaining} bytes after message")
    return FrameMsg(camera_id, frame_index, timestamp_ms, tuple(dets), grid, version)


# ---------------------------------------------------------------------------
# stream files: [u32 length][payload] records


def write_stream(path: str | Path, payloads: Iterable[bytes]) -> None:
    with open(path, "wb") as fh:
        for p in payloads:
            fh.write(_U32.pack(_check_u32(len(p), "record length")))
            fh.write(p)


def read_stream(path: str | Path) -> list[bytes]:
    """Read raw length-prefixed records; errors carry the byte offset."""
    data = Path(path).read_bytes()
    out: list[bytes] = []
    pos = 0
    while pos < len(data):
        if len(data) - pos < 4:
            raise TruncatedError(f"truncated stream: dangling record header at byte offset {pos}")
        (n,) = _U32.unpack(data[pos:pos + 4])
        pos += 4
        if len(data) - pos < n:
            raise TruncatedError(
                f"truncated stream: record of {n} bytes at byte offset {pos - 4}, "
                f"only {len(data) - pos} left"
            )
        out.append(data[pos:pos + n])
        pos += n
    return out


def _decode_all(path, payloads, decoder):
    out = []
    offset = 0
    for i, p in enumerate(payloads):
        try:
            out.append(decoder(p))
        except WireError as exc:
            raise type(exc)(f"{path}: record {i} at byte offset {offset}: {exc}") from exc
        offset += 4 + len(p)
    return out


def write_tracklet_stream(path: str | Path, msgs: Iterable[TrackletMsg]) -> None:
    write_stream(path, (encode_tracklet_msg(m) for m in msgs))


def read_tracklet_stream(path: str | Path) -> list[TrackletMsg]:
    return _decode_all(path, read_stream(path), decode_tracklet_msg)


def write_frame_stream(path: str | Path, msgs: Iterable[FrameMsg]) -> None:
    write_stream(path, (encode_frame_msg(m) for m in msgs))


def read_frame_stream(path: str | Path) -> list[FrameMsg]:
    return _decode_all(path, read_stream(path), decode_frame_msg)


# ---------------------------------------------------------------------------
# text fixture form (tracklet messages only)
#
# One message per line, whitespace-separated, declaration order:
#   version camera_id track_id emitted_at_ms n_obs
#   { frame ts x y w h conf gps_flag [lat lon] } * n_obs
#   dim { value } * dim
# camera ids must not contain whitespace in this form.


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def format_tracklet_text(msg: TrackletMsg) -> str:
    if any(ch.isspace() for ch in msg.camera_id) or not msg.camera_id:
        raise ValueError("text form needs a non-empty, whitespace-free camera id")
    parts = [str(msg.schema_version), msg.camera_id, str(msg.track_id), _fmt(msg.emitted_at_ms),
             str(len(msg.observations))]
    for o in msg.observations:
        parts += [str(o.frame_index), _fmt(o.timestamp_ms), _fmt(o.bbox.x), _fmt(o.bbox.y),
                  _fmt(o.bbox.w), _fmt(o.bbox.h), _fmt(o.confidence)]
        if o.gps is None:
            parts.append("0")
        else:
            parts += ["1", _fmt(o.gps.lat), _fmt(o.gps.lon)]
    feat = np.asarray(msg.feature, dtype=np.float64)
    parts.append(str(feat.shape[0]))
    parts += [_fmt(v) for v in feat]
    return " ".join(parts)


class _Tokens:
    def __init__(self, line: str):
        self._toks = line.split()
        self._i = 0

    def next(self, what: str) -> str:
        if self._i >= len(self._toks):
            raise TruncatedError(f"truncated text record: missing {what}")
        tok = self._toks[self._i]
        self._i += 1
        return tok

    def next_int(self, what: str) -> int:
        tok = self.next(what)
        try:
            return int(tok)
        except ValueError as exc:
            raise WireError(f"bad {what}: {tok!r}") from exc

    def next_float(self, what: str) -> float:
        tok = self.next(what)
        try:
            return float(tok)
        except ValueError as exc:
            raise WireError(f"bad {what}: {tok!r}") from exc

    @property
    def leftover(self) -> int:
        return len(self._toks) - self._i


def parse_tracklet_text(line: str) -> TrackletMsg:
    toks = _Tokens(line)
    version = toks.next_int("version")
    if version != SCHEMA_VERSION:
        raise UnsupportedVersionError(f"unsupported version: {version}")
    camera_id = toks.next("camera_id")
    track_id = toks.next_int("track_id")
    emitted_at_ms = toks.next_float("emitted_at_ms")
    n_obs = toks.next_int("observation count")
    obs = []
    for _ in range(n_obs):
        frame = toks.next_int("frame_index")
        ts = toks.next_float("timestamp_ms")
        bbox = BBox(toks.next_float("x"), toks.next_float("y"),
                    toks.next_float("w"), toks.next_float("h"))
        conf = toks.next_float("confidence")
        gps = None
        if toks.next_int("gps flag"):
            gps = GeoPoint(toks.next_float("lat"), toks.next_float("lon"))
        obs.append(Observation(frame, ts, bbox, conf, gps))
    dim = toks.next_int("feature length")
    feature = np.array([toks.next_float("feature value") for _ in range(dim)], dtype=np.float64)
    if toks.leftover:
        raise TrailingGarbageError(f"trailing garbage: {toks.leftover} extra tokens")
    return TrackletMsg(camera_id, track_id, tuple(obs), feature, emitted_at_ms, version)


def write_tracklet_text(path: str | Path, msgs: Iterable[TrackletMsg]) -> None:
    Path(path).write_text("".join(format_tracklet_text(m) + "\n" for m in msgs))


def read_tracklet_text(path: str | Path) -> list[TrackletMsg]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(parse_tracklet_text(line))
        except WireError as exc:
            raise type(exc)(f"{path}:{lineno}: {exc}") from exc
    return out
