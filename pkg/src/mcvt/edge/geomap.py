"""Pinhole geo-mapping: pixel -> ground-plane ray intersection -> lat/lon.

A camera is a pinhole (fx, fy, cx, cy) posed in a local East-North-Up
frame: ``rotation`` maps camera coordinates to ENU, ``position`` is the
optical center in ENU meters. Back-projecting a pixel at an assumed target
height intersects the ray with the horizontal plane z = height; the ENU hit
converts to lat/lon with the equirectangular local approximation around the
scene origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..config import ConfigError, read_kv
from ..core import GeoPoint

EARTH_RADIUS_M = 6378137.0
METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0


@dataclass
class CameraModel:
    camera_id: str
    image_w: int
    image_h: int
    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray   # 3x3, camera axes expressed in ENU
    position: np.ndarray   # optical center, ENU meters
    origin: GeoPoint       # lat/lon anchoring the ENU frame

    def __post_init__(self) -> None:
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not np.allclose(self.rotation @ self.rotation.T, np.eye(3), atol=1e-9):
            raise ValueError("rotation must be orthonormal")

    # -- geodesy ----------------------------------------------------------

    def enu_to_geo(self, east: float, north: float) -> GeoPoint:
        m_per_deg_lon = METERS_PER_DEG_LAT * math.cos(math.radians(self.origin.lat))
        return GeoPoint(
            lat=self.origin.lat + north / METERS_PER_DEG_LAT,
            lon=self.origin.lon + east / m_per_deg_lon,
        )

    def geo_to_enu(self, point: GeoPoint) -> tuple[float, float]:
        m_per_deg_lon = METERS_PER_DEG_LAT * math.cos(math.radians(self.origin.lat))
        return (
            (point.lon - self.origin.lon) * m_per_deg_lon,
            (point.lat - self.origin.lat) * METERS_PER_DEG_LAT,
        )

    # -- optics ------------------------------------------------------------

    def ground_point(self, u: float, v: float, height_m: float) -> np.ndarray:
        """ENU point where the pixel ray crosses the plane z = height_m."""
        ray_cam = np.array([(u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0])
        ray = self.rotation @ ray_cam
        if abs(ray[2]) < 1e-12:
            raise ValueError("pixel ray is parallel to the ground plane")
        t = (height_m - self.position[2]) / ray[2]
        if t <= 0:
            raise ValueError("pixel ray does not hit the ground plane in front of the camera")
        return self.position + t * ray

    def project(self, enu_point: np.ndarray) -> tuple[float, float]:
        """ENU point -> pixel. Raises if the point is behind the camera."""
        p_cam = self.rotation.T @ (np.asarray(enu_point, dtype=np.float64) - self.position)
        if p_cam[2] <= 1e-12:
            raise ValueError("point is behind the camera")
        return (
            self.fx * p_cam[0] / p_cam[2] + self.cx,
            self.fy * p_cam[1] / p_cam[2] + self.cy,
        )


def geo_map(cam: CameraModel, pixel: tuple[float, float], height_m: float) -> GeoPoint:
    """Map a pixel to lat/lon assuming the target sits at ``height_m``."""
    enu = cam.ground_point(pixel[0], pixel[1], height_m)
    return cam.enu_to_geo(enu[0], enu[1])


# ---------------------------------------------------------------------------
# calibration files (key-value format; rotation is row-major)


def write_calibration(path: str | Path, cam: CameraModel) -> None:
    r = cam.rotation.reshape(-1)
    lines = [
        "# camera calibration",
        f"camera_id {cam.camera_id}",
        f"image_width {cam.image_w}",
        f"image_height {cam.image_h}",
        f"fx {cam.fx!r}",
        f"fy {cam.fy!r}",
        f"cx {cam.cx!r}",
        f"cy {cam.cy!r}",
        "rotation " + " ".join(repr(float(v)) for v in r),
        "position " + " ".join(repr(float(v)) for v in cam.position),
        f"geo_origin {cam.origin.lat!r} {cam.origin.lon!r}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_calibration(path: str | Path) -> CameraModel:
    kv = read_kv(path)
    try:
        rot = np.array([float(v) for v in kv["rotation"].split()], dtype=np.float64)
        pos = np.array([float(v) for v in kv["position"].split()], dtype=np.float64)
        lat, lon = (float(v) for v in kv["geo_origin"].split())
        if rot.size != 9 or pos.size != 3:
            raise ConfigError(f"{path}: rotation needs 9 values, position needs 3")
        return CameraModel(
            camera_id=kv["camera_id"],
            image_w=int(kv["image_width"]),
            image_h=int(kv["image_height"]),
            fx=float(kv["fx"]),
            fy=float(kv["fy"]),
            cx=float(kv["cx"]),
            cy=float(kv["cy"]),
            rotation=rot.reshape(3, 3),
            position=pos,
            origin=GeoPoint(lat, lon),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing calibration key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: bad calibration value: {exc}") from exc


def nadir_rotation() -> np.ndarray:
    """Straight-down pose: image x -> east, image y -> south, optical axis -> down."""
    return np.array([
        [1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0],
    ])
