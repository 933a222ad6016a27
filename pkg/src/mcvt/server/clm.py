"""Camera-link model: which exit zone feeds which entry zone, and with what
travel-time distribution.

Fitting is self-supervised. For a declared camera pair (i, j), every
ordered tracklet pair (exit from i, later entry to j within a time window)
is a candidate transit. Appearance similarity scores each (exit zone,
entry zone) combination: candidates landing in the combination contribute
max(0, cos - margin), so look-alike transits vote for their zones and
unrelated co-occurrences mostly contribute nothing. The best-scoring zone
pair wins if its score clears a floor; the travel times of its
appearance-consistent candidates then feed a Gaussian-kernel density
estimate used to gate association at run time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..config import LinkConfig, ZoneConfig
from ..core import Tracklet, cosine_similarity
from .zones import Zone, cluster_zones, tracklet_entry_points, tracklet_exit_points

_SQRT_2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# transition-time density


@dataclass(frozen=True)
class TransitionKde:
    """Gaussian-kernel density over observed travel times (seconds)."""

    samples: np.ndarray
    bandwidth: float

    def evaluate(self, t: float | np.ndarray) -> float | np.ndarray:
        t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        u = (t_arr[:, None] - self.samples[None, :]) / self.bandwidth
        dens = np.exp(-0.5 * u * u).sum(axis=1) / (len(self.samples) * self.bandwidth * _SQRT_2PI)
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return float(dens[0])
        return dens

    def mass(self, lo: float, hi: float) -> float:
        """Exact probability mass on [lo, hi] (per-kernel normal CDF)."""
        from scipy.special import ndtr

        z_hi = (hi - self.samples) / self.bandwidth
        z_lo = (lo - self.samples) / self.bandwidth
        return float(np.mean(ndtr(z_hi) - ndtr(z_lo)))

    @property
    def mean(self) -> float:
        # symmetric kernels put the density mean exactly at the sample mean
        return float(np.mean(self.samples))


def fit_kde(samples: Sequence[float] | np.ndarray, bandwidth: float) -> TransitionKde:
    arr = np.asarray(samples, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("cannot fit a density to zero transition samples")
    if not (bandwidth > 0.0) or not math.isfinite(bandwidth):
        raise ValueError(f"bandwidth must be positive and finite, got {bandwidth}")
    return TransitionKde(samples=arr.copy(), bandwidth=float(bandwidth))


def eval_kde(kde: TransitionKde, t: float | np.ndarray) -> float | np.ndarray:
    return kde.evaluate(t)


# ---------------------------------------------------------------------------
# zone pairing


def candidate_transits(
    exits: Sequence[Tracklet],
    entries: Sequence[Tracklet],
    window_s: float,
) -> list[tuple[Tracklet, Tracklet, float]]:
    """Ordered pairs (a exits, b enters later) within the pairing window.

    Returns (a, b, gap_seconds) with 0 < gap <= window.
    """
    out = []
    for a in exits:
        for b in entries:
            gap_s = (b.start_ms - a.end_ms) / 1000.0
            if 0.0 < gap_s <= window_s:
                out.append((a, b, gap_s))
    return out


def zone_pair_score(
    exit_zone: Zone,
    entry_zone: Zone,
    candidates: Iterable[tuple[Tracklet, Tracklet, float]],
    margin: float,
) -> float:
    """Appearance evidence that this exit zone hands traffic to this entry zone."""
    score = 0.0
    for a, b, _ in candidates:
        ax, ay = a.last_center
        bx, by = b.first_center
        if not (exit_zone.contains(ax, ay) and entry_zone.contains(bx, by)):
            continue
        if a.feature is None or b.feature is None:
            continue
        score += max(0.0, cosine_similarity(a.feature, b.feature) - margin)
    return score


def select_link(scores: np.ndarray, min_link_score: float) -> Optional[tuple[int, int]]:
    """Best (exit zone, entry zone) index pair, or None when evidence is weak.

    Ties resolve to the smallest exit index, then the smallest entry index.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        return None
    best = float(scores.max())
    if best < min_link_score:
        return None
    flat = int(np.argmax(scores))  # row-major argmax = (row asc, col asc) tie-break
    m, n = divmod(flat, scores.shape[1])
    return (m, n)


# ---------------------------------------------------------------------------
# the fitted link


@dataclass(frozen=True)
class CameraLink:
    from_camera: str
    to_camera: str
    exit_zone: Zone
    entry_zone: Zone
    kde: TransitionKde
    min_density: float


def gate_candidates(
    link: CameraLink,
    pairs: Sequence[tuple[Tracklet, Tracklet]],
    slack_px: float = 0.0,
) -> list[bool]:
    """Spatio-temporal plausibility mask for cross-camera tracklet pairs.

    A pair survives when the exit endpoint falls in the link's exit zone,
    the entry endpoint falls in its entry zone (both with slack), time
    moves forward, and the travel time lands where the fitted density says
    vehicles actually arrive.
    """
    out = []
    for a, b in pairs:
        ax, ay = a.last_center
        bx, by = b.first_center
        gap_s = (b.start_ms - a.end_ms) / 1000.0
        ok = (
            link.exit_zone.contains(ax, ay, slack=slack_px)
            and link.entry_zone.contains(bx, by, slack=slack_px)
            and gap_s > 0.0
            and float(link.kde.evaluate(gap_s)) >= link.min_density
        )
        out.append(ok)
    return out


# ---------------------------------------------------------------------------
# fitting from training tracklets


def fit_camera_links(
    tracklets_by_camera: dict[str, Sequence[Tracklet]],
    declared_pairs: Sequence[tuple[str, str]],
    image_w_by_camera: dict[str, float],
    zone_cfg: ZoneConfig,
    link_cfg: LinkConfig,
) -> tuple[dict[tuple[str, str], CameraLink], list[str]]:
    """Fit one link per declared (from, to) camera pair.

    Pairs without enough evidence are skipped with a human-readable warning
    instead of a bad link.
    """
    entry_zones: dict[str, list[Zone]] = {}
    exit_zones: dict[str, list[Zone]] = {}
    for cam, tracklets in tracklets_by_camera.items():
        image_w = image_w_by_camera[cam]
        entry_zones[cam] = cluster_zones(
            cam, "entry", tracklet_entry_points(tracklets), image_w, zone_cfg)
        exit_zones[cam] = cluster_zones(
            cam, "exit", tracklet_exit_points(tracklets), image_w, zone_cfg)

    links: dict[tuple[str, str], CameraLink] = {}
    warnings: list[str] = []
    for cam_i, cam_j in declared_pairs:
        exits = exit_zones.get(cam_i, [])
        entries = entry_zones.get(cam_j, [])
        if not exits or not entries:
            warnings.append(f"{cam_i}->{cam_j}: no link (no endpoint zones found)")
            continue
        cands = candidate_transits(
            list(tracklets_by_camera.get(cam_i, [])),
            list(tracklets_by_camera.get(cam_j, [])),
            link_cfg.pair_window_s,
        )
        scores = np.array([
            [zone_pair_score(ez, nz, cands, link_cfg.pair_margin) for nz in entries]
            for ez in exits
        ])
        sel = select_link(scores, link_cfg.min_link_score)
        if sel is None:
            warnings.append(
                f"{cam_i}->{cam_j}: no link (best zone-pair score "
                f"{float(scores.max()) if scores.size else 0.0:.3g} below "
                f"{link_cfg.min_link_score:.3g})"
            )
            continue
        exit_zone, entry_zone = exits[sel[0]], entries[sel[1]]
        samples = []
        for a, b, gap_s in cands:
            ax, ay = a.last_center
            bx, by = b.first_center
            if not (exit_zone.contains(ax, ay) and entry_zone.contains(bx, by)):
                continue
            if a.feature is None or b.feature is None:
                continue
            if cosine_similarity(a.feature, b.feature) >= link_cfg.pair_margin:
                samples.append(gap_s)
        if len(samples) < link_cfg.min_link_samples:
            warnings.append(
                f"{cam_i}->{cam_j}: no link (only {len(samples)} transition samples, "
                f"need {link_cfg.min_link_samples})"
            )
            continue
        links[(cam_i, cam_j)] = CameraLink(
            from_camera=cam_i,
            to_camera=cam_j,
            exit_zone=exit_zone,
            entry_zone=entry_zone,
            kde=fit_kde(samples, link_cfg.kde_bandwidth_s),
            min_density=link_cfg.min_density,
        )
    return links, warnings


# ---------------------------------------------------------------------------
# link model files
#
#   link <from> <to>
#   exit_zone <cx> <cy> <radius> <count>
#   entry_zone <cx> <cy> <radius> <count>
#   bandwidth <seconds>
#   min_density <density>
#   samples <s1> <s2> ...
#   end
#
# Unfittable declared pairs are recorded as:  nolink <from> <to>


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_links(
    path: str | Path,
    links: dict[tuple[str, str], CameraLink],
    missing: Sequence[tuple[str, str]] = (),
) -> None:
    lines = ["# fitted camera links"]
    for (cam_i, cam_j), link in sorted(links.items()):
        lines.append(f"link {cam_i} {cam_j}")
        for tag, z in (("exit_zone", link.exit_zone), ("entry_zone", link.entry_zone)):
            lines.append(f"{tag} {_fmt(z.cx)} {_fmt(z.cy)} {_fmt(z.radius)} {z.count}")
        lines.append(f"bandwidth {_fmt(link.kde.bandwidth)}")
        lines.append(f"min_density {_fmt(link.min_density)}")
        lines.append("samples " + " ".join(_fmt(s) for s in link.kde.samples))
        lines.append("end")
    for cam_i, cam_j in sorted(missing):
        lines.append(f"nolink {cam_i} {cam_j}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_links(
    path: str | Path,
) -> tuple[dict[tuple[str, str], CameraLink], list[tuple[str, str]]]:
    links: dict[tuple[str, str], CameraLink] = {}
    missing: list[tuple[str, str]] = []
    block: dict[str, str] = {}
    pair: Optional[tuple[str, str]] = None

    def finish() -> None:
        nonlocal block, pair
        if pair is None:
            return
        try:
            exit_vals = block["exit_zone"].split()
            entry_vals = block["entry_zone"].split()
            samples = [float(v) for v in block["samples"].split()]
            link = CameraLink(
                from_camera=pair[0],
                to_camera=pair[1],
                exit_zone=Zone(pair[0], "exit", float(exit_vals[0]), float(exit_vals[1]),
                               float(exit_vals[2]), int(exit_vals[3])),
                entry_zone=Zone(pair[1], "entry", float(entry_vals[0]), float(entry_vals[1]),
                                float(entry_vals[2]), int(entry_vals[3])),
                kde=fit_kde(samples, float(block["bandwidth"])),
                min_density=float(block["min_density"]),
            )
        except (KeyError, ValueError, IndexError) as exc:
            raise ValueError(f"{path}: malformed link block for {pair[0]}->{pair[1]}: {exc}")
        links[pair] = link
        block, pair = {}, None

    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        key = parts[0]
        rest = parts[1] if len(parts) > 1 else ""
        if key == "link":
            toks = rest.split()
            if len(toks) != 2:
                raise ValueError(f"{path}:{lineno}: 'link' needs two camera ids")
            pair = (toks[0], toks[1])
            block = {}
        elif key == "nolink":
            toks = rest.split()
            if len(toks) != 2:
                raise ValueError(f"{path}:{lineno}: 'nolink' needs two camera ids")
            missing.append((toks[0], toks[1]))
        elif key == "end":
            finish()
        else:
            block[key] = rest
    if pair is not None:
        raise ValueError(f"{path}: unterminated link block for {pair[0]}->{pair[1]}")
    return links, missing
