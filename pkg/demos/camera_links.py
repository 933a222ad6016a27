"""
Learning camera links from raw traffic
======================================

Two cameras watch neighboring stretches of road. Without any labels, the
link model clusters where tracks start and end (entry/exit zones), pairs
the zones by re-identification agreement, and fits a kernel density over
the travel times between them.
"""

import tempfile

import numpy as np

from mcvt.config import LinkConfig, RunManifest, ZoneConfig
from mcvt.run import run_edges_offline
from mcvt.server.clm import eval_kde, fit_camera_links
from mcvt.sim.render import Dataset, write_dataset
from mcvt.sim.scenario import ScenarioConfig

cfg = ScenarioConfig(n_cameras=2, n_vehicles=40, spawn_spacing_s=16.0)
data_dir = tempfile.mkdtemp(prefix="demo_clm_")
write_dataset(data_dir, cfg, seed=11)
dataset = Dataset(data_dir)

tracklets = run_edges_offline(RunManifest(data_dir=data_dir), dataset)
print({cam: len(ts) for cam, ts in tracklets.items()}, "tracklets per camera")

links, warnings = fit_camera_links(
    tracklets, dataset.pairs, dataset.image_w_by_camera,
    ZoneConfig(), LinkConfig())
assert not warnings

for (a, b), link in sorted(links.items()):
    ez, nz = link.exit_zone, link.entry_zone
    print(f"\nlink {a} -> {b}")
    print(f"  exit zone  ({ez.cx:7.1f},{ez.cy:6.1f}) r={ez.radius:5.1f} "
          f"from {ez.count} endpoints")
    print(f"  entry zone ({nz.cx:7.1f},{nz.cy:6.1f}) r={nz.radius:5.1f} "
          f"from {nz.count} endpoints")
    print(f"  travel time: {len(link.kde.samples)} samples, "
          f"mean {link.kde.mean:.2f} s")

# the density says how plausible a given travel time is
link = links[("cam00", "cam01")]
truth = [t.gap_s for t in dataset.ground_truth.transitions
         if t.from_camera == "cam00"]
print(f"\ntrue east travel times span {min(truth):.1f}..{max(truth):.1f} s "
      f"(mean {np.mean(truth):.2f})")
for t in (5.0, link.kde.mean, 60.0):
    print(f"  density at {t:5.1f} s = {eval_kde(link.kde, t):.5f}")
