"""Seeded in-memory stand-in for the uplink between an edge node and the
server: fixed base latency, symmetric uniform jitter, Bernoulli loss.

Draw order per send is fixed (one uniform for the loss coin, then one for
the jitter), so a given seed fully determines which messages are dropped
and when the survivors arrive.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from ..config import ChannelConfig


class SimulatedChannel:
    def __init__(self, cfg: ChannelConfig, seed: int | np.random.SeedSequence = 0):
        cfg.validate()
        self.cfg = cfg
        self._rng = np.random.default_rng(seed)
        self._flight: list[tuple[float, int, Any]] = []
        self._seq = 0
        self.sent = 0
        self.dropped = 0
        self.delivered = 0

    def send(self, payload: Any, now_ms: float) -> bool:
        """Queue a message at time ``now_ms``; returns False if the loss coin ate it."""
        self.sent += 1
        self._seq += 1
        if self._rng.random() < self.cfg.loss_prob:
            self.dropped += 1
            return False
        jitter = self._rng.uniform(-self.cfg.jitter_ms, self.cfg.jitter_ms)
        deliver_at = now_ms + self.cfg.base_latency_ms + jitter
        self._flight.append((deliver_at, self._seq, payload))
        return True

    def poll(self, now_ms: float) -> list[Any]:
        """Pop every message whose delivery time has come, oldest delivery first."""
        ready = [e for e in self._flight if e[0] <= now_ms]
        if not ready:
            return []
        ready.sort(key=lambda e: (e[0], e[1]))
        picked = set((e[0], e[1]) for e in ready)
        self._flight = [e for e in self._flight if (e[0], e[1]) not in picked]
        self.delivered += len(ready)
        return [e[2] for e in ready]

    @property
    def pending(self) -> int:
        return len(self._flight)

    def drain_deadline_ms(self) -> float:
        """Earliest time by which every in-flight message will have arrived."""
        return max((e[0] for e in self._flight), default=float("-inf"))
