"""Adversary detection.

Two detectors run online. The safety-class detector watches one monitoring
agent: whenever the safety alarm raises, it opens an observation window whose
length is a multiple of the current critical time, and only declares an
adversary if the alarm and a suspect's goal-deviation flag persist through
the whole window. The formation-class detector is a per-step majority test
on formation-score degradation among formation neighbors, producing a trust
weight alongside any verdict. Verdicts are monotone: once emitted they are
never retracted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .metrics import confidence


@dataclass(frozen=True)
class DetectionVerdict:
    t: float
    monitor_id: int
    suspect_id: int
    kind: str  # "safety" or "formation"
    T_s: float = 0.0  # monitor's critical time when the verdict fired


class _PrefixFlags:
    """Cumulative count of a boolean flag, indexed by step. Steps before the
    first observation count as False."""

    def __init__(self, first_step: int):
        self.first_step = first_step
        self.cum = [0]

    def append(self, flag: bool):
        self.cum.append(self.cum[-1] + (1 if flag else 0))

    def all_true(self, start: int, end: int) -> bool:
        """True iff the flag held at every step in [start, end] inclusive."""
        if start < self.first_step:
            return False
        lo = start - self.first_step
        hi = end - self.first_step + 1
        if hi > len(self.cum) - 1:
            return False
        return (self.cum[hi] - self.cum[lo]) == (end - start + 1)


class SafetyDetector:
    """Windowed safety-class detection for a single monitoring agent."""

    def __init__(self, monitor_id: int, n_horizon: float, dt: float):
        self.monitor_id = monitor_id
        self.n_horizon = float(n_horizon)
        self.dt = float(dt)
        self._step = -1
        self._alarm = _PrefixFlags(0)
        self._dev: dict[int, _PrefixFlags] = {}
        self._pending: list[tuple[int, int]] = []  # (start_step, verdict_step)

    def update(self, t: float, T_s: float, alarm: bool,
               deviation_flags: dict[int, bool],
               proximity: dict[int, float]) -> DetectionVerdict | None:
        """Advance one step. deviation_flags covers the monitor itself and
        its current neighbors; proximity maps neighbor id to the pairwise
        ratio used to rank suspects."""
        self._step += 1
        step = self._step
        self._alarm.append(alarm)
        for k, flag in deviation_flags.items():
            if k not in self._dev:
                self._dev[k] = _PrefixFlags(step)
            self._dev[k].append(flag)

        if not alarm:
            # a single quiet sample voids every open window
            self._pending.clear()
            return None

        span = max(0, int(math.ceil((self.n_horizon - 1.0) * T_s / self.dt)))
        self._pending.append((step, step + span))

        verdict = None
        remaining = []
        for start, end in self._pending:
            if step < end:
                remaining.append((start, end))
                continue
            if verdict is not None:
                continue
            # alarm persistence over [start, end] is implied by the pruning
            # above; check the suspect deviation condition
            persistent = [k for k, pf in self._dev.items()
                          if k in deviation_flags and pf.all_true(start, end)]
            if not persistent:
                continue
            suspect = None
            best = -math.inf
            for k in sorted(persistent):
                if k == self.monitor_id:
                    score = max(proximity.values(), default=-math.inf)
                else:
                    score = proximity.get(k, -math.inf)
                if score > best + 1e-12:
                    best = score
                    suspect = k
            if suspect is not None:
                verdict = DetectionVerdict(t=t, monitor_id=self.monitor_id,
                                           suspect_id=suspect, kind="safety", T_s=T_s)
        self._pending = remaining
        return verdict


def formation_check(monitor_id: int, t: float, scores: dict[int, float],
                    gamma_F: float, n_c: int) -> tuple[float, list[DetectionVerdict]]:
    """Self-assessment by majority test on formation-score degradation.

    An agent whose spacing to more than half of its formation neighbors has
    degraded concludes that it is itself the outlier and reports itself; its
    trust weight drops accordingly. Returns (C_i, verdicts)."""
    n = len(scores)
    degraded = sorted(j for j, f in scores.items() if f < 1.0 - gamma_F)
    c_i = confidence(len(degraded), n, n_c)
    verdicts = []
    if n > 0 and 2 * len(degraded) > n:
        verdicts = [DetectionVerdict(t=t, monitor_id=monitor_id,
                                     suspect_id=monitor_id, kind="formation")]
    return c_i, verdicts
