"""Kick sequences for the single, two-frequency and modulated rotors."""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .params import ConfigError

COINCIDENCE_TOL = 1e-9
_ZERO_STRENGTH = 1e-12


@dataclass(frozen=True)
class KickEvent:
    time: float
    strength: float
    width: float = 0.0


@dataclass
class KickSchedule:
    events: list = field(default_factory=list)
    total_duration: float = 0.0

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def times(self):
        return np.array([e.time for e in self.events], dtype=float)

    @property
    def strengths(self):
        return np.array([e.strength for e in self.events], dtype=float)

    @property
    def widths(self):
        return np.array([e.width for e in self.events], dtype=float)

    def total_strength(self):
        return float(sum(e.strength for e in self.events))


def _merge_deltas(times, strengths):
    order = np.argsort(times, kind="stable")
    events = []
    for i in order:
        t, s = float(times[i]), float(strengths[i])
        if events and abs(t - events[-1][0]) <= COINCIDENCE_TOL:
            events[-1][1] += s
        else:
            events.append([t, s])
    return [KickEvent(t, s, 0.0) for t, s in events if s > _ZERO_STRENGTH]


def _merge_pulses(times, strengths, width):
    """Sum overlapping square pulses into piecewise-constant segments.

    Each pulse has amplitude strength/width on [t - width/2, t + width/2].
    Segments carry center time, integrated strength and their own length,
    so every pulse integral is preserved.
    """
    half = 0.5 * width
    # relative to the width so very short pulses keep their integral
    tol = min(COINCIDENCE_TOL, 1e-6 * width)
    edges = np.concatenate([times - half, times + half])
    edges.sort()
    # collapse edges closer than the coincidence tolerance
    bounds = [edges[0]]
    for e in edges[1:]:
        if e - bounds[-1] > tol:
            bounds.append(e)
    bounds = np.array(bounds)
    lengths = np.diff(bounds)
    seg = np.zeros(len(lengths))
    for t, s in zip(times, strengths):
        lo = np.searchsorted(bounds, t - half - tol)
        hi = np.searchsorted(bounds, t + half - tol)
        # share by covered length, which differs from width by roundoff
        seg[lo:hi] += s * lengths[lo:hi] / lengths[lo:hi].sum()
    events = []
    for a, b, q in zip(bounds[:-1], bounds[1:], seg):
        if q > _ZERO_STRENGTH:
            events.append(KickEvent(0.5 * (a + b), q, b - a))
    return events


def _assemble(times, strengths, width, duration, strict=False):
    times = np.asarray(times, dtype=float)
    strengths = np.asarray(strengths, dtype=float)
    keep = strengths > _ZERO_STRENGTH
    times, strengths = times[keep], strengths[keep]
    if len(times) == 0:
        return KickSchedule([], float(duration))
    if width <= COINCIDENCE_TOL:
        events = _merge_deltas(times, strengths)
    else:
        if strict and len(times) > 1:
            gaps = np.diff(np.sort(times))
            gap = gaps.min()
            if width >= gap:
                raise ConfigError(
                    f"tau={width} overlaps neighbouring pulses (minimum gap {gap:.6g})"
                )
        events = _merge_pulses(times, strengths, width)
    return KickSchedule(events, float(duration))


def build_two_frequency_schedule(params):
    """Kicks at t = n (n = 1..N1) plus t = (n + phi/2pi)/r (n = 1..N2)."""
    if params.mode != "two-train":
        raise ConfigError(f"mode must be 'two-train', got {params.mode!r}")
    n1 = params.N1
    n2 = params.n2
    t1 = np.arange(1, n1 + 1, dtype=float)
    t2 = (np.arange(1, n2 + 1, dtype=float) + params.phi / (2 * math.pi)) / params.r
    times = np.concatenate([t1, t2])
    strengths = np.full(len(times), float(params.K))
    return _assemble(times, strengths, params.tau, n1, params.strict_overlap)


def build_modulated_schedule(params):
    """Single train at t = n with strengths K (1 + A cos(2 pi r n + mod_phase))."""
    if params.mode != "modulated":
        raise ConfigError(f"mode must be 'modulated', got {params.mode!r}")
    n = np.arange(1, params.N1 + 1, dtype=float)
    strengths = params.K * (1.0 + params.A * np.cos(2 * math.pi * params.r * n + params.mod_phase))
    return _assemble(n, strengths, params.tau, params.N1)


def build_schedule(params):
    if params.mode == "modulated":
        return build_modulated_schedule(params)
    return build_two_frequency_schedule(params)


def single_train_params(params):
    """Periodic reference: one train of N1 kicks (modulated mode with A = 0)."""
    return params.replace(mode="modulated", A=0.0, r=1.0, N2=None)


def write_schedule_csv(schedule, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "strength", "width"])
        for e in schedule:
            w.writerow([repr(float(e.time)), repr(float(e.strength)), repr(float(e.width))])


def read_schedule_csv(path, total_duration=None):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    events = [KickEvent(float(r["time"]), float(r["strength"]), float(r["width"])) for r in rows]
    if total_duration is None:
        total_duration = max((e.time for e in events), default=0.0)
    return KickSchedule(events, float(total_duration))
