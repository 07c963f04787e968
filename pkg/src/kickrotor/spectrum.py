"""Closed-form Fourier analysis of kick trains.

Frequencies are in units of f1. A square pulse of width tau contributes
s * exp(2 pi i f t) * sinc(pi f tau); a delta kick has unit envelope.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .params import default_n2
from .schedule import build_two_frequency_schedule


@dataclass
class SpectrumCurve:
    f: np.ndarray
    power: np.ndarray
    meta: dict = field(default_factory=dict)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["f_over_f1", "power"])
            for f, p in zip(self.f, self.power):
                w.writerow([repr(float(f)), repr(float(p))])


def sequence_spectrum(schedule, f):
    """|FT|^2 of the kick train at each frequency in ``f``."""
    f = np.atleast_1d(np.asarray(f, dtype=float))
    if len(schedule) == 0:
        power = np.zeros_like(f)
    else:
        power = kernels.comb_power(
            np.ascontiguousarray(schedule.times),
            np.ascontiguousarray(schedule.strengths),
            np.ascontiguousarray(schedule.widths),
            np.ascontiguousarray(f),
        )
    meta = {"n_events": len(schedule), "duration": schedule.total_duration}
    return SpectrumCurve(f, power, meta)


def f_half(params, r_grid, n2=None):
    """Peak-normalized |FT|^2 of the double train at f = (1 + r)/2, phi = 0.

    The second train keeps a fixed kick count over the whole grid,
    by default the one derived at r = 1 (N1 - 1). Re-deriving it per r
    would change the count exactly at the maximum.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    base = params.replace(phi=0.0, mode="two-train")
    if n2 is None:
        n2 = default_n2(1.0, base.N1, 0.0)
    vals = np.empty(len(r_grid))
    for i, r in enumerate(r_grid):
        sch = build_two_frequency_schedule(base.replace(r=float(r), N2=n2))
        vals[i] = sequence_spectrum(sch, [(1.0 + r) / 2.0]).power[0]
    peak = vals.max()
    norm = vals / peak if peak > 0 else vals
    return SpectrumCurve(r_grid, norm, {"N1": base.N1, "N2": n2, "tau": base.tau})


def f_half_width(params, r_grid=None, n2=None):
    """FWHM of F_1/2(r) with the baseline forced to zero."""
    from .scan import ResonanceCurve, fwhm

    if r_grid is None:
        r_grid = np.linspace(0.8, 1.2, 4001)
    curve = f_half(params, r_grid, n2=n2)
    rc = ResonanceCurve(curve.f, curve.power, np.zeros_like(curve.power))
    return fwhm(rc, n1=params.N1, fourier_width=float("nan"), baseline=0.0).delta_r


def sinc2(x):
    x = np.asarray(x, dtype=float)
    return np.sinc(x / np.pi) ** 2


def harmonic_weights(tau, j):
    """Power of comb tooth j relative to the fundamental: sinc^2(pi j tau)/sinc^2(pi tau)."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    j = np.asarray(j, dtype=float)
    return sinc2(np.pi * j * tau) / sinc2(np.pi * tau)


def in_central_lobe(tau, j):
    """True where harmonic j lies before the first zero of the envelope (j tau < 1)."""
    return np.asarray(j, dtype=float) * tau < 1.0


def modulated_spectrum_peaks(r, j_max):
    """Carrier peaks at j and sidebands at j +/- (r - 1), j = 1..j_max, sorted."""
    d = r - 1.0
    peaks = set()
    for j in range(1, j_max + 1):
        peaks.update((float(j), j - d, j + d))
    return sorted(peaks)


def write_f_half_csv(curve, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "F12_normalized"])
        for r, v in zip(curve.f, curve.power):
            w.writerow([repr(float(r)), repr(float(v))])
