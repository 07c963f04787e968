"""Resonance curves p(0) vs r, their widths, and width scaling with N1."""
import csv
import functools
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, observables
from .params import SimParams
from .parallel import run_indexed
from .schedule import build_schedule

FOURIER_LIMIT = 1.0


class WidthError(ValueError):
    pass


@dataclass
class ResonanceCurve:
    r: np.ndarray
    p0: np.ndarray
    se: np.ndarray
    params: SimParams = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.p0 = np.asarray(self.p0, dtype=float)
        self.se = np.asarray(self.se, dtype=float)
        if not (len(self.r) == len(self.p0) == len(self.se)):
            raise ValueError("r, p0 and se must have the same length")
        if len(self.r) < 5:
            raise ValueError(f"a resonance curve needs >= 5 points, got {len(self.r)}")
        if np.any(np.diff(self.r) <= 0):
            raise ValueError("r must be strictly increasing")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "p0", "se"])
            for r, p, s in zip(self.r, self.p0, self.se):
                w.writerow([repr(float(r)), repr(float(p)), repr(float(s))])


@dataclass
class WidthReport:
    delta_r: float
    baseline: float
    peak: float
    peak_r: float
    W: float
    subfourier_factor: float
    left: float
    right: float
    delta_r_err: float = float("nan")

    def as_dict(self):
        return {
            "delta_r": self.delta_r,
            "delta_r_err": self.delta_r_err,
            "W": self.W,
            "baseline": self.baseline,
            "peak": self.peak,
            "peak_r": self.peak_r,
            "subfourier_factor": self.subfourier_factor,
        }

    def to_text(self):
        return observables.summary_lines(self.as_dict())


@functools.lru_cache(maxsize=64)
def _fourier_width(n1, tau):
    from .spectrum import f_half_width

    return f_half_width(SimParams(N1=n1, tau=tau, K=1.0))


def _crossing(r, p, i_from, step, half):
    """(position, |slope|, bracketing indices) of the first half-level crossing."""
    i = i_from
    while 0 <= i + step < len(p):
        j = i + step
        if p[j] <= half:
            # p[i] > half >= p[j]
            slope = (p[j] - p[i]) / (r[j] - r[i])
            return r[i] + (half - p[i]) / slope, abs(slope), (i, j)
        i = j
    return None


def _width_error(se, se_peak, left, right):
    """Propagate p0 errors through the flank slopes.

    Each crossing moves by se/|slope|; an error in the peak shifts the half
    level by se_peak/2, which moves both crossings outward together.
    """
    (_, sl, il), (_, sr, ir) = left, right
    se_l = max(se[il[0]], se[il[1]])
    se_r = max(se[ir[0]], se[ir[1]])
    flanks = (se_l / sl) ** 2 + (se_r / sr) ** 2
    level = (0.5 * se_peak * (1.0 / sl + 1.0 / sr)) ** 2
    return float(np.sqrt(flanks + level))


def fwhm(curve, n1=None, fourier_width=None, baseline=None, significance=5.0):
    """Full width at half maximum of the interior peak.

    The baseline is the median of the outer 20% of points on each side
    unless given. Crossings are interpolated linearly on each flank, walking
    outward from the maximum.
    """
    r, p, se = curve.r, curve.p0, curve.se
    n = len(r)
    ipk = int(np.argmax(p))
    if ipk == 0 or ipk == n - 1:
        raise WidthError(f"peak at the scan edge (r={r[ipk]:.6g})")
    if baseline is None:
        k = max(1, int(round(0.2 * n)))
        baseline = float(np.median(np.concatenate([p[:k], p[-k:]])))
    peak = float(p[ipk])
    noise = float(np.median(se)) if len(se) else 0.0
    if peak - baseline <= significance * noise or peak <= baseline:
        raise WidthError(
            f"peak {peak:.4g} not significant over baseline {baseline:.4g} "
            f"(median se {noise:.3g})"
        )
    half = 0.5 * (peak + baseline)
    left = _crossing(r, p, ipk, -1, half)
    right = _crossing(r, p, ipk, +1, half)
    if left is None or right is None:
        raise WidthError("flank never crosses the half level; widen the scan range")
    err = _width_error(se, se[ipk], left, right)
    left, right = left[0], right[0]
    delta = right - left
    if n1 is None:
        n1 = curve.params.N1 if curve.params is not None else 1
    if fourier_width is None and curve.params is not None:
        fourier_width = _fourier_width(curve.params.N1, curve.params.tau)
    factor = fourier_width / delta if fourier_width else float("nan")
    return WidthReport(
        delta_r=float(delta),
        baseline=baseline,
        peak=peak,
        peak_r=float(r[ipk]),
        W=float(delta * n1),
        subfourier_factor=float(factor),
        left=float(left),
        right=float(right),
        delta_r_err=err,
    )


def p0_band(params, window):
    """Quasi-momentum half-band that can populate |P| <= window/2."""
    return 0.5 * window / params.hbar_eff


def simulate_p0(params, window=1.0, pulse="auto"):
    """(p0, se, grid_used) after the last kick for one parameter point."""
    sch = build_schedule(params)
    band = p0_band(params, window)
    final, _, m = dynamics.evolve_with_regrid(
        lambda M: dynamics.ensemble_from_params(params, band=band, grid_size=M),
        sch, params.grid_size, pulse=pulse, substeps=params.substeps,
    )
    return (
        observables.zero_momentum_population(final, window),
        observables.p0_standard_error(final, window),
        m,
    )


def _point(args):
    params, window, pulse = args
    p0, se, _ = simulate_p0(params, window, pulse)
    return p0, se


def scan_resonance(params, r_grid, window=1.0, workers=1, pulse="auto"):
    """p(0) after the last kick for each r; every point uses the same seed."""
    r_grid = np.asarray(r_grid, dtype=float)
    items = [(params.replace(r=float(r)), window, pulse) for r in r_grid]
    res = run_indexed(_point, items, workers)
    p0 = np.array([x[0] for x in res])
    se = np.array([x[1] for x in res])
    return ResonanceCurve(r_grid, p0, se, params, {"window": window, "pulse": pulse})


def centered_grid(center, half_span, points):
    """Odd-length grid that always contains ``center``."""
    k = points // 2
    return center + half_span * np.arange(-k, k + 1) / k


@dataclass
class AdaptiveScan:
    curve: ResonanceCurve
    report: WidthReport
    coarse: ResonanceCurve
    passes: int


def adaptive_scan(params, center=1.0, half_span=None, coarse_points=41, fine_points=40,
                  window=1.0, workers=1, pulse="auto", min_inside=10, max_passes=6):
    """Two-pass scan: coarse over the user range, then fine passes.

    Each fine pass puts ``fine_points`` across 4x the current FWHM estimate
    until at least ``min_inside`` samples fall inside the FWHM. The baseline
    comes from the coarse pass, whose outer points sit in the true wings.
    """
    if half_span is None:
        half_span = min(0.5, 2.0 / params.N1)
    coarse = None
    for _ in range(4):
        coarse = scan_resonance(params, centered_grid(center, half_span, coarse_points),
                                window, workers, pulse)
        try:
            rep = fwhm(coarse)
            break
        except WidthError as exc:
            if "flank" not in str(exc) or half_span >= 0.5:
                raise
            half_span = min(0.5, 2.0 * half_span)
    else:
        raise WidthError("coarse scan never bracketed the resonance")
    baseline = rep.baseline
    curve, passes = coarse, 1
    while passes < max_passes:
        inside = np.sum((curve.r >= rep.left) & (curve.r <= rep.right))
        if inside >= min_inside:
            break
        step = max(rep.delta_r, curve.r[1] - curve.r[0]) * 4.0 / fine_points
        fine_half = step * (fine_points // 2)
        curve = scan_resonance(params, centered_grid(center, fine_half, fine_points + 1),
                               window, workers, pulse)
        rep = fwhm(curve, baseline=baseline)
        passes += 1
    return AdaptiveScan(curve, rep, coarse, passes)


@dataclass
class WidthSeries:
    n1: np.ndarray
    delta_r: np.ndarray
    W: np.ndarray
    slope: np.ndarray
    flags: list
    fourier_limit: float = FOURIER_LIMIT

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N1", "delta_r", "W", "fit_slope_local"])
            for row in zip(self.n1, self.delta_r, self.W, self.slope):
                w.writerow([int(row[0])] + [repr(float(x)) for x in row[1:]])


def local_slopes(n1, delta_r):
    """d log(delta_r) / d log(N1) by finite differences (NaN where undefined)."""
    x = np.log(np.asarray(n1, dtype=float))
    y = np.log(np.asarray(delta_r, dtype=float))
    ok = np.isfinite(y)
    out = np.full(len(x), np.nan)
    if ok.sum() >= 2:
        out[ok] = np.gradient(y[ok], x[ok])
    return out


def width_vs_n(params, n1_list, window=1.0, workers=1, pulse="auto", **scan_kw):
    """Normalized width W = delta_r * N1 for each N1; failed points are NaN and flagged."""
    n1_list = [int(n) for n in n1_list]
    if any(b <= a for a, b in zip(n1_list, n1_list[1:])):
        raise ValueError("N1 list must be increasing")
    dr, flags = [], []
    for n1 in n1_list:
        try:
            res = adaptive_scan(params.replace(N1=n1), window=window, workers=workers,
                                pulse=pulse, **scan_kw)
            dr.append(res.report.delta_r)
            flags.append("")
        except (WidthError, ValueError) as exc:
            dr.append(float("nan"))
            flags.append(str(exc))
    dr = np.array(dr)
    n1 = np.array(n1_list)
    return WidthSeries(n1, dr, dr * n1, local_slopes(n1, dr), flags)


def phase_advance_width(mean_p2, n, hbar_eff):
    """Solve <P^2>/(2 hbar) * N * (r-1)/r = 1 for r - 1.

    Returns (exact, small-width approximation 2 hbar / (<P^2> N)).
    """
    if mean_p2 <= 0 or n <= 0 or hbar_eff <= 0:
        raise ValueError("inputs must be positive")
    x = 2.0 * hbar_eff / (mean_p2 * n)
    if x >= 1.0:
        raise ValueError(
            f"<P^2> N = {mean_p2 * n:.4g} <= 2 hbar_eff: criterion unreachable"
        )
    return x / (1.0 - x), x


def k_distribution(K, waist_ratio=1.6, nodes=8):
    """Kick strengths seen across a Gaussian cloud in a Gaussian beam.

    Cloud density ~ exp(-rho^2 / 2 sigma^2), intensity ~ exp(-2 rho^2 / w^2)
    with w = waist_ratio * sigma. With u = rho^2 / 2 sigma^2 ~ Exp(1),
    K(u) = K exp(-4 u / waist_ratio^2); Gauss-Laguerre nodes in u.
    """
    u, w = np.polynomial.laguerre.laggauss(nodes)
    return K * np.exp(-4.0 * u / waist_ratio**2), w / w.sum()


@dataclass
class InhomogeneousScan:
    curve: ResonanceCurve
    homogeneous: ResonanceCurve
    broadened_width: float
    homogeneous_width: float


def _width_or_nan(curve):
    try:
        return fwhm(curve).delta_r
    except WidthError:
        return float("nan")


def scan_with_k_inhomogeneity(params, r_grid, k_values=None, k_weights=None, window=1.0,
                              workers=1, pulse="auto", waist_ratio=1.6, nodes=8):
    """Weighted average of resonance curves over a distribution of K."""
    if k_values is None:
        k_values, k_weights = k_distribution(params.K, waist_ratio, nodes)
    k_values = np.atleast_1d(np.asarray(k_values, dtype=float))
    if k_weights is None:
        k_weights = np.full(len(k_values), 1.0 / len(k_values))
    k_weights = np.asarray(k_weights, dtype=float)
    k_weights = k_weights / k_weights.sum()
    r_grid = np.asarray(r_grid, dtype=float)
    items = [(params.replace(K=float(k), r=float(r)), window, pulse)
             for k in k_values for r in r_grid]
    res = np.array(run_indexed(_point, items, workers)).reshape(len(k_values), len(r_grid), 2)
    p0 = np.einsum("k,kr->r", k_weights, res[:, :, 0])
    se = np.sqrt(np.einsum("k,kr->r", k_weights**2, res[:, :, 1] ** 2))
    curve = ResonanceCurve(r_grid, p0, se, params,
                           {"k_values": k_values.tolist(), "k_weights": k_weights.tolist()})
    if len(k_values) == 1 and k_values[0] == params.K:
        homo = ResonanceCurve(r_grid, res[0, :, 0], res[0, :, 1], params)
    else:
        homo = scan_resonance(params, r_grid, window, workers, pulse)
    return InhomogeneousScan(curve, homo, _width_or_nan(curve), _width_or_nan(homo))


def read_resonance_csv(path, params=None):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return ResonanceCurve([float(x["r"]) for x in rows], [float(x["p0"]) for x in rows],
                          [float(x["se"]) for x in rows], params)


def log_slope(x, y):
    """Least-squares slope of log y vs log x."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])

