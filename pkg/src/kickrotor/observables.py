"""Measured quantities: momentum distributions, p(0), <P^2>, localization."""
import csv
from dataclasses import dataclass

import numpy as np

FIT_FLOOR = 1e-8
EXPONENTIAL_R2 = 0.95


class NotLocalizedError(ValueError):
    pass


class FitError(ValueError):
    pass


def _weighted(ensemble):
    """(probabilities (n, M), momenta (n, M), weights (n,)) for any state type."""
    amps, p = ensemble._batch()
    w = getattr(ensemble, "weights", None)
    if w is None:
        w = np.ones(1)
    return np.abs(amps) ** 2, p, np.asarray(w, dtype=float)


def momentum_resolution(ensemble):
    return ensemble.hbar_eff * getattr(ensemble, "dbeta", 1.0)


@dataclass
class MomentumDistribution:
    P: np.ndarray
    prob: np.ndarray
    bin_width: float

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["P", "prob"])
            for p, q in zip(self.P, self.prob):
                w.writerow([repr(float(p)), repr(float(q))])


def momentum_distribution(ensemble, bin_width=None):
    """Weighted incoherent average of |amps|^2 on P bins centred at k*bin_width."""
    prob, p, w = _weighted(ensemble)
    if prob.size == 0:
        raise ValueError("empty ensemble")
    if bin_width is None:
        bin_width = ensemble.hbar_eff
    if bin_width < 0.5 * momentum_resolution(ensemble) - 1e-12:
        raise ValueError(
            f"bin width {bin_width} below half the momentum resolution "
            f"{momentum_resolution(ensemble)}"
        )
    idx = np.rint(p / bin_width).astype(np.int64)
    lo, hi = idx.min(), idx.max()
    hist = np.bincount((idx - lo).ravel(), weights=(prob * w[:, None]).ravel(),
                       minlength=hi - lo + 1)
    total = w.sum()
    return MomentumDistribution(np.arange(lo, hi + 1) * bin_width, hist / total, float(bin_width))


def member_p0(ensemble, window=1.0):
    """Population of each member inside |P| <= window/2."""
    prob, p, _ = _weighted(ensemble)
    return np.where(np.abs(p) <= 0.5 * window + 1e-12, prob, 0.0).sum(axis=1)


def zero_momentum_population(ensemble, window=1.0):
    """Total probability in |P| <= window/2 (rectangular velocity-selective probe).

    For band-restricted ensembles the weights are fractions of the whole
    cloud, so the result is the full-cloud p(0).
    """
    if window <= 0:
        raise ValueError(f"window must be > 0, got {window}")
    res = momentum_resolution(ensemble)
    if window < res - 1e-12:
        raise ValueError(
            f"window {window} narrower than the momentum resolution {res}; "
            "no population can be resolved"
        )
    w = getattr(ensemble, "weights", np.ones(1))
    return float(np.dot(w, member_p0(ensemble, window)))


def p0_standard_error(ensemble, window=1.0):
    """Standard error of p(0) from the scatter between ensemble members."""
    x = member_p0(ensemble, window)
    w = np.asarray(getattr(ensemble, "weights", np.ones(1)), dtype=float)
    if len(x) < 2:
        return 0.0
    total = w.sum()
    wn = w / total
    mean = np.dot(wn, x)
    var = np.dot(wn, (x - mean) ** 2)
    n_eff = 1.0 / np.sum(wn * wn)
    return float(total * np.sqrt(var / max(n_eff - 1.0, 1.0)))


def mean_p2(ensemble):
    prob, p, w = _weighted(ensemble)
    per = (prob * p * p).sum(axis=1)
    return float(np.dot(w, per) / w.sum())


def mean_kinetic_energy(ensemble):
    """<P^2>/2."""
    return 0.5 * mean_p2(ensemble)


@dataclass
class LocalizationFit:
    L: float
    r2: float
    n_bins: int

    @property
    def exponential(self):
        return self.r2 >= EXPONENTIAL_R2


def fit_localization_length(dist, floor=FIT_FLOOR):
    """Least-squares line through log p vs |P|, central bin excluded.

    Returns L = -1/slope with the R^2 of the fit.
    """
    P = np.asarray(dist.P, dtype=float)
    prob = np.asarray(dist.prob, dtype=float)
    central = np.abs(P) < 0.5 * dist.bin_width
    keep = (prob > floor) & ~central
    if keep.sum() < 10:
        raise FitError(f"only {int(keep.sum())} bins above {floor}; need 10")
    x = np.abs(P[keep])
    y = np.log(prob[keep])
    slope, icpt = np.polyfit(x, y, 1)
    if slope >= 0:
        raise FitError("non-negative slope: distribution is not localized")
    resid = y - (slope * x + icpt)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return LocalizationFit(float(-1.0 / slope), float(r2), int(keep.sum()))


def estimate_localization_time(series):
    """Kick count where the early linear growth meets the late plateau.

    ``series[i]`` is <P^2> after kick i+1. The early fit uses the first 20%
    of kicks, the plateau is the mean of the last 20%.
    """
    y = np.asarray(series, dtype=float)
    n = len(y)
    if n < 20:
        raise ValueError(f"series needs at least 20 kicks, got {n}")
    k = np.arange(1, n + 1, dtype=float)
    q = max(2, n // 5)
    early_slope, early_icpt = np.polyfit(k[:q], y[:q], 1)
    late_slope = np.polyfit(k[-q:], y[-q:], 1)[0]
    if early_slope <= 0 or late_slope > 0.2 * early_slope:
        raise NotLocalizedError(
            f"no plateau: late slope {late_slope:.4g} vs early slope {early_slope:.4g}"
        )
    plateau = y[-q:].mean()
    return float((plateau - early_icpt) / early_slope)


def summary_lines(values):
    """key=value text, one per line, in the given order."""
    return "".join(f"{k}={_fmt(v)}\n" for k, v in values.items())


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)
