"""Split-operator propagation of kicked-rotor states on a momentum ladder.

A state with quasi-momentum beta lives on the ladder
P_m = (m - M/2 + beta) * hbar_eff. Free flight is diagonal in momentum, the
cos(theta) kick is diagonal on the angle grid theta_j = 2 pi j / M; the two
representations are linked by a unitary FFT. The beta factor exp(i beta theta)
commutes with the 2 pi periodic kick, so the same angle grid serves every beta.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .params import AliasingError, ConfigError

NORM_TOL = 1e-10
EDGE_FRACTION = 0.05
EDGE_TOL = 1e-8
MIN_SUBSTEPS = 20
MAX_GRID = 1 << 16
# members whose Gaussian weight is below this fraction of the peak are dropped
MEMBER_CUTOFF = 1e-6


def ladder_momenta(beta, grid_size, hbar_eff):
    m = np.arange(grid_size, dtype=float) - grid_size // 2
    return (m + beta) * hbar_eff


@dataclass
class MomentumLadderState:
    beta: float
    amps: np.ndarray
    hbar_eff: float

    @classmethod
    def plane_wave(cls, grid_size, hbar_eff, beta=0.0, index=0):
        """Unit amplitude at P = (index + beta) * hbar_eff."""
        amps = np.zeros(grid_size, dtype=complex)
        amps[grid_size // 2 + index] = 1.0
        return cls(float(beta), amps, float(hbar_eff))

    @property
    def grid_size(self):
        return self.amps.shape[-1]

    @property
    def momenta(self):
        return ladder_momenta(self.beta, self.grid_size, self.hbar_eff)

    @property
    def probabilities(self):
        return np.abs(self.amps) ** 2

    def norm(self):
        return float(np.sum(np.abs(self.amps) ** 2))

    def copy(self):
        return MomentumLadderState(self.beta, self.amps.copy(), self.hbar_eff)

    # uniform batch interface shared with LadderEnsemble
    def _batch(self):
        return self.amps.reshape(1, -1), self.momenta.reshape(1, -1)

    def _with_batch(self, amps2d):
        return MomentumLadderState(self.beta, amps2d.reshape(-1), self.hbar_eff)


@dataclass
class LadderEnsemble:
    """Incoherent mixture of ladder states, one row per member.

    ``dbeta`` is the quasi-momentum sampling step; ``hbar_eff * dbeta`` is
    the momentum resolution of the ensemble as a whole.
    """

    betas: np.ndarray
    amps: np.ndarray
    weights: np.ndarray
    hbar_eff: float
    dbeta: float = 1.0
    _momenta: np.ndarray = field(default=None, repr=False)

    @property
    def grid_size(self):
        return self.amps.shape[1]

    @property
    def momenta(self):
        if self._momenta is None or self._momenta.shape != self.amps.shape:
            m = np.arange(self.grid_size, dtype=float) - self.grid_size // 2
            self._momenta = (m[None, :] + self.betas[:, None]) * self.hbar_eff
        return self._momenta

    @property
    def probabilities(self):
        return np.abs(self.amps) ** 2

    def __len__(self):
        return len(self.betas)

    def copy(self):
        return LadderEnsemble(
            self.betas.copy(), self.amps.copy(), self.weights.copy(), self.hbar_eff,
            self.dbeta, self._momenta,
        )

    def member(self, i):
        return MomentumLadderState(float(self.betas[i]), self.amps[i].copy(), self.hbar_eff)

    def _batch(self):
        return self.amps, self.momenta

    def _with_batch(self, amps2d):
        return LadderEnsemble(self.betas, amps2d, self.weights, self.hbar_eff, self.dbeta, self._momenta)


def make_ensemble(hbar_eff, grid_size, beta_samples=32, sigma_P=1.0, seed=0, band=None):
    """Plane-wave members weighted by a Gaussian of width sigma_P in P.

    beta is drawn by jittered stratification. With ``band = b`` only
    quasi-momenta within b of zero (mod 1) are sampled and the weights keep
    their full-cloud normalization, so sums over members estimate fractions
    of the whole cloud. Members outside the band cannot reach |P| < b*hbar_eff.
    """
    rng = np.random.default_rng(seed)
    if sigma_P == 0:
        betas = np.zeros(1)
        offsets = np.zeros(1, dtype=int)
        weights = np.ones(1)
        dbeta = 1.0
    else:
        if band is None or band >= 0.5:
            lo, width = 0.0, 1.0
            band = None
        else:
            lo, width = -band, 2.0 * band
        dbeta = width / beta_samples
        strata = lo + (np.arange(beta_samples) + rng.random(beta_samples)) * dbeta
        strata = np.mod(strata, 1.0)
        reach = 7.0 * sigma_P / hbar_eff + 1.0
        bl, ol, wl = [], [], []
        for b in strata:
            for m0 in range(math.floor(-reach - b), math.ceil(reach - b) + 1):
                p0 = (m0 + b) * hbar_eff
                g = math.exp(-0.5 * (p0 / sigma_P) ** 2)
                if g < MEMBER_CUTOFF:
                    continue
                bl.append(b)
                ol.append(m0)
                wl.append(g * dbeta * hbar_eff / (math.sqrt(2 * math.pi) * sigma_P))
        betas = np.array(bl)
        offsets = np.array(ol, dtype=int)
        weights = np.array(wl)
        if band is None:
            weights = weights / weights.sum()
    if np.any(np.abs(offsets) >= grid_size // 2 * (1 - 2 * EDGE_FRACTION)):
        raise ConfigError(f"grid_size={grid_size} too small for sigma_P={sigma_P}")
    amps = np.zeros((len(betas), grid_size), dtype=complex)
    amps[np.arange(len(betas)), grid_size // 2 + offsets] = 1.0
    return LadderEnsemble(betas, amps, weights, float(hbar_eff), float(dbeta))


def ensemble_from_params(params, band=None, grid_size=None):
    return make_ensemble(
        params.hbar_eff,
        grid_size or params.grid_size,
        params.beta_samples,
        params.sigma_P,
        params.seed,
        band=band,
    )


# -- primitive steps on (n, M) arrays, in place ------------------------------


def _free_inplace(amps, p2, dt, hbar_eff):
    if dt != 0.0:
        kernels.phase_multiply(amps, p2, dt / (2.0 * hbar_eff))


_cos_cache = {}


def _cos_theta(grid_size):
    c = _cos_cache.get(grid_size)
    if c is None:
        c = np.cos(2.0 * np.pi * np.arange(grid_size) / grid_size)
        _cos_cache[grid_size] = c
    return c


def _kick_table(grid_size, strength, hbar_eff):
    return np.exp((-1j * strength / hbar_eff) * _cos_theta(grid_size))


def _kick_inplace(amps, strength, hbar_eff, table=None):
    """amps <- FFT[ exp(-i strength cos(theta)/hbar) IFFT[amps] ] along rows."""
    if strength == 0.0:
        return amps
    psi = np.fft.ifft(amps, axis=1, norm="ortho")
    if table is None:
        kernels.phase_multiply(psi, _cos_theta(amps.shape[1]), strength / hbar_eff)
    else:
        psi *= table
    amps[...] = np.fft.fft(psi, axis=1, norm="ortho")
    return amps


def substep_floor(strength, hbar_eff):
    return max(MIN_SUBSTEPS, math.ceil(0.1 * strength / hbar_eff))


def _pulse_tables(p2, strength, width, substeps, hbar_eff):
    dt = width / substeps
    half = np.exp((-1j * dt / (4.0 * hbar_eff)) * p2)
    kick = _kick_table(p2.shape[1], strength / substeps, hbar_eff)
    return half, half * half, kick


def _pulse_inplace(amps, p2, strength, width, substeps, hbar_eff, tables=None):
    """Strang steps: half drift, then (kick, drift) x substeps, last drift halved."""
    half, full, kick = tables or _pulse_tables(p2, strength, width, substeps, hbar_eff)
    amps *= half
    for i in range(substeps):
        _kick_inplace(amps, 1.0, hbar_eff, table=kick)
        amps *= full if i < substeps - 1 else half


# -- public single-step operations --------------------------------------------


def free_propagate(state, dt):
    """Multiply each amplitude by exp(-i P_m^2 dt / (2 hbar_eff))."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    amps, p = state._batch()
    out = np.ascontiguousarray(amps, dtype=complex).copy()
    _free_inplace(out, p * p, float(dt), state.hbar_eff)
    return state._with_batch(out)


def apply_delta_kick(state, strength):
    if strength < 0:
        raise ValueError(f"strength must be >= 0, got {strength}")
    amps, _ = state._batch()
    out = np.ascontiguousarray(amps, dtype=complex).copy()
    _kick_inplace(out, float(strength), state.hbar_eff)
    return state._with_batch(out)


def apply_square_pulse(state, strength, width, substeps=None):
    """Strang splitting of P^2/2 + (strength/width) cos(theta) over ``width``."""
    if width <= 0:
        raise ValueError(f"width must be > 0, got {width}")
    floor = substep_floor(strength, state.hbar_eff)
    if substeps is None:
        substeps = floor
    if substeps < floor:
        raise ValueError(f"substeps={substeps} below floor {floor}")
    amps, p = state._batch()
    out = np.ascontiguousarray(amps, dtype=complex).copy()
    _pulse_inplace(out, p * p, float(strength), float(width), int(substeps), state.hbar_eff)
    return state._with_batch(out)


def edge_population(state):
    amps, _ = state._batch()
    m = amps.shape[1]
    k = max(1, int(round(EDGE_FRACTION * m)))
    pr = np.abs(amps[:, :k]) ** 2
    pr2 = np.abs(amps[:, m - k:]) ** 2
    return float(np.max(pr.sum(axis=1) + pr2.sum(axis=1)))


def check_aliasing(state, time):
    pop = edge_population(state)
    if pop > EDGE_TOL:
        raise AliasingError(time, pop)


def evolve_schedule(state, schedule, pulse="auto", record=(), observe=None,
                    substeps=None, final_time=None):
    """Propagate through every event of ``schedule`` in time order.

    ``record`` lists observation times; each snapshot is taken right after
    the last event at or before that time. ``observe(state)`` maps each
    snapshot to the stored value (default: a copy of the state).
    Returns ``(final_state, [(time, value), ...])``. The final state sits at
    ``final_time`` (default: the schedule duration, or the end of the last
    pulse if later).

    pulse: "auto" evolves finite-width events as square pulses, "delta"
    applies every event as an instantaneous kick at its center.
    """
    if pulse not in ("auto", "delta"):
        raise ValueError(f"pulse must be 'auto' or 'delta', got {pulse!r}")
    if observe is None:
        observe = lambda s: s.copy()  # noqa: E731
    amps0, p = state._batch()
    amps = np.ascontiguousarray(amps0, dtype=complex).copy()
    p2 = p * p
    hbar = state.hbar_eff
    rec = sorted(float(t) for t in record)
    out = []
    ri = 0
    now = 0.0
    events = schedule.events
    tables = {}

    def snap():
        cur = state._with_batch(amps)
        check_aliasing(cur, now)
        return observe(cur)

    for k, ev in enumerate(events):
        # observations before this event
        while ri < len(rec) and rec[ri] < ev.time - 1e-9:
            out.append((rec[ri], snap()))
            ri += 1
        w = ev.width if pulse == "auto" else 0.0
        start = ev.time - 0.5 * w
        _free_inplace(amps, p2, max(0.0, start - now), hbar)
        if w > 0:
            n = max(substeps or 0, substep_floor(ev.strength, hbar))
            key = (ev.strength, w, n)
            if key not in tables:
                tables[key] = _pulse_tables(p2, ev.strength, w, n, hbar)
            _pulse_inplace(amps, p2, ev.strength, w, n, hbar, tables[key])
            now = ev.time + 0.5 * w
        else:
            if ev.strength not in tables:
                tables[ev.strength] = _kick_table(amps.shape[1], ev.strength, hbar)
            _kick_inplace(amps, ev.strength, hbar, tables[ev.strength])
            now = max(now, ev.time)
    while ri < len(rec):
        out.append((rec[ri], snap()))
        ri += 1
    end = schedule.total_duration if final_time is None else final_time
    _free_inplace(amps, p2, max(0.0, end - now), hbar)
    now = max(now, end)
    final = state._with_batch(amps)
    check_aliasing(final, now)
    return final, out


def evolve_with_regrid(make_state, schedule, grid_size, max_grid=MAX_GRID, **kwargs):
    """Run :func:`evolve_schedule`, doubling the ladder when the guard trips.

    ``make_state(grid_size)`` builds the initial state for a given grid.
    Returns ``(final_state, records, grid_size_used)``.
    """
    m = grid_size
    while True:
        try:
            final, recs = evolve_schedule(make_state(m), schedule, **kwargs)
            return final, recs, m
        except AliasingError:
            if 2 * m > max_grid:
                raise
            m *= 2


def classical_diffusion(K, n_kicks, ensemble_size, seed=0, p_spread=0.0):
    """Ensemble <P^2> after each kick of the standard map.

    Initial angles are uniform on [0, 2 pi); initial momenta are Gaussian
    with standard deviation ``p_spread`` (exactly zero by default).
    """
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, ensemble_size)
    p = rng.normal(0.0, p_spread, ensemble_size) if p_spread > 0 else np.zeros(ensemble_size)
    return kernels.standard_map(theta, p, float(K), int(n_kicks))


def write_snapshot_csv(state, path):
    """Dump one ladder state: columns m, P, re, im, prob (m relative to the grid centre)."""
    m = np.arange(state.grid_size) - state.grid_size // 2
    with open(path, "w") as fh:
        fh.write("m,P,re,im,prob\n")
        for k, p, a in zip(m, state.momenta, state.amps):
            fh.write(f"{k},{float(p)!r},{float(a.real)!r},{float(a.imag)!r},{float(abs(a) ** 2)!r}\n")
