"""Simulation parameters, lab-unit conversion and error types.

Everything inside the package works in reduced units: time in kick periods
T1, momentum in units of M/(2 k_L T1), kick strength as the stochasticity
parameter K. Lab units only appear in :func:`hbar_eff_from_lab` and
:func:`tau_from_lab`.
"""
import dataclasses
import math
from dataclasses import dataclass

HBAR_SI = 1.054571817e-34
CS_WAVELENGTH_NM = 852.3
CS_MASS_KG = 2.2069e-25

MODES = ("two-train", "modulated")


class ConfigError(ValueError):
    """Invalid parameter combination. The message names the field."""


class AliasingError(RuntimeError):
    """Population reached the edge of the momentum ladder."""

    def __init__(self, time, population):
        self.time = time
        self.population = population
        super().__init__(
            f"aliasing guard tripped at t={time:.6g}: edge population {population:.3e}"
        )


def hbar_eff_from_lab(f1_khz, wavelength_nm=CS_WAVELENGTH_NM, mass_kg=CS_MASS_KG):
    """Effective Planck constant 4 k_L^2 T1 hbar / M."""
    k_l = 2.0 * math.pi / (wavelength_nm * 1e-9)
    t1 = 1.0 / (f1_khz * 1e3)
    return 4.0 * k_l**2 * t1 * HBAR_SI / mass_kg


def tau_from_lab(tau_us, f1_khz):
    """Pulse duration in units of T1."""
    return tau_us * 1e-6 * f1_khz * 1e3


def subfourier_product(delta_r, n1, f1_khz=18.0):
    """Delta f2 * T evaluated in lab units (Hz * s).

    Delta f2 = f1 * delta_r and T = N1 / f1, so this is delta_r * N1 up to
    rounding; kept separate so the identity can be checked.
    """
    f1 = f1_khz * 1e3
    return (f1 * delta_r) * (n1 / f1)


def default_n2(r, n1, phi=0.0):
    """Largest train-2 index whose kick lands strictly before t = N1.

    For phi = 0 this is the largest integer strictly below r*N1.
    """
    x = r * n1 - phi / (2.0 * math.pi)
    return max(0, math.ceil(x - 1e-9) - 1)


@dataclass(frozen=True)
class SimParams:
    K: float = 42.0
    hbar_eff: float = 5.76
    r: float = 1.0
    phi: float = 0.0
    tau: float = 0.0
    N1: int = 10
    N2: int | None = None
    A: float = 0.0
    mode: str = "two-train"
    grid_size: int = 2048
    beta_samples: int = 32
    sigma_P: float = 1.0
    seed: int = 0
    mod_phase: float = 0.0
    strict_overlap: bool = False
    substeps: int | None = None

    def __post_init__(self):
        if not self.K >= 0:
            raise ConfigError(f"K must be >= 0, got {self.K}")
        if not self.hbar_eff > 0:
            raise ConfigError(f"hbar_eff must be > 0, got {self.hbar_eff}")
        if not self.r > 0:
            raise ConfigError(f"r must be > 0, got {self.r}")
        if not 0 <= self.phi < 2 * math.pi:
            raise ConfigError(f"phi must lie in [0, 2pi), got {self.phi}")
        if not 0 <= self.tau < 1.0 / max(1.0, self.r):
            raise ConfigError(f"tau must lie in [0, 1/max(1, r)), got {self.tau}")
        if int(self.N1) != self.N1 or self.N1 < 1:
            raise ConfigError(f"N1 must be a positive integer, got {self.N1}")
        if self.N2 is not None and (int(self.N2) != self.N2 or self.N2 < 0):
            raise ConfigError(f"N2 must be a non-negative integer, got {self.N2}")
        if not 0 <= self.A <= 1:
            raise ConfigError(f"A must lie in [0, 1], got {self.A}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.grid_size < 64 or self.grid_size % 2:
            raise ConfigError(f"grid_size must be even and >= 64, got {self.grid_size}")
        if self.beta_samples < 1:
            raise ConfigError(f"beta_samples must be >= 1, got {self.beta_samples}")
        if not self.sigma_P >= 0:
            raise ConfigError(f"sigma_P must be >= 0, got {self.sigma_P}")
        if self.substeps is not None and self.substeps < 1:
            raise ConfigError(f"substeps must be >= 1, got {self.substeps}")

    @property
    def n2(self):
        if self.N2 is not None:
            return int(self.N2)
        return default_n2(self.r, self.N1, self.phi)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        return dataclasses.asdict(self)
