"""Pure numpy versions of the hot kernels.

Signatures match the compiled ``_kernels_ext`` module exactly so the two can
be swapped at import time.
"""
import numpy as np


def phase_multiply(amps, coeff, scale):
    """In place: ``amps *= exp(-1j * scale * coeff)``.

    ``amps`` is a C-contiguous complex128 array of shape (n, M); ``coeff`` is
    float64 with shape (n, M) or (M,).
    """
    arg = coeff * (-scale)
    amps *= np.cos(arg) + 1j * np.sin(arg)


def standard_map(theta, p, K, n_kicks):
    """Iterate P <- P + K sin(theta), theta <- theta + P (mod 2 pi) in place.

    Returns the ensemble mean of P**2 after each kick.
    """
    twopi = 2.0 * np.pi
    out = np.empty(n_kicks)
    for n in range(n_kicks):
        p += K * np.sin(theta)
        theta += p
        np.mod(theta, twopi, out=theta)
        out[n] = np.mean(p * p)
    return out


def comb_power(times, strengths, widths, freqs):
    """|sum_k s_k exp(2 pi i f t_k) sinc(pi f tau_k)|**2 for every f."""
    f = freqs[:, None]
    env = np.sinc(f * widths[None, :])
    ph = 2.0 * np.pi * f * times[None, :]
    re = (strengths * env * np.cos(ph)).sum(axis=1)
    im = (strengths * env * np.sin(ph)).sum(axis=1)
    return re * re + im * im
