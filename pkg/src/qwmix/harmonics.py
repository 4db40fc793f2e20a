"""Harmonic amplitude container and periodic projection quadrature.

A mixing spectrum is a set of complex amplitudes ``A_k`` of the probe
coherence at frequencies ``omega_d + k * delta_omega``, k odd.  The
projection over one period uses composite Simpson weights on a uniform
inclusive grid (even number of intervals).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NotPeriodic(ValueError):
    """Input does not span one verified period of the drive difference."""


def simpson_weights(n_points: int, spacing: float) -> np.ndarray:
    """Composite Simpson weights for a uniform inclusive grid."""
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError("Simpson rule needs an odd number of points (even intervals)")
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (spacing / 3.0)


def project_harmonics(taus, values, k_list, delta_omega: float):
    """Simpson projection of a periodic signal onto ``e^{i k dw tau}``.

    ``A_k = (1/T) int_0^T values(tau) e^{-i k dw tau} d tau`` evaluated
    on the inclusive uniform grid ``taus`` spanning exactly one period.
    Returns ``(amplitudes, mean_power)``.
    """
    taus = np.asarray(taus, dtype=float)
    values = np.asarray(values, dtype=complex)
    spacing = taus[1] - taus[0]
    if not np.allclose(np.diff(taus), spacing, rtol=0, atol=1e-9 * abs(spacing)):
        raise ValueError("projection grid must be uniform")
    w = simpson_weights(len(taus), spacing)
    period = taus[-1] - taus[0]
    ks = np.asarray(list(k_list), dtype=int)
    phases = np.exp(-1j * np.outer(ks, delta_omega * taus))
    amps = (phases * (w * values)[None, :]).sum(axis=1) / period
    mean_power = float(np.real(w @ (values * values.conj())) / period)
    return amps, mean_power


@dataclass
class PeakSpectrum:
    """Mixing peak amplitudes of the probe coherence.

    ``peaks`` maps odd harmonic index k to the complex amplitude A_k;
    the physical frequency of peak k is ``omega_d + k * delta_omega``.
    ``residual`` is the mean power left outside the retained harmonics
    (nonnegative by Bessel's inequality, up to quadrature roundoff).
    """

    peaks: dict
    delta_omega: float
    omega_d: float = 0.0
    residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(k % 2 == 0 for k in self.peaks):
            raise ValueError("peak indices must be odd")
        if self.residual < -1e-10:
            raise ValueError(f"projection residual {self.residual:.3e} is negative")
        self.residual = max(self.residual, 0.0)

    def amplitude(self, k: int) -> complex:
        return self.peaks[k]

    def intensity(self, k: int) -> float:
        return abs(self.peaks[k]) ** 2

    def frequency(self, k: int) -> float:
        return self.omega_d + k * self.delta_omega

    def k_values(self):
        return sorted(self.peaks)

    def as_rows(self):
        """(k, frequency, re, im, intensity) rows, ascending in k."""
        return [
            (k, self.frequency(k), self.peaks[k].real, self.peaks[k].imag, self.intensity(k))
            for k in self.k_values()
        ]


def odd_k_range(k_max: int):
    """Odd harmonic indices from -k_max to +k_max inclusive."""
    k_max = int(k_max)
    if k_max < 1 or k_max % 2 == 0:
        raise ValueError("k_max must be a positive odd integer")
    return list(range(-k_max, k_max + 1, 2))
