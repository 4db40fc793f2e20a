"""Effective model of the probe: coherent tone plus squeezed white noise.

When the source is driven hard on resonance, its elastic line dies out
and the probe sees (i) the external coherent tone and (ii) broadband
pair-correlated radiation characterized by the white-noise parameters
(M, N).  In the frame rotating at the midpoint of the two drive
frequencies the Bloch equations read

    d<sm>/dtau = -gamma (N + 1/2) <sm> - i e E(tau) <sz>
                 - gamma M conj(E(tau))^2 <sp>
    d<sz>/dtau = -gamma (<sz> + 1) - 2 N gamma <sz>
                 + 2 i e (<sp> E(tau) - <sm> conj(E(tau)))

with ``E(tau) = exp(+i delta_omega tau)`` and ``e`` the probe drive
coefficient (module default: half convention, ``e = omega_rabi_pr/2``).
The drive term couples to <sz> and the damping carries an explicit
minus sign; both follow from the laboratory-frame equations.

The M term converts <sp> harmonics into <sm> harmonics two steps down,
so the comb of ``<sm>`` lives exactly on k in {1, -3, 5, -7, ...}: the
complementary odd set {-1, 3, -5, ...} requires an odd number of pair
photons and is identically absent here.  Two solvers are provided: a
frozen-phase stationary solve (valid for delta_omega << gamma_pr) and
the weak-drive analytic series.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .harmonics import PeakSpectrum, odd_k_range, project_harmonics
from .params import HALF, probe_drive_coeff, require_periodic, validate

#: Phase-grid size of the stationary solve; doubling it moves amplitudes
#: by < 1e-10 on these smooth systems.
N_PHI = 256
STATIONARY_PHASE_WARN = 0.2


class SingularSystem(RuntimeError):
    """The frozen-phase linear system is degenerate."""


class NonHyperbolic(ValueError):
    """(2N+1)^2 <= 4|M|^2: the weak-drive expansion parameter is undefined."""


@dataclass(frozen=True)
class BlochState:
    """Probe coherence, inversion, and the dimensionless time."""

    sigma_minus: complex
    sigma_z: float
    tau: float = 0.0


@dataclass(frozen=True)
class SeriesCoefficients:
    """Weak-drive expansion parameters.

    ``f = 2 e / (gamma_pr sqrt((2N+1)^2 - 4|M|^2))`` (the printed form
    with the half-convention coefficient ``e = omega_pr/2``) and
    ``m = 2 M / (2N+1)``.
    """

    f: float
    m: complex


def effective_rhs(state: BlochState, params, m_param, n_param):
    """Time derivatives (d<sm>/dtau, d<sz>/dtau) of the effective model."""
    params = validate(params)
    g = params.gamma_pr
    e = probe_drive_coeff(params, default_convention=HALF)
    ph = np.exp(1j * params.delta_omega * state.tau / g)
    sm = complex(state.sigma_minus)
    sp = np.conj(sm)
    sz = state.sigma_z
    d_sm = (
        -g * (n_param + 0.5) * sm
        - 1j * e * ph * sz
        - g * m_param * np.conj(ph) ** 2 * sp
    )
    d_sz = (
        -g * (sz + 1.0)
        - 2.0 * n_param * g * sz
        + 2j * e * (sp * ph - sm * np.conj(ph))
    )
    return d_sm, complex(d_sz)


def series_coefficients(params, m_param, n_param, convention: str = HALF) -> SeriesCoefficients:
    e = probe_drive_coeff(params, default_convention=convention)
    disc = (2.0 * n_param + 1.0) ** 2 - 4.0 * abs(m_param) ** 2
    if disc <= 0.0:
        raise NonHyperbolic(
            f"(2N+1)^2 - 4|M|^2 = {disc:.3g} <= 0: no weak-drive expansion"
        )
    f = 2.0 * e / (params.gamma_pr * math.sqrt(disc))
    m = 2.0 * m_param / (2.0 * n_param + 1.0)
    return SeriesCoefficients(f=f, m=m)


def peak_series(params, m_param=1.0, n_param=1.0, order: int = 4,
                convention: str = HALF) -> PeakSpectrum:
    """Weak-drive analytic peak amplitudes, truncated at ``order`` terms.

    The retained comb is k = +1, -3, +5, -7, ... with amplitudes

        A_{+1} = P f,   A_{-3} = P f m,
        A_{+5} = -P f^3 conj(m),   A_{-7} = -P f^3 m^2,   ...

    where ``P = i f gamma_pr / (2 e)``; term p >= 2 continues the
    pattern ``A_{+(4p+1)} = P (-1)^p f^{2p+1} conj(m)^p`` and
    ``A_{-(4p+3)} = P (-1)^p f^{2p+1} m^{p+1}``.  Useful when
    ``omega_rabi_pr << gamma_pr`` (a warning fires otherwise).
    """
    params = validate(params)
    require_periodic(params)
    if not (0.0 < params.omega_rabi_pr / params.gamma_pr <= 0.2):
        warnings.warn(
            "weak-drive series requested outside 0 < omega_rabi_pr/gamma_pr <= 0.2",
            stacklevel=2,
        )
    if order < 1:
        raise ValueError("order must be >= 1")
    sc = series_coefficients(params, m_param, n_param, convention)
    e = probe_drive_coeff(params, default_convention=convention)
    prefactor = 1j * sc.f * params.gamma_pr / (2.0 * e)

    peaks = {}
    for term in range(order):
        p, odd_side = divmod(term, 2)
        coeff = prefactor * (-1.0) ** p * sc.f ** (2 * p + 1)
        if odd_side == 0:
            peaks[4 * p + 1] = complex(coeff * np.conj(sc.m) ** p)
        else:
            peaks[-(4 * p + 3)] = complex(coeff * sc.m ** (p + 1))
    return PeakSpectrum(
        peaks=dict(sorted(peaks.items())),
        delta_omega=params.delta_omega,
        meta={"f": sc.f, "m": sc.m, "order": order, "convention": params.rabi_convention or convention},
    )


def stationary_solve(params, m_param=1.0, n_param=1.0, k_max: int = 7,
                     n_phi: int = N_PHI, convention: str = HALF) -> PeakSpectrum:
    """Frozen-phase stationary solution, projected onto the mixing comb.

    Treats ``phi = delta_omega tau`` as a parameter (slow on the probe's
    1/gamma_pr response time): at each phi on a uniform grid the linear
    3x3 system for (<sm>, <sp>, <sz>) is solved, and the phi dependence
    is Simpson-projected onto ``e^{i k phi}`` for odd ``|k| <= k_max``.
    Even harmonics vanish by the phi -> phi + pi antisymmetry of the
    coherence; the odd set {-1, +3, -5, ...} vanishes by pair-photon
    counting.  Warns when delta_omega is not small against gamma_pr.

    Raises
    ------
    SingularSystem
        If the frozen linear system is singular (e.g. ``(2N+1)^2 =
        4|M|^2`` at zero drive).
    """
    params = validate(params)
    require_periodic(params)
    if abs(params.delta_omega) > STATIONARY_PHASE_WARN * params.gamma_pr:
        warnings.warn(
            "stationary approximation assumes delta_omega << gamma_pr; "
            f"got ratio {abs(params.delta_omega) / params.gamma_pr:.3g}",
            stacklevel=2,
        )
    if n_phi < 8 or n_phi % 2:
        raise ValueError("n_phi must be an even integer >= 8")

    g = params.gamma_pr
    e = probe_drive_coeff(params, default_convention=convention)
    # Inclusive grid over one full phase turn; endpoint duplicates the
    # start for the Simpson weights.
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi + 1)
    ep = np.exp(1j * phi)

    a = np.zeros((phi.size, 3, 3), dtype=complex)
    a[:, 0, 0] = g * (n_param + 0.5)
    a[:, 0, 1] = g * m_param * np.conj(ep) ** 2
    a[:, 0, 2] = 1j * e * ep
    a[:, 1, 0] = g * np.conj(m_param) * ep**2
    a[:, 1, 1] = g * (n_param + 0.5)
    a[:, 1, 2] = -1j * e * np.conj(ep)
    a[:, 2, 0] = 2j * e * np.conj(ep)
    a[:, 2, 1] = -2j * e * ep
    a[:, 2, 2] = g * (2.0 * n_param + 1.0)
    b = np.zeros((phi.size, 3), dtype=complex)
    b[:, 2] = -g

    try:
        sol = np.linalg.solve(a, b[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"frozen-phase system is singular: {exc}") from exc

    sm = sol[:, 0]
    ks = odd_k_range(k_max)
    amps, mean_power = project_harmonics(phi, sm, ks, 1.0)
    residual = mean_power - float(np.sum(np.abs(amps) ** 2))
    return PeakSpectrum(
        peaks={k: complex(v) for k, v in zip(ks, amps)},
        delta_omega=params.delta_omega,
        residual=residual,
        meta={
            "m_param": m_param, "n_param": n_param, "n_phi": n_phi,
            "mean_power": mean_power, "convention": params.rabi_convention or convention,
        },
    )
