"""Exact density-matrix reference for the source and the full cascade.

Everything the moment system claims is checked here against dense
Liouvillian evolution: a 2x2 generator for the driven source and the
4x4 cascaded generator with unidirectional coupling

    L_casc rho ~ -alpha ([sp_pr, sm_s rho] + [rho sp_s, sm_pr]).

Density matrices are vectorized row-major; ``vec(A rho B) =
kron(A, B.T) vec(rho)``.  Time-dependent drive phases enter through
the split ``L(tau) = L_static + e^{+i dw tau} L_plus + e^{-i dw tau}
L_minus`` and are evaluated at every integrator stage time (no Floquet
decomposition; the phases are slow).

Two-time source correlators use the quantum regression theorem:
``<A(t+tau) B(t)> = Tr(A e^{L tau}[B rho_ss])``, evolved by
eigendecomposition of the time-independent source generator.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import _rk, cascade
from .params import FULL, probe_drive_coeff, validate
from .source import DressedSource, dressed_coefficients

SIGMA_M = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)   # |g><e|
SIGMA_P = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)  # sigma_z|e> = +|e>
SIGMA_X = SIGMA_P + SIGMA_M
IDENT2 = np.eye(2, dtype=complex)

TRACE_TOL = 1e-9
HERM_TOL = 1e-10
EIG_FLOOR = -1e-7
POSITIVITY_ABORT = -1e-5


class PositivityViolation(RuntimeError):
    """Density matrix developed a significantly negative eigenvalue."""


class SecularMismatch(UserWarning):
    """Triplet peaks not well separated; secular formulas are unreliable."""


def _sop_mul(a, b):
    """Superoperator of rho -> a @ rho @ b (row-major vec)."""
    return np.kron(a, b.T)


def commutator_sop(h):
    """Superoperator of rho -> -i [h, rho]."""
    n = h.shape[0]
    eye = np.eye(n, dtype=complex)
    return -1j * (_sop_mul(h, eye) - _sop_mul(eye, h))


def dissipator_sop(lop, rate):
    """Superoperator of the radiative dissipator with jump ``lop``."""
    n = lop.shape[0]
    eye = np.eye(n, dtype=complex)
    ldl = lop.conj().T @ lop
    return rate * (_sop_mul(lop, lop.conj().T) - 0.5 * _sop_mul(ldl, eye) - 0.5 * _sop_mul(eye, ldl))


@dataclass(frozen=True)
class Liouvillian:
    """Generator acting on a vectorized density matrix.

    ``at(tau)`` assembles ``static + e^{+i dw tau} plus + e^{-i dw tau}
    minus``; the two rotating blocks vanish for time-independent
    generators.  Trace preservation holds blockwise: ``vec(I)^T L = 0``.
    """

    dim: int
    static: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    delta_omega: float = 0.0

    def at(self, tau: float) -> np.ndarray:
        if self.delta_omega == 0.0:
            return self.static + self.plus + self.minus
        ph = np.exp(1j * self.delta_omega * tau)
        return self.static + ph * self.plus + np.conj(ph) * self.minus

    def trace_row(self) -> np.ndarray:
        """vec(I)^T applied to each block, stacked; all зero when trace-preserving."""
        eye = np.eye(self.dim, dtype=complex).ravel()
        return np.stack([eye @ self.static, eye @ self.plus, eye @ self.minus])


def build_source_liouvillian(params, frame: str = "source") -> Liouvillian:
    """Generator of the driven source qubit.

    ``frame="source"`` (default): the frame of the source drive, where
    the generator is time independent, with Hamiltonian
    ``-(delta sigma_z + omega_s sigma_x)`` and radiative decay gamma_s.
    ``frame="midpoint"``: the cascade frame, where the drive rotates as
    ``exp(-i delta_omega tau)`` and no detuning term appears (both
    transition frequencies sit at the frame frequency).
    """
    params = validate(params)
    gp = params.gamma_pr
    diss = dissipator_sop(SIGMA_M, params.gamma_s / gp)
    if frame == "source":
        h = -(params.delta * SIGMA_Z + params.omega_rabi_s * SIGMA_X) / gp
        return Liouvillian(dim=2, static=commutator_sop(h) + diss,
                           plus=np.zeros((4, 4), complex), minus=np.zeros((4, 4), complex))
    if frame == "midpoint":
        os_ = params.omega_rabi_s / gp
        h_plus = 1j * os_ * SIGMA_M       # carries e^{+i dw tau}
        h_minus = -1j * os_ * SIGMA_P     # carries e^{-i dw tau}
        return Liouvillian(
            dim=2, static=diss,
            plus=commutator_sop(h_plus), minus=commutator_sop(h_minus),
            delta_omega=params.delta_omega / gp,
        )
    raise ValueError(f"unknown frame {frame!r}")


def build_cascade_liouvillian(params) -> Liouvillian:
    """Generator of the cascaded pair in the drive-midpoint frame.

    Tensor order is source (x) probe.  The probe drive phase is
    ``e^{+i delta_omega tau}`` and the source's ``e^{-i delta_omega
    tau}``, matching the moment equations, with the probe drive
    coefficient under the full convention unless overridden.  The
    cascade term transmits a fraction mu of the source emission into
    the probe's input and nothing back.
    """
    params = validate(params)
    gp = params.gamma_pr
    sm_s, sp_s = np.kron(SIGMA_M, IDENT2), np.kron(SIGMA_P, IDENT2)
    sm_p, sp_p = np.kron(IDENT2, SIGMA_M), np.kron(IDENT2, SIGMA_P)
    eye4 = np.eye(4, dtype=complex)

    static = dissipator_sop(sm_s, params.gamma_s / gp) + dissipator_sop(sm_p, 1.0)
    alpha = params.mu * math.sqrt(params.gamma_s / gp)
    # -alpha ([sp_pr, sm_s rho] + [rho sp_s, sm_pr])
    casc = -alpha * (
        _sop_mul(sp_p @ sm_s, eye4) - _sop_mul(sm_s, sp_p)
        + _sop_mul(eye4, sp_s @ sm_p) - _sop_mul(sm_p, sp_s)
    )
    static = static + casc

    op = probe_drive_coeff(params, default_convention=FULL) / gp
    os_ = params.omega_rabi_s / gp
    h_plus = -1j * op * sp_p + 1j * os_ * sm_s
    h_minus = h_plus.conj().T
    return Liouvillian(
        dim=4, static=static,
        plus=commutator_sop(h_plus), minus=commutator_sop(h_minus),
        delta_omega=params.delta_omega / gp,
    )


@njit(cache=True)
def _liouville_kernel(tau, y, p, out):
    n = y.shape[0]
    dw = p[0].real
    ep = np.exp(1j * dw * tau)
    em = np.conj(ep)
    nn = n * n
    b1 = 1
    b2 = 1 + nn
    b3 = 1 + 2 * nn
    for i in range(n):
        acc = 0j
        row = i * n
        for j in range(n):
            acc += (p[b1 + row + j] + ep * p[b2 + row + j] + em * p[b3 + row + j]) * y[j]
        out[i] = acc


_LIOUVILLE_DRIVER = _rk.make_driver(_liouville_kernel)


def _pack_liouvillian(liou: Liouvillian) -> np.ndarray:
    return np.concatenate([
        np.array([liou.delta_omega], dtype=complex),
        liou.static.ravel(), liou.plus.ravel(), liou.minus.ravel(),
    ]).astype(np.complex128)


def check_density(rho, trace_tol=TRACE_TOL, herm_tol=HERM_TOL, eig_floor=EIG_FLOOR):
    """Raise ValueError unless rho is a valid 2x2 or 4x4 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4):
        raise ValueError("expected a dense 2x2 or 4x4 matrix")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ValueError(f"trace deviates from 1 by {abs(np.trace(rho) - 1.0):.2e}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("matrix is not Hermitian within tolerance")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < eig_floor:
        raise ValueError("matrix has a negative eigenvalue beyond tolerance")
    return rho


@dataclass
class DensityTrajectory:
    """Sampled density-matrix evolution with invariant diagnostics."""

    taus: np.ndarray
    rhos: np.ndarray
    meta: dict = field(default_factory=dict)


def evolve_density(
    rho0,
    tau_span,
    params,
    rtol: float = _rk.DEFAULT_RTOL,
    atol: float = _rk.DEFAULT_ATOL,
    sample_times=None,
    n_samples: int | None = None,
    liouvillian: Liouvillian | None = None,
) -> DensityTrajectory:
    """Evolve a density matrix under the matching generator.

    2x2 input evolves under the midpoint-frame source generator (the
    cascade's source corner); 4x4 under the full cascade generator.  A
    prebuilt ``liouvillian`` overrides that choice.  Trace and
    Hermiticity are monitored at every sample; positivity is checked by
    eigenvalues, not enforced, so integrator bugs surface instead of
    being projected away.

    Raises
    ------
    PositivityViolation
        If the smallest eigenvalue drops below -1e-5 at any sample.
    """
    params = validate(params)
    rho0 = check_density(rho0)
    dim = rho0.shape[0]
    if liouvillian is None:
        liouvillian = (
            build_cascade_liouvillian(params) if dim == 4
            else build_source_liouvillian(params, frame="midpoint")
        )
    if liouvillian.dim != dim:
        raise ValueError("liouvillian dimension does not match the state")

    t0, t1 = float(tau_span[0]), float(tau_span[1])
    if sample_times is None:
        n = 200 if n_samples is None else int(n_samples)
        sample_times = np.linspace(t0, t1, n + 1)
    sample_times = np.ascontiguousarray(sample_times, dtype=float)

    p = _pack_liouvillian(liouvillian)
    y0 = np.ascontiguousarray(rho0.ravel(), dtype=np.complex128)
    _, samples, status, n_steps, n_rej = _LIOUVILLE_DRIVER(
        y0, t0, t1, p, rtol, atol, sample_times, -1.0, np.inf, _rk.MAX_STEPS
    )
    _rk.raise_for_status(status, context="density evolution")

    rhos = samples.reshape(-1, dim, dim)
    herm_dev = float(np.max(np.abs(rhos - rhos.conj().transpose(0, 2, 1))))
    trace_dev = float(np.max(np.abs(np.trace(rhos, axis1=1, axis2=2) - 1.0)))
    min_eig = float(min(
        np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0] for r in rhos
    ))
    if min_eig < POSITIVITY_ABORT:
        raise PositivityViolation(
            f"min eigenvalue {min_eig:.2e}; integrator tolerance too loose"
        )
    return DensityTrajectory(
        taus=sample_times, rhos=rhos,
        meta={
            "rtol": rtol, "atol": atol, "n_steps": int(n_steps), "n_rejected": int(n_rej),
            "max_trace_dev": trace_dev, "max_herm_dev": herm_dev, "min_eigenvalue": min_eig,
        },
    )


def _two_qubit_ops():
    ops = [None] * cascade.N_MOMENTS
    ops[cascade.SM_S] = np.kron(SIGMA_M, IDENT2)
    ops[cascade.Z_S] = np.kron(SIGMA_Z, IDENT2)
    ops[cascade.SM_PR] = np.kron(IDENT2, SIGMA_M)
    ops[cascade.Z_PR] = np.kron(IDENT2, SIGMA_Z)
    ops[cascade.SMS_SPPR] = np.kron(SIGMA_M, SIGMA_P)
    ops[cascade.SPS_SPPR] = np.kron(SIGMA_P, SIGMA_P)
    ops[cascade.SPS_ZPR] = np.kron(SIGMA_P, SIGMA_Z)
    ops[cascade.ZS_ZPR] = np.kron(SIGMA_Z, SIGMA_Z)
    ops[cascade.ZS_SMPR] = np.kron(SIGMA_Z, SIGMA_M)
    ops[cascade.SMS_SMPR] = np.kron(SIGMA_M, SIGMA_M)
    ops[cascade.SMS_ZPR] = np.kron(SIGMA_M, SIGMA_Z)
    ops[cascade.SPS_SMPR] = np.kron(SIGMA_P, SIGMA_M)
    ops[cascade.ZS_SPPR] = np.kron(SIGMA_Z, SIGMA_P)
    ops[cascade.SP_S] = np.kron(SIGMA_P, IDENT2)
    ops[cascade.SP_PR] = np.kron(IDENT2, SIGMA_P)
    return np.stack(ops)


_OPS15 = _two_qubit_ops()
_OPS3 = np.stack([SIGMA_M, SIGMA_Z, SIGMA_P])


def moments_from_density(rho) -> np.ndarray:
    """Project a density matrix onto the moment basis.

    4x4 input returns the 15-slot vector in :mod:`qwmix.cascade` order;
    2x2 input returns the source triple ``[<sm>, <sz>, <sp>]``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape == (4, 4):
        return np.einsum("kij,ji->k", _OPS15, rho)
    if rho.shape == (2, 2):
        return np.einsum("kij,ji->k", _OPS3, rho)
    raise ValueError("expected a 2x2 or 4x4 density matrix")


def ground_density(dim: int = 4) -> np.ndarray:
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def apply_liouvillian(liou: Liouvillian, rho, tau: float = 0.0) -> np.ndarray:
    """Generator action L(tau) rho as a matrix (not necessarily a state)."""
    rho = np.asarray(rho, dtype=complex)
    return (liou.at(tau) @ rho.ravel()).reshape(rho.shape)


def dressed_operators(d: DressedSource):
    """Matrices of the dressed emission components in the bare basis.

    Returns the lowering triple (R, F, T): ``sigma_R^- = c s (|2><2| -
    |1><1|)``, ``sigma_F^- = c^2 |1><2|``, ``sigma_T^- = -s^2 |2><1|``;
    they sum to sigma^-.
    """
    one = np.array([d.c, -d.s], dtype=complex)    # |1> = c|g> - s|e>
    two = np.array([d.s, d.c], dtype=complex)     # |2> = s|g> + c|e>
    p11 = np.outer(one, one.conj())
    p22 = np.outer(two, two.conj())
    r_minus = d.c * d.s * (p22 - p11)
    f_minus = d.c**2 * np.outer(one, two.conj())
    t_minus = -d.s**2 * np.outer(two, one.conj())
    return r_minus, f_minus, t_minus


def secular_source_liouvillian(params, d: DressedSource | None = None) -> Liouvillian:
    """Dressed-basis generator with the energy-block (secular) dissipator.

    Coherent part ``-(W/2)(|1><1| - |2><2|)`` reproduces the dressed
    coherence rate ``gamma' -/+ i W``; the dissipator sums the three
    dressed jump channels at rate gamma_s.  Under this generator the
    pair correlators forbidden by the pair-energy constraint vanish
    identically.
    """
    params = validate(params)
    if d is None:
        d = dressed_coefficients(params.delta, params.omega_rabi_s, params.gamma_s)
    gp = params.gamma_pr
    r_m, f_m, t_m = dressed_operators(d)
    one = np.array([d.c, -d.s], dtype=complex)
    two = np.array([d.s, d.c], dtype=complex)
    h = -(d.omega_prime / 2.0) * (np.outer(one, one.conj()) - np.outer(two, two.conj())) / gp
    static = commutator_sop(h)
    for jump in (r_m, f_m, t_m):
        static = static + dissipator_sop(jump, d.gamma_s / gp)
    return Liouvillian(dim=2, static=static,
                       plus=np.zeros((4, 4), complex), minus=np.zeros((4, 4), complex))


def steady_state(liou: Liouvillian) -> np.ndarray:
    """Stationary density matrix from the generator's null space."""
    if liou.delta_omega != 0.0:
        raise ValueError("steady_state requires a time-independent generator")
    w, v = np.linalg.eig(liou.at(0.0))
    rho = v[:, np.argmin(np.abs(w))].reshape(liou.dim, liou.dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho)
    return rho


REGRESSION_KINDS = (
    "normal_R", "normal_F", "normal_T",
    "anomalous_RR", "anomalous_FT",
    "anomalous_RF", "anomalous_RT", "anomalous_FF", "anomalous_TT",
)


def regression_correlator(params, kind: str, tau_grid, generator: str = "exact") -> np.ndarray:
    """Two-time correlator of the driven source in its steady state.

    ``normal_X`` evaluates ``gamma_s <sigma_X^+(t+tau) sigma_X^-(t)>``
    and ``anomalous_XY`` the pair correlator ``gamma_s <sigma_X^+(t+tau)
    sigma_Y^+(t)>``, via the quantum regression theorem with the steady
    state as anchor.  ``generator="exact"`` uses the full radiative
    Lindbladian (non-secular: small gamma_s/W corrections survive in
    the forbidden pairings); ``"secular"`` uses the dressed energy-block
    generator under which those pairings vanish identically.

    Returns the complex correlator on ``tau_grid``.
    """
    params = validate(params)
    if kind not in REGRESSION_KINDS:
        raise ValueError(f"unknown correlator kind {kind!r}")
    d = dressed_coefficients(params.delta, params.omega_rabi_s, params.gamma_s)
    if params.gamma_s / d.omega_prime > 0.1:
        warnings.warn(
            f"gamma_s/W = {params.gamma_s / d.omega_prime:.3g} > 0.1: triplet peaks "
            "overlap and the secular line formulas degrade",
            SecularMismatch, stacklevel=2,
        )
    if generator == "exact":
        liou = build_source_liouvillian(params, frame="source")
    elif generator == "secular":
        liou = secular_source_liouvillian(params, d)
    else:
        raise ValueError(f"unknown generator {generator!r}")

    r_m, f_m, t_m = dressed_operators(d)
    by_label = {"R": r_m, "F": f_m, "T": t_m}
    rho_ss = steady_state(liou)

    if kind.startswith("normal_"):
        label = kind[-1]
        a_op = by_label[label].conj().T
        b_mat = by_label[label] @ rho_ss
    else:
        first, second = kind[-2], kind[-1]
        a_op = by_label[first].conj().T
        b_mat = by_label[second].conj().T @ rho_ss

    lam, v = np.linalg.eig(liou.at(0.0))
    w = np.linalg.solve(v, b_mat.ravel())
    u = a_op.T.ravel() @ v
    taus = np.asarray(tau_grid, dtype=float)
    # Clip tiny positive real parts from roundoff so long delays stay bounded.
    lam = np.where(lam.real > 0, 1j * lam.imag, lam)
    scale = params.gamma_s / params.gamma_pr
    return scale * ((u * w) @ np.exp(np.outer(lam, taus)))


def correlator_spectrum(tau_grid, values, omega_grid) -> np.ndarray:
    """One-sided Fourier transform ``2 Re int_0^inf C(tau) e^{i w tau}``.

    Plain trapezoid on the given grid; the grid must resolve the
    correlator's oscillation and cover its decay.
    """
    taus = np.asarray(tau_grid, dtype=float)
    vals = np.asarray(values, dtype=complex)
    omegas = np.asarray(omega_grid, dtype=float)
    phases = np.exp(1j * np.outer(omegas, taus))
    return 2.0 * np.real(np.trapezoid(phases * vals[None, :], taus, axis=1))
