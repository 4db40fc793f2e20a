"""Physical parameters and the shared dimensionless conventions.

Every rate and drive amplitude is expressed in units of the probe decay
rate ``gamma_pr``, and time is dimensionless (``tau = gamma_pr * t``).
This removes unit bookkeeping from the dynamics modules: formulas carry
over by substituting ratios.

Two Rabi factor conventions coexist in the literature for the probe
drive term: ``"half"`` applies a coefficient ``omega_rabi_pr / 2`` and
``"full"`` applies ``omega_rabi_pr``.  Each dynamics module documents
its default at the call site; ``rabi_convention`` overrides both when
set.  The source drive always uses the full coefficient (the saturation
law ``-1/(1 + 8 Omega_s^2/gamma_s^2)`` pins it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

HALF = "half"
FULL = "full"

# Regime-flag thresholds.  Artifact choices: they gate warnings only,
# never behavior.
STRONG_SOURCE_RATIO = 10.0
WEAK_PROBE_RATIO = 0.2
FILTER_RATIO = 10.0

FLAG_STRONG_SOURCE = "strong_source_drive"
FLAG_WEAK_PROBE = "weak_probe_drive"
FLAG_NARROW_FILTER = "narrow_filter"
FLAG_WIDE_FILTER = "wide_filter"


class InvalidParam(ValueError):
    """Raised when a physical parameter fails validation."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


_FIELDS = (
    "gamma_s",
    "gamma_pr",
    "omega_rabi_s",
    "omega_rabi_pr",
    "delta",
    "delta_omega",
    "mu",
    "rabi_convention",
)


@dataclass(frozen=True)
class SystemParams:
    """Rates and drive amplitudes of the cascaded source/probe pair.

    Attributes
    ----------
    gamma_s : float
        Source radiative decay rate (units of gamma_pr).
    gamma_pr : float
        Probe radiative decay rate; 1 by convention, kept explicit so
        formulas read like their textbook form.
    omega_rabi_s : float
        Source Rabi drive amplitude Omega_s.
    omega_rabi_pr : float
        Probe coherent drive amplitude Omega_pr.
    delta : float
        Source drive detuning Delta = omega_s - omega_0 (used by the
        standalone source analytics; the cascade frame fixes both
        transition frequencies at the drives' midpoint).
    delta_omega : float
        Half the probe-source drive frequency difference.  The mixing
        comb lives at odd multiples of this; the period is 2*pi/delta_omega.
    mu : float
        Fraction of the source emission reaching the probe, in [0, 1].
    rabi_convention : str or None
        "half", "full", or None to accept each module's documented
        default for the probe drive factor.
    """

    gamma_s: float = 1.0
    gamma_pr: float = 1.0
    omega_rabi_s: float = 0.0
    omega_rabi_pr: float = 0.0
    delta: float = 0.0
    delta_omega: float = 0.0
    mu: float = 1.0
    rabi_convention: str | None = None


@dataclass(frozen=True)
class ValidatedParams:
    """`SystemParams` that passed :func:`validate`, plus regime flags.

    Immutable after construction; safe to share across workers.
    """

    gamma_s: float
    gamma_pr: float
    omega_rabi_s: float
    omega_rabi_pr: float
    delta: float
    delta_omega: float
    mu: float
    rabi_convention: str | None
    flags: frozenset

    def replace(self, **kwargs) -> "ValidatedParams":
        """Return a revalidated copy with some fields changed."""
        base = {k: getattr(self, k) for k in _FIELDS}
        base.update(kwargs)
        return validate(SystemParams(**base))

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in _FIELDS}
        return d


def _require_finite(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise InvalidParam(name, f"expected a real number, got {value!r}")
    if not math.isfinite(value):
        raise InvalidParam(name, f"must be finite, got {value!r}")


def validate(params) -> ValidatedParams:
    """Validate parameters and attach regime flags.

    Idempotent: feeding the result back returns an equal object.  The
    flags mark where the analytic formulas are trustworthy:

    * ``strong_source_drive``  Omega_s/gamma_s >= 10
    * ``weak_probe_drive``     0 < Omega_pr/gamma_pr <= 0.2
    * ``narrow_filter``        gamma_s/gamma_pr >= 10
    * ``wide_filter``          gamma_pr/gamma_s >= 10

    Raises
    ------
    InvalidParam
        For non-finite fields, non-positive decay rates, mu outside
        [0, 1], or an unknown ``rabi_convention``.
    """
    if isinstance(params, ValidatedParams):
        params = SystemParams(**params.as_dict())

    for name in _FIELDS:
        if name == "rabi_convention":
            continue
        _require_finite(name, getattr(params, name))

    if params.gamma_s <= 0:
        raise InvalidParam("gamma_s", f"decay rate must be positive, got {params.gamma_s}")
    if params.gamma_pr <= 0:
        raise InvalidParam("gamma_pr", f"decay rate must be positive, got {params.gamma_pr}")
    if not 0.0 <= params.mu <= 1.0:
        raise InvalidParam("mu", f"transmission fraction must lie in [0, 1], got {params.mu}")
    if params.rabi_convention not in (None, HALF, FULL):
        raise InvalidParam("rabi_convention", f"expected 'half', 'full' or None, got {params.rabi_convention!r}")

    flags = set()
    if params.omega_rabi_s / params.gamma_s >= STRONG_SOURCE_RATIO:
        flags.add(FLAG_STRONG_SOURCE)
    if 0.0 < params.omega_rabi_pr / params.gamma_pr <= WEAK_PROBE_RATIO:
        flags.add(FLAG_WEAK_PROBE)
    if params.gamma_s / params.gamma_pr >= FILTER_RATIO:
        flags.add(FLAG_NARROW_FILTER)
    if params.gamma_pr / params.gamma_s >= FILTER_RATIO:
        flags.add(FLAG_WIDE_FILTER)

    return ValidatedParams(flags=frozenset(flags), **asdict(params))


def require_periodic(params) -> float:
    """Return the drive-difference period 2*pi/delta_omega.

    Spectral extraction needs a finite period; delta_omega = 0 is legal
    for plain time integration but not here.
    """
    if params.delta_omega == 0.0:
        raise InvalidParam("delta_omega", "must be nonzero when spectral extraction is requested")
    return 2.0 * math.pi / abs(params.delta_omega)


def probe_drive_coeff(params, default_convention: str) -> float:
    """Effective probe drive coefficient under the active convention."""
    convention = params.rabi_convention or default_convention
    if convention == HALF:
        return 0.5 * params.omega_rabi_pr
    return params.omega_rabi_pr
