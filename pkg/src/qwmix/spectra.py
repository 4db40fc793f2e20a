"""Peak extraction, analytic-vs-numeric comparison, and drive sweeps.

The probe coherence in the periodic steady state is projected onto the
odd mixing comb; the resulting amplitudes are compared against the
effective squeezed-noise model, or mapped over a grid of source/probe
drive strengths.  Peak intensity is defined as |A_k|^2 of <sigma_-^pr>;
the emitted-wave prefactor (a constant modulus factor) is omitted, so
only relative peak structure is meaningful, which is what the
comparisons use.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cascade
from .effective import stationary_solve
from .harmonics import NotPeriodic, PeakSpectrum, odd_k_range, project_harmonics
from .params import (
    FLAG_NARROW_FILTER,
    FLAG_STRONG_SOURCE,
    FULL,
    require_periodic,
    validate,
)

#: Peaks that survive when the source emits only photon pairs: one pair
#: feeds the comb two harmonics at a time, so k = 1 (mod 4).
RETAINED_K = (1, -3, 5, -7, 9, -11, 13, -15)


class SweepFailed(RuntimeError):
    """More than half of the sweep grid failed to converge."""


def _resolve_delta_omega(traj):
    dw = traj.meta.get("params", {}).get("delta_omega")
    if dw:
        return dw
    return 2.0 * np.pi / traj.period


def harmonic_project(traj, k_list=None) -> PeakSpectrum:
    """Project one steady period of <sigma_-^pr> onto the mixing comb.

    ``A_k = (1/T) int <sm_pr>(tau) e^{-i k dw tau} d tau`` by composite
    Simpson on the trajectory's uniform samples (>= 512 intervals).
    The residual is the mean power outside the retained harmonics.

    Raises
    ------
    NotPeriodic
        If the trajectory is not flagged as a steady single period.
    """
    if not getattr(traj, "steady", False) or traj.period is None:
        raise NotPeriodic("trajectory must be one steady period (steady flag set)")
    dw = _resolve_delta_omega(traj)
    span = traj.taus[-1] - traj.taus[0]
    if abs(span - traj.period) > 1e-9 * traj.period:
        raise NotPeriodic("trajectory span does not equal one period")
    if len(traj.taus) < 513:
        raise ValueError("need at least 512 uniform intervals for projection")
    if k_list is None:
        k_list = odd_k_range(7)
    sm = traj.states[:, cascade.SM_PR]
    amps, mean_power = project_harmonics(traj.taus, sm, k_list, dw)
    residual = mean_power - float(np.sum(np.abs(amps) ** 2))
    return PeakSpectrum(
        peaks={int(k): complex(a) for k, a in zip(k_list, amps)},
        delta_omega=dw,
        residual=residual,
        meta={"mean_power": mean_power, "periodicity_residual": traj.residual},
    )


def even_harmonic_power(traj, k_even_max: int = 8):
    """(power on even harmonics up to |k| <= k_even_max, total mean power)."""
    if not getattr(traj, "steady", False) or traj.period is None:
        raise NotPeriodic("trajectory must be one steady period (steady flag set)")
    dw = _resolve_delta_omega(traj)
    ks = list(range(-k_even_max, k_even_max + 1, 2))
    sm = traj.states[:, cascade.SM_PR]
    amps, mean_power = project_harmonics(traj.taus, sm, ks, dw)
    return float(np.sum(np.abs(amps) ** 2)), mean_power


@dataclass
class CompareResult:
    """Per-peak table of numeric vs analytic amplitudes."""

    k_values: list
    numeric: PeakSpectrum
    analytic: PeakSpectrum
    warnings: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def row(self, k):
        a_num = abs(self.numeric.peaks[k])
        a_ana = abs(self.analytic.peaks[k])
        denom = max(a_ana, 1e-300)
        return {
            "k": k,
            "abs_numeric": a_num,
            "abs_analytic": a_ana,
            "rel_diff": abs(a_num - a_ana) / denom,
            "retained": k in RETAINED_K,
        }

    def rows(self):
        return [self.row(k) for k in self.k_values]

    def max_retained_rel_diff(self) -> float:
        return max(r["rel_diff"] for r in self.rows() if r["retained"])


def compare_spectra(params, k_max: int = 7, numeric_spectrum: PeakSpectrum | None = None,
                    **steady_kwargs) -> CompareResult:
    """Numeric cascade peaks against the effective (M, N) = (1, 1) model.

    The numeric column runs the full cascaded moment system to its
    periodic steady state and projects; the analytic column is the
    frozen-phase solution of the effective model with the resonant text
    values M = N = 1, driven at the same full-convention coefficient as
    the cascade so amplitudes are directly comparable.  When no source
    field reaches the probe (mu = 0 or the source drive off) the probe
    sees vacuum and the analytic column uses M = N = 0.  Validity
    warnings are attached when the strong-source or narrow-filter
    regime flags are absent.
    """
    params = validate(params)
    require_periodic(params)
    notes = []
    if FLAG_STRONG_SOURCE not in params.flags:
        notes.append("source drive is not strong (omega_rabi_s/gamma_s < 10); "
                     "the effective model's elastic-line suppression degrades")
    if FLAG_NARROW_FILTER not in params.flags:
        notes.append("gamma_s/gamma_pr < 10: the white-noise (M, N) picture "
                     "needs the probe linewidth well inside the source line")
    ks = odd_k_range(k_max)
    if numeric_spectrum is None:
        traj = cascade.steady_periodic(params, **steady_kwargs)
        numeric_spectrum = harmonic_project(traj, ks)
    source_feeds_probe = params.mu > 0.0 and params.omega_rabi_s != 0.0
    m_n = (1.0, 1.0) if source_feeds_probe else (0.0, 0.0)
    analytic = stationary_solve(params, m_param=m_n[0], n_param=m_n[1], k_max=k_max,
                                convention=FULL)
    return CompareResult(
        k_values=ks, numeric=numeric_spectrum, analytic=analytic,
        warnings=notes,
        meta={"params": params.as_dict()},
    )


@dataclass
class SweepResult:
    """Per-peak intensity maps over a drive-amplitude grid.

    ``intensities[k][i, j]`` is |A_k|^2 at ``omega_s_ratios[i]``,
    ``omega_pr_ratios[j]``.  Failed grid points carry NaN intensities
    and an entry in ``errors``; they are never interpolated.  Wall-clock
    metadata stays on the in-memory object only, so identical inputs
    serialize to identical bytes.
    """

    omega_s_ratios: np.ndarray
    omega_pr_ratios: np.ndarray
    k_values: list
    intensities: dict
    errors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    _NONDETERMINISTIC_META = ("created", "elapsed_seconds")

    def _clean_meta(self):
        return {k: v for k, v in self.meta.items() if k not in self._NONDETERMINISTIC_META}

    def to_json(self) -> str:
        doc = {
            "axes": {
                "omega_s_over_gamma_s": [float(x) for x in self.omega_s_ratios],
                "omega_pr_over_gamma_pr": [float(x) for x in self.omega_pr_ratios],
            },
            "k_values": list(self.k_values),
            "intensities": {
                str(k): [[float(v) for v in row] for row in self.intensities[k]]
                for k in self.k_values
            },
            "errors": {f"{i},{j}": msg for (i, j), msg in sorted(self.errors.items())},
            "metadata": self._clean_meta(),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self, stream, header_lines=()):
        for line in header_lines:
            stream.write(f"# {line}\n")
        cols = ["omega_s_over_gamma_s", "omega_pr_over_gamma_pr"]
        cols += [f"intensity_k{k:+d}" for k in self.k_values]
        cols.append("error")
        stream.write(",".join(cols) + "\n")
        for i, rs in enumerate(self.omega_s_ratios):
            for j, rp in enumerate(self.omega_pr_ratios):
                cells = [repr(float(rs)), repr(float(rp))]
                cells += [repr(float(self.intensities[k][i, j])) for k in self.k_values]
                cells.append(self.errors.get((i, j), ""))
                stream.write(",".join(cells) + "\n")


def default_sweep_grids(n_s: int = 25, n_pr: int = 25):
    """Log-spaced default grids covering weak to saturating drives."""
    return (
        np.logspace(np.log10(0.1), np.log10(1000.0), n_s),
        np.logspace(np.log10(0.01), np.log10(10.0), n_pr),
    )


def _sweep_point(args):
    base_dict, ratio_s, ratio_pr, ks, steady_kwargs = args
    p = validate_from_dict(base_dict, ratio_s, ratio_pr)
    try:
        traj = cascade.steady_periodic(p, **steady_kwargs)
        spec = harmonic_project(traj, ks)
        return {k: abs(spec.peaks[k]) ** 2 for k in ks}, None
    except (cascade.NotConverged, cascade.StepSizeUnderflow, cascade.NonFinite) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def validate_from_dict(base_dict, ratio_s, ratio_pr):
    from .params import SystemParams

    d = dict(base_dict)
    d["omega_rabi_s"] = ratio_s * d["gamma_s"]
    d["omega_rabi_pr"] = ratio_pr * d["gamma_pr"]
    return validate(SystemParams(**d))


def sweep2d(params_base, omega_s_ratios=None, omega_pr_ratios=None, k_max: int = 7,
            jobs: int = 1, **steady_kwargs) -> SweepResult:
    """Map per-peak intensities over (Omega_s/gamma_s, Omega_pr/gamma_pr).

    Each grid point relaxes the cascade to its periodic steady state
    and projects the comb.  Points run independently (``jobs`` worker
    processes); assembly order is fixed by the grid, so outputs are
    deterministic regardless of parallelism.  Failing points are
    recorded, never interpolated.

    Raises
    ------
    SweepFailed
        If more than half of the grid points fail.
    """
    params_base = validate(params_base)
    require_periodic(params_base)
    if omega_s_ratios is None or omega_pr_ratios is None:
        ds, dp = default_sweep_grids()
        omega_s_ratios = ds if omega_s_ratios is None else omega_s_ratios
        omega_pr_ratios = dp if omega_pr_ratios is None else omega_pr_ratios
    omega_s_ratios = np.asarray(omega_s_ratios, dtype=float)
    omega_pr_ratios = np.asarray(omega_pr_ratios, dtype=float)
    if omega_s_ratios.size < 1 or omega_pr_ratios.size < 1:
        raise ValueError("sweep grids must be non-empty")

    ks = odd_k_range(k_max)
    base_dict = params_base.as_dict()
    tasks = [
        (base_dict, float(rs), float(rp), ks, steady_kwargs)
        for rs in omega_s_ratios for rp in omega_pr_ratios
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]

    n_s, n_pr = omega_s_ratios.size, omega_pr_ratios.size
    intensities = {k: np.full((n_s, n_pr), np.nan) for k in ks}
    errors = {}
    for idx, (point, err) in enumerate(results):
        i, j = divmod(idx, n_pr)
        if err is not None:
            errors[(i, j)] = err
            continue
        for k in ks:
            intensities[k][i, j] = point[k]
    if len(errors) > 0.5 * len(tasks):
        raise SweepFailed(f"{len(errors)}/{len(tasks)} sweep points failed")
    return SweepResult(
        omega_s_ratios=omega_s_ratios,
        omega_pr_ratios=omega_pr_ratios,
        k_values=ks,
        intensities=intensities,
        errors=errors,
        meta={
            "params_base": base_dict,
            "gamma_ratio": params_base.gamma_s / params_base.gamma_pr,
            "steady_kwargs": {k: repr(v) for k, v in sorted(steady_kwargs.items())},
        },
    )
