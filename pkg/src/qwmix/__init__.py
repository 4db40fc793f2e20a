"""Quantum wave mixing in a cascaded two-qubit waveguide.

A strongly driven source qubit feeds its resonance fluorescence one way
into a probe qubit that is also driven by a coherent tone.  The probe's
scattered field develops a comb of side peaks at odd multiples of the
half drive-frequency difference; when the source emits photons only in
correlated pairs, half of the odd comb is suppressed.  The package
provides the closed-form source analytics, the effective squeezed-noise
probe model, the exact 15-moment cascaded dynamics with a dense
density-matrix oracle, and the peak-extraction and sweep tooling.
"""

from .params import (
    FULL,
    HALF,
    InvalidParam,
    SystemParams,
    ValidatedParams,
    probe_drive_coeff,
    validate,
)
from .source import (
    AnomalousCorrelator,
    DegenerateDressing,
    DressedSource,
    TripletWeights,
    anomalous_correlators,
    dressed_coefficients,
    filtered_g2,
    squeeze_params,
    triplet_spectrum,
    triplet_weights,
)
from .effective import (
    BlochState,
    NonHyperbolic,
    SeriesCoefficients,
    SingularSystem,
    effective_rhs,
    peak_series,
    series_coefficients,
    stationary_solve,
)
from .cascade import (
    MOMENT_NAMES,
    N_MOMENTS,
    NonFinite,
    NotConverged,
    SourceSteadyState,
    StepSizeUnderflow,
    Trajectory,
    ground_state,
    integrate,
    moment_rhs,
    product_state,
    source_steady_state,
    steady_periodic,
    trajectory_to_csv,
)
from .oracle import (
    DensityTrajectory,
    Liouvillian,
    PositivityViolation,
    SecularMismatch,
    build_cascade_liouvillian,
    build_source_liouvillian,
    check_density,
    correlator_spectrum,
    dressed_operators,
    evolve_density,
    moments_from_density,
    regression_correlator,
    secular_source_liouvillian,
    steady_state,
)
from .harmonics import NotPeriodic, PeakSpectrum, odd_k_range
from .spectra import (
    CompareResult,
    RETAINED_K,
    SweepFailed,
    SweepResult,
    compare_spectra,
    even_harmonic_power,
    harmonic_project,
    sweep2d,
)

__version__ = "0.1.0"
