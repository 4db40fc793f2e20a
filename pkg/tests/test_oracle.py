import numpy as np
import pytest

import qwmix as q
from qwmix import cascade as C
from qwmix import oracle as O
from qwmix import source as S


def _params(**kw):
    base = dict(gamma_s=2.0, omega_rabi_s=1.3, omega_rabi_pr=0.3,
                delta_omega=0.4, mu=0.9)
    base.update(kw)
    return q.validate(q.SystemParams(**base))


def _random_density(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def test_vectorization_convention():
    rng = np.random.default_rng(0)
    a, rho, b = (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)) for _ in range(3))
    lhs = (a @ rho @ b).ravel()
    rhs = np.kron(a, b.T) @ rho.ravel()
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_trace_preservation_rows():
    p = _params()
    for liou in (O.build_source_liouvillian(p), O.build_cascade_liouvillian(p),
                 O.build_source_liouvillian(p, frame="midpoint"),
                 O.secular_source_liouvillian(p)):
        assert np.max(np.abs(liou.trace_row())) < 1e-12


def test_hermiticity_preservation():
    rng = np.random.default_rng(1)
    p = _params()
    liou = O.build_cascade_liouvillian(p)
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = h + h.conj().T
    for tau in (0.0, 0.7):
        out = O.apply_liouvillian(liou, h, tau)
        assert np.max(np.abs(out - out.conj().T)) < 1e-12


def test_source_ground_state_dark():
    p = _params(omega_rabi_s=0.0, delta=0.0)
    liou = O.build_source_liouvillian(p)
    rho = O.ground_density(2)
    assert np.max(np.abs(O.apply_liouvillian(liou, rho))) < 1e-14


def test_source_steady_state_from_null_space():
    p = _params(gamma_s=1.0, omega_rabi_s=0.5, delta=0.0)
    rho = O.steady_state(O.build_source_liouvillian(p))
    m = O.moments_from_density(rho)
    assert m[1].real == pytest.approx(-1.0 / 3.0, abs=1e-12)


def test_cascade_mu_zero_decouples():
    # With mu = 0 the generator is a direct sum: evolution of a product
    # state stays the tensor product of the one-qubit evolutions.
    p = _params(mu=0.0)
    rho_s0 = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]], dtype=complex)
    rho_p0 = np.array([[0.4, -0.25j], [0.25j, 0.6]], dtype=complex)

    tr = O.evolve_density(np.kron(rho_s0, rho_p0), (0.0, 5.0), p, n_samples=10)
    tr_s = O.evolve_density(rho_s0, (0.0, 5.0), p, n_samples=10)

    probe_liou = O.Liouvillian(
        dim=2,
        static=O.dissipator_sop(O.SIGMA_M, 1.0),
        plus=O.commutator_sop(-1j * (p.omega_rabi_pr / p.gamma_pr) * O.SIGMA_P),
        minus=O.commutator_sop(1j * (p.omega_rabi_pr / p.gamma_pr) * O.SIGMA_M),
        delta_omega=p.delta_omega / p.gamma_pr,
    )
    tr_p = O.evolve_density(rho_p0, (0.0, 5.0), p, liouvillian=probe_liou, n_samples=10)
    for rho, rs, rp in zip(tr.rhos, tr_s.rhos, tr_p.rhos):
        assert np.max(np.abs(rho - np.kron(rs, rp))) < 1e-8


def test_evolve_density_constant_without_drives():
    p = _params(omega_rabi_s=0.0, omega_rabi_pr=0.0, mu=0.0)
    tr = O.evolve_density(O.ground_density(4), (0.0, 10.0), p, n_samples=5)
    assert np.max(np.abs(tr.rhos - tr.rhos[0])) < 1e-12


def test_source_marginal_of_cascade_matches_two_level_evolution():
    p = _params(mu=1.0)
    rho0 = O.ground_density(4)
    tr4 = O.evolve_density(rho0, (0.0, 8.0), p, n_samples=16)
    tr2 = O.evolve_density(O.ground_density(2), (0.0, 8.0), p, n_samples=16)
    for r4, r2 in zip(tr4.rhos, tr2.rhos):
        marginal = r4.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
        assert np.max(np.abs(marginal - r2)) < 1e-8


def test_evolve_density_invariants_strong_drive():
    p = _params(gamma_s=10.0, omega_rabi_s=500.0, omega_rabi_pr=0.2,
                delta_omega=2 * np.pi / 100, mu=1.0)
    tr = O.evolve_density(O.ground_density(4), (0.0, 3.0), p, n_samples=12)
    assert tr.meta["max_trace_dev"] < 1e-9
    assert tr.meta["max_herm_dev"] < 1e-10
    assert tr.meta["min_eigenvalue"] > -1e-7


def test_positivity_monitor_trips():
    # Constant pumping of a coherence drives the state nonpositive; the
    # monitor must refuse it rather than project it away.
    p = _params()
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    bad = O.Liouvillian(
        dim=2,
        static=np.outer(sx.ravel(), np.eye(2, dtype=complex).ravel()),
        plus=np.zeros((4, 4), complex), minus=np.zeros((4, 4), complex),
    )
    with pytest.raises(O.PositivityViolation):
        O.evolve_density(O.ground_density(2), (0.0, 3.0), p, liouvillian=bad, n_samples=6)


def test_check_density_rejects_bad_inputs():
    with pytest.raises(ValueError):
        O.check_density(np.eye(4) * 0.5)  # trace 2
    with pytest.raises(ValueError):
        O.check_density(np.array([[0.5, 0.3], [0.1, 0.5]]))  # not Hermitian
    with pytest.raises(ValueError):
        O.check_density(np.diag([1.2, -0.2]))  # negative eigenvalue


def test_moments_from_density_products():
    rho = O.ground_density(4)
    m = O.moments_from_density(rho)
    assert m[C.Z_S] == -1.0 and m[C.Z_PR] == -1.0 and m[C.ZS_ZPR] == 1.0
    excited = np.zeros((4, 4), dtype=complex)
    excited[2, 2] = 1.0  # |e>_s (x) |g>_pr
    m = O.moments_from_density(excited)
    assert m[C.Z_S] == 1.0 and m[C.ZS_ZPR] == -1.0
    mixed = np.eye(4, dtype=complex) / 4.0
    assert np.max(np.abs(O.moments_from_density(mixed))) == 0.0


def test_moment_projection_of_generator_matches_rhs():
    rng = np.random.default_rng(5)
    p = _params()
    liou = O.build_cascade_liouvillian(p)
    rho = _random_density(rng, 4)
    m = O.moments_from_density(rho)
    assert np.max(np.abs(
        C.moment_rhs(m, 1.1, p) - O.moments_from_density(O.apply_liouvillian(liou, rho, 1.1))
    )) < 1e-13


def test_dressed_operators_sum_to_sigma_minus():
    d = S.dressed_coefficients(1.2, 3.4)
    r, f, t = O.dressed_operators(d)
    assert np.max(np.abs(r + f + t - O.SIGMA_M)) < 1e-14


def test_regression_rr_initial_value():
    p = _params(gamma_s=1.0, omega_rabi_s=100.0, delta=0.0, mu=0.0)
    val = O.regression_correlator(p, "anomalous_RR", np.array([0.0]))[0]
    assert val.real == pytest.approx(0.25, abs=1e-10)
    assert abs(val.imag) < 1e-10


def test_regression_rr_decay_rate():
    p = _params(gamma_s=1.0, omega_rabi_s=100.0, delta=0.0)
    d = S.dressed_coefficients(0.0, 100.0, 1.0)
    taus = np.linspace(0.0, 6.0, 1201)
    rr = O.regression_correlator(p, "anomalous_RR", taus)
    mask = (taus > 0.1) & (taus < 4.0)
    rate = -np.polyfit(taus[mask], np.log(np.abs(rr[mask])), 1)[0]
    assert rate == pytest.approx(d.gamma_0, rel=0.03)


def test_regression_forbidden_pairs_secular():
    p = _params(gamma_s=1.0, omega_rabi_s=100.0, delta=0.0)
    taus = np.linspace(0.0, 8.0, 801)
    for kind in ("anomalous_RF", "anomalous_RT", "anomalous_FF", "anomalous_TT"):
        vals = O.regression_correlator(p, kind, taus, generator="secular")
        assert np.max(np.abs(vals)) < 1e-12


def test_regression_forbidden_pairs_exact_are_small_but_nonzero():
    # The energy-constraint argument is secular; the exact generator
    # leaves O(gamma_s/W) residues.  Document their scale.
    p = _params(gamma_s=1.0, omega_rabi_s=100.0, delta=0.0)
    taus = np.array([0.0])
    val = abs(O.regression_correlator(p, "anomalous_RF", taus, generator="exact")[0])
    assert 1e-8 < val < 1e-2


def test_regression_sideband_weights_equal():
    p = _params(gamma_s=1.0, omega_rabi_s=100.0, delta=0.0)
    cf = O.regression_correlator(p, "normal_F", np.array([0.0]))[0]
    ct = O.regression_correlator(p, "normal_T", np.array([0.0]))[0]
    assert abs(cf - ct) / abs(ct) < 0.02
    w = S.triplet_weights(S.dressed_coefficients(0.0, 100.0, 1.0))
    assert cf.real == pytest.approx(w.i_f, rel=0.02)


def test_regression_warns_outside_secular_regime():
    p = _params(gamma_s=1.0, omega_rabi_s=2.0, delta=0.0)
    with pytest.warns(O.SecularMismatch):
        O.regression_correlator(p, "normal_R", np.array([0.0, 1.0]))


def test_regression_unknown_kind():
    with pytest.raises(ValueError):
        O.regression_correlator(_params(), "anomalous_XY", np.array([0.0]))


def test_correlator_spectrum_of_exponential():
    # e^{-g tau} transforms to a Lorentzian of half-width g.
    g = 0.8
    taus = np.linspace(0.0, 40.0, 8001)
    vals = np.exp(-g * taus).astype(complex)
    om = np.linspace(-5.0, 5.0, 2001)
    spec = O.correlator_spectrum(taus, vals, om)
    half = spec.max() / 2
    above = om[spec >= half]
    assert 0.5 * (above[-1] - above[0]) == pytest.approx(g, rel=0.01)
