import math

import numpy as np
import pytest

import qwmix as q
from qwmix import effective as E


def _params(omega_pr=0.2, delta_omega=2 * np.pi / 100, **kw):
    return q.validate(q.SystemParams(omega_rabi_pr=omega_pr, delta_omega=delta_omega, **kw))


def test_rhs_dark_state_vacuum_bath():
    state = E.BlochState(0.0, -1.0, 0.0)
    d_sm, d_sz = E.effective_rhs(state, _params(omega_pr=0.0), m_param=0.7, n_param=0.0)
    assert d_sm == 0.0
    assert d_sz == 0.0


def test_rhs_drive_from_ground():
    # With N = 1 the bath pumps the qubit: d<sz> = -gamma(z+1) - 2Ngamma z = +2 at z = -1.
    state = E.BlochState(0.0, -1.0, 0.0)
    d_sm, d_sz = E.effective_rhs(state, _params(omega_pr=0.2), m_param=0.0, n_param=1.0)
    assert d_sm == pytest.approx(0.1j, abs=1e-15)
    assert d_sz == pytest.approx(2.0, abs=1e-15)


def test_rhs_squeeze_term():
    state = E.BlochState(0.1, -0.9, 0.0)
    d_sm, _ = E.effective_rhs(state, _params(omega_pr=0.0), m_param=1.0, n_param=1.0)
    assert d_sm == pytest.approx(-0.25 + 0j, abs=1e-15)


def test_stationary_coherent_only_single_peak():
    spec = E.stationary_solve(_params(), 0.0, 0.0)
    others = [abs(v) for k, v in spec.peaks.items() if k != 1]
    assert abs(spec.peaks[1]) > 0.01
    assert max(others) < 1e-12


def test_stationary_selection_rule_exact():
    spec = E.stationary_solve(_params(), 1.0, 1.0)
    for k in (-1, 3, -5):
        assert abs(spec.peaks[k]) < 1e-10
    ratio = abs(spec.peaks[-3] / spec.peaks[1])
    assert ratio == pytest.approx(2.0 / 3.0, rel=0.01)


def test_stationary_weak_drive_limit():
    spec = E.stationary_solve(_params(omega_pr=1e-3, delta_omega=0.02), 1.0, 1.0)
    assert spec.peaks[1] == pytest.approx(1j * 1e-3 / 5.0, rel=1e-4)


def test_stationary_grid_doubling():
    p = _params()
    s1 = E.stationary_solve(p, 1.0, 1.0, n_phi=256)
    s2 = E.stationary_solve(p, 1.0, 1.0, n_phi=512)
    assert max(abs(s1.peaks[k] - s2.peaks[k]) for k in s1.peaks) < 1e-10


def test_stationary_scaling_invariance():
    s1 = E.stationary_solve(_params(), 1.0, 1.0)
    p2 = q.validate(q.SystemParams(omega_rabi_pr=0.2 * 3.7, gamma_pr=3.7,
                                   delta_omega=3.7 * 2 * np.pi / 100))
    s2 = E.stationary_solve(p2, 1.0, 1.0)
    for k in (-3, 5, -7):
        r1 = abs(s1.peaks[k] / s1.peaks[1])
        r2 = abs(s2.peaks[k] / s2.peaks[1])
        assert r1 == pytest.approx(r2, rel=1e-9, abs=1e-12)


def test_stationary_phase_structure_real_m():
    # For real m the retained amplitudes differ in phase by arg(m) = 0.
    spec = E.stationary_solve(_params(), 1.0, 1.0)
    rel = spec.peaks[-3] / spec.peaks[1]
    assert abs(np.angle(rel)) < 1e-10


def test_stationary_singular_system():
    with pytest.raises(E.SingularSystem):
        E.stationary_solve(_params(omega_pr=0.0), 1.5, 1.0)


def test_stationary_warns_fast_phase():
    with pytest.warns(UserWarning):
        E.stationary_solve(_params(delta_omega=0.9), 1.0, 1.0)


def test_series_frozen_numbers():
    spec = E.peak_series(_params(), 1.0, 1.0, order=4)
    f = 0.2 / math.sqrt(5.0)
    assert spec.meta["f"] == pytest.approx(f, abs=1e-15)
    assert abs(spec.peaks[-3] / spec.peaks[1]) == pytest.approx(2 / 3, abs=1e-14)
    assert abs(spec.peaks[5] / spec.peaks[1]) == pytest.approx(f**2 * 2 / 3, abs=1e-12)
    assert abs(spec.peaks[5] / spec.peaks[1]) == pytest.approx(0.005333333333, abs=1e-9)
    assert abs(spec.peaks[1]) == pytest.approx(0.2 / 5.0, abs=1e-15)


def test_series_truncation_and_collapse():
    spec2 = E.peak_series(_params(), 1.0, 1.0, order=2)
    assert sorted(spec2.peaks) == [-3, 1]
    spec0 = E.peak_series(_params(), 0.0, 1.0, order=4)
    nonzero = [k for k, v in spec0.peaks.items() if abs(v) > 0]
    assert nonzero == [1]


def test_series_non_hyperbolic():
    with pytest.raises(E.NonHyperbolic):
        E.peak_series(_params(), m_param=2.0, n_param=1.0)


def test_series_matches_stationary_within_truncation():
    p = _params()
    st = E.stationary_solve(p, 1.0, 1.0)
    se = E.peak_series(p, 1.0, 1.0, order=4)
    for k in (1, -3, 5, -7):
        assert abs(st.peaks[k]) == pytest.approx(abs(se.peaks[k]), rel=0.05)


def test_series_warns_outside_weak_drive():
    with pytest.warns(UserWarning):
        E.peak_series(_params(omega_pr=0.8), 1.0, 1.0)
