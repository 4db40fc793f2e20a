import math

import numpy as np
import pytest

from qwmix import params as P


def test_fig2_point_flags():
    v = P.validate(P.SystemParams(gamma_s=10.0, omega_rabi_s=5000.0, omega_rabi_pr=0.2,
                                  delta=0.0, delta_omega=2 * np.pi / 100, mu=1.0))
    assert v.flags == frozenset({P.FLAG_STRONG_SOURCE, P.FLAG_WEAK_PROBE, P.FLAG_NARROW_FILTER})


def test_all_drives_off_no_flags():
    v = P.validate(P.SystemParams(gamma_s=1.0, omega_rabi_s=0.0, omega_rabi_pr=0.0,
                                  delta=0.0, delta_omega=1.0, mu=0.0))
    assert v.flags == frozenset()


def test_negative_rate_rejected():
    with pytest.raises(P.InvalidParam) as err:
        P.validate(P.SystemParams(gamma_s=-1.0))
    assert err.value.field == "gamma_s"


def test_mu_bounds_and_finiteness():
    with pytest.raises(P.InvalidParam):
        P.validate(P.SystemParams(mu=1.5))
    with pytest.raises(P.InvalidParam):
        P.validate(P.SystemParams(delta=math.inf))
    with pytest.raises(P.InvalidParam):
        P.validate(P.SystemParams(rabi_convention="both"))


def test_validate_idempotent():
    v1 = P.validate(P.SystemParams(gamma_s=3.0, omega_rabi_s=40.0, omega_rabi_pr=0.1,
                                   delta_omega=0.2))
    v2 = P.validate(v1)
    assert v1 == v2


def test_strong_flag_monotone_in_drive():
    rng = np.random.default_rng(3)
    ratios = np.sort(rng.uniform(0.1, 40.0, size=30))
    seen_strong = False
    for r in ratios:
        v = P.validate(P.SystemParams(gamma_s=2.0, omega_rabi_s=2.0 * r))
        if seen_strong:
            assert P.FLAG_STRONG_SOURCE in v.flags
        seen_strong = seen_strong or P.FLAG_STRONG_SOURCE in v.flags


def test_wide_filter_flag():
    v = P.validate(P.SystemParams(gamma_s=0.05))
    assert P.FLAG_WIDE_FILTER in v.flags
    assert P.FLAG_NARROW_FILTER not in v.flags


def test_require_periodic():
    v = P.validate(P.SystemParams(delta_omega=0.0))
    with pytest.raises(P.InvalidParam):
        P.require_periodic(v)
    v = P.validate(P.SystemParams(delta_omega=0.5))
    assert P.require_periodic(v) == pytest.approx(2 * math.pi / 0.5)


def test_probe_drive_coefficient_conventions():
    v = P.validate(P.SystemParams(omega_rabi_pr=0.4))
    assert P.probe_drive_coeff(v, P.HALF) == pytest.approx(0.2)
    assert P.probe_drive_coeff(v, P.FULL) == pytest.approx(0.4)
    forced = P.validate(P.SystemParams(omega_rabi_pr=0.4, rabi_convention=P.HALF))
    assert P.probe_drive_coeff(forced, P.FULL) == pytest.approx(0.2)


def test_replace_revalidates():
    v = P.validate(P.SystemParams(gamma_s=1.0))
    w = v.replace(gamma_s=20.0, omega_rabi_s=400.0)
    assert P.FLAG_STRONG_SOURCE in w.flags
    with pytest.raises(P.InvalidParam):
        v.replace(mu=-0.1)
