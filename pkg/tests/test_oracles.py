"""Brute-force reference calculations (scan + bisection + quadrature)."""

import math

import numpy as np
import pytest

from sll import oracles, thermo
from sll.errors import SonicExceeded


def test_peak_flux_scan_frozen():
    qp, jm = oracles.scan_peak_flux(1.0, 1.0, 2.0)
    assert jm == pytest.approx(0.5443310539518174, abs=1e-6)
    assert qp == pytest.approx(math.sqrt(2.0 / 3.0), abs=1e-9)


def test_speed_from_flux_dense_scan():
    assert oracles.speed_from_flux(0.3, 1.0, 1.0, 2.0) == \
        pytest.approx(0.3157380436470593, abs=1e-10)
    assert oracles.speed_from_flux(0.0, 1.0, 1.0, 2.0) == 0.0
    _, jm = oracles.scan_peak_flux(1.0, 1.0, 2.0)
    q = oracles.speed_from_flux(jm, 1.0, 1.0, 2.0)
    assert q == pytest.approx(math.sqrt(2.0 / 3.0), abs=1e-9)
    with pytest.raises(SonicExceeded):
        oracles.speed_from_flux(jm * 1.001, 1.0, 1.0, 2.0)


def test_critical_state_hom_scan_closed_form():
    rho, q, jm = oracles.critical_state_hom(thermo.GammaLaw(1.0, 2.0), 4.0)
    assert rho == pytest.approx(2.0, rel=1e-9)
    assert q == pytest.approx(2.0, rel=1e-9)
    assert jm == pytest.approx(4.0, rel=1e-9)


def test_upstream_pressure_uniform_matches_state_algebra():
    p, fmax = oracles.upstream_pressure(0.3, lambda s: 1.0, lambda s: 1.0, 2.0)
    q = 0.3157380436470593
    rho = (2.0 - q * q) / 2.0
    assert p == pytest.approx(rho * rho / 2.0, rel=1e-8)
    assert fmax == pytest.approx(0.5443310539518174, rel=1e-8)


def test_upstream_pressure_axisymmetric_weighting():
    # uniform pipe: m = rho u / 2
    p, _ = oracles.upstream_pressure(0.15, lambda s: 1.0, lambda s: 1.0, 2.0,
                                     axisymmetric=True)
    q = oracles.speed_from_flux(0.3, 1.0, 1.0, 2.0)
    rho = (2.0 - q * q) / 2.0
    assert p == pytest.approx(rho * rho / 2.0, rel=1e-8)


def test_quasi1d_estimate_scales_with_throat():
    _, jm = oracles.scan_peak_flux(1.0, 1.0, 2.0)

    def gap(x):
        return 1.0 - 0.15 * (1.0 + np.tanh(x / 3.0))

    est = oracles.quasi1d_critical_flux(gap, -20.0, 20.0, 1.0, 1.0, 2.0)
    assert est == pytest.approx(0.7 * jm, rel=1e-4)
    est_ax = oracles.quasi1d_critical_flux(gap, -20.0, 20.0, 1.0, 1.0, 2.0,
                                           axisymmetric=True)
    assert est_ax == pytest.approx(0.5 * 0.7 ** 2 * jm, rel=1e-4)
