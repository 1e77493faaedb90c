"""Тесты орбит, оценки произведением и квазинеподвижных точек."""

import math

import pytest

from dynamics import (certify_fixed_point, check_uniform_lower_bound, find_quasi_fixed_points, orbit, orbit_points,
                      product_bound, quasi_fixed_search, step_rate_convergence)
from errors import DynamicsError
from membership import ConicFamily, FiniteFamily, RadialMembership, TableMembership
from operators import diag, projection, rotation
from rate_engine import FuzzyRate, Witness, _zero_denominator_certificate
from settings import SearchConfig


def _finite(v):
    return FuzzyRate.finite(v, Witness(name="index", value=0), attained=True, method="enum")


def _undefined():
    return FuzzyRate.undefined("all ratios excluded", method="enum")


def _infinite():
    return FuzzyRate.infinite(_zero_denominator_certificate(0), method="enum")


def test_orbit_points():
    assert orbit_points(diag(1, 2), (0, 1), 3) == [(0.0, 1.0), (0.0, 2.0), (0.0, 4.0), (0.0, 8.0)]


def test_product_bound_infinity_absorbs_and_undefined_skips():
    assert product_bound([_finite(2.0), _finite(3.0)]) == [2.0, 6.0]
    assert product_bound([_infinite(), _finite(0.0)]) == [math.inf, math.inf]
    assert product_bound([_finite(2.0), _undefined(), _finite(3.0)]) == [2.0, None, None]


@pytest.mark.parametrize("b", [1.5, 2.0, 3.0])
def test_conic_orbit_telescopes(b):
    report = orbit(diag(1, b), (0, 1), 5, ConicFamily(1.0))
    for k in range(1, 6):
        step = math.exp(1 / b ** (4 * (k - 1)) - 1 / b ** (4 * k))
        assert report.step_rates[k - 1].value == pytest.approx(step, rel=1e-6)
        assert report.n_step_rates[k - 1].value == pytest.approx(math.exp(1 - 1 / b ** (4 * k)), rel=1e-6)
        assert report.product_bounds[k - 1] == pytest.approx(report.n_step_rates[k - 1].value, rel=1e-6)
    assert all(report.bound_satisfied)


def test_step_rates_converge_for_b2():
    report = orbit(diag(1, 2), (0, 1), 3, ConicFamily(1.0))
    assert report.step_rates[2].value == pytest.approx(math.exp(1 / 256 - 1 / 4096), rel=1e-9)
    assert step_rate_convergence(report, 0.01) == 3
    assert step_rate_convergence(report, 0.1) == 2
    assert step_rate_convergence(report, 1e-6) is None


def test_orbit_rejects_zero_steps():
    with pytest.raises(DynamicsError):
        orbit(diag(1, 2), (0, 1), 0, ConicFamily(1.0))


def test_uniform_lower_bound():
    report = orbit(diag(1, 2), (0, 1), 4, ConicFamily(1.0))
    assert check_uniform_lower_bound(report, 1.0, 1)
    assert check_uniform_lower_bound(report, 0.5, 3)
    with pytest.raises(DynamicsError):
        check_uniform_lower_bound(report, 0.0, 1)
    with pytest.raises(DynamicsError):
        check_uniform_lower_bound(report, 1.5, 1)
    with pytest.raises(DynamicsError):
        check_uniform_lower_bound(report, 0.5, 5)


def test_uniform_lower_bound_fails_on_decay():
    # F(y) = 1, F(B^n(y)) = 0.5^n: ||B^n||_y = 0.5^n
    points = [(float(2 ** k), 0.0) for k in range(5)]
    fam = FiniteFamily([TableMembership({p: 0.5 ** k for k, p in enumerate(points)})])
    report = orbit(diag(2, 1), (1, 0), 4, fam)
    assert not check_uniform_lower_bound(report, 0.2, 1)
    assert check_uniform_lower_bound(report, 0.5, 1) is False
    assert check_uniform_lower_bound(report, 0.0625, 1)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_quasi_fixed_midpoint_analytic(k):
    finding = quasi_fixed_search(diag(1, 2), (0, 1), ConicFamily(1.0), k, 1e-12)
    expected = (1 / 2 ** (2 * (k - 1)) + 1 / 2 ** (2 * k)) / 2
    assert finding.witness.value == pytest.approx(expected, abs=1e-12)
    assert finding.ratio_residual <= 1e-12
    assert finding.exact


@pytest.mark.parametrize("k", [1, 2, 3])
def test_quasi_fixed_midpoint_numeric(k):
    cfg = SearchConfig(use_analytic=False)
    finding = quasi_fixed_search(diag(1, 2), (0, 1), ConicFamily(1.0), k, 1e-12, cfg)
    expected = (1 / 2 ** (2 * (k - 1)) + 1 / 2 ** (2 * k)) / 2
    assert finding.witness.value == pytest.approx(expected, abs=1e-6)
    assert finding.ratio_residual <= 1e-12


def test_quasi_fixed_search_none_when_no_member_qualifies():
    fam = FiniteFamily([TableMembership({(0.0, 1.0): 0.5, (0.0, 2.0): 0.1})])
    assert quasi_fixed_search(diag(1, 2), (0, 1), fam, 1, 1e-9) is None
    with pytest.raises(DynamicsError):
        quasi_fixed_search(diag(1, 2), (0, 1), fam, 0, 1e-9)


def test_projection_fixed_point_certified():
    B = projection(0)
    fam = FiniteFamily([TableMembership({(3.0, 5.0): 0.2, (3.0, 0.0): 0.6}, injective=True)])
    finding = quasi_fixed_search(B, (3, 5), fam, 2, 1e-12)
    assert finding is not None and finding.ratio_residual == 0.0
    cert = certify_fixed_point(B, (3, 5), 2, finding, fam)
    assert cert.certified
    assert cert.operator_residual == 0.0
    assert cert.candidate == (3.0, 0.0)


def test_rotation_radial_not_certified():
    B = rotation(math.pi / 2)
    fam = FiniteFamily([RadialMembership()])
    finding = quasi_fixed_search(B, (1, 0), fam, 1, 1e-12)
    assert finding.ratio_residual == 0.0
    cert = certify_fixed_point(B, (1, 0), 1, finding, fam)
    assert not cert.certified
    assert not cert.injective_declared
    assert cert.operator_residual == pytest.approx(1.0)
    assert cert.reasons


def test_find_quasi_fixed_points_scans_every_step():
    B = projection(0)
    fam = FiniteFamily([TableMembership({(3.0, 5.0): 0.2, (3.0, 0.0): 0.6}, injective=True)])
    scan = find_quasi_fixed_points(B, (3, 5), fam, 3, 1e-12)
    assert [f.step for f in scan.findings] == [2, 3]
    assert all(c.certified for c in scan.certificates)
