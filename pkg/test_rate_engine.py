"""Тесты вычисления нечеткой скорости."""

import math

import numpy as np
import pytest

from errors import RateError
from membership import (ConicFamily, ConicMembership, FiniteFamily, ParametricFamily, RadialMembership,
                        TableMembership)
from operators import IDENTITY, diag, rotation
from rate_engine import (FuzzyRate, Outcome, Witness, attained_witness, compute_rate, rate_conic_analytic,
                         rate_conic_closed_form, rate_finite, rate_parametric, ratio)
from settings import SearchConfig

Y = (1.0, 0.0)
BY = (2.0, 0.0)


def _table(fy, fby, label="F"):
    entries = {}
    if fy is not None:
        entries[Y] = fy
    if fby is not None:
        entries[BY] = fby
    return TableMembership(entries, label=label)


B = diag(2, 1)


def test_ratio_conventions():
    assert ratio(_table(0.5, 0.25), B, Y).ratio == 0.5
    excluded = ratio(_table(None, None), B, Y)
    assert excluded.excluded
    assert ratio(_table(None, 0.3), B, Y).ratio == math.inf


def test_rate_finite_picks_maximum_with_lowest_index():
    fam = FiniteFamily([_table(0.2, 0.8), _table(0.5, 0.25)])
    rate = rate_finite(fam, B, Y)
    assert rate.is_finite and rate.value == 4.0
    assert rate.attained
    assert rate.witness == Witness(name="index", value=0)

    tied = FiniteFamily([_table(0.5, 0.25), _table(0.2, 0.1)])
    assert rate_finite(tied, B, Y).witness.value == 0


def test_rate_finite_drop_maximizer():
    fam = FiniteFamily([_table(0.2, 0.8), _table(0.5, 0.25)])
    assert rate_finite(fam.subset([1]), B, Y).value == 0.5


def test_rate_finite_zero_denominator_is_infinite():
    fam = FiniteFamily([_table(0.0, 0.3), _table(0.5, 0.25)])
    rate = rate_finite(fam, B, Y)
    assert rate.is_infinite
    assert rate.certificate.kind == "zero_denominator"
    assert rate.certificate.probes[0].parameter == 0


def test_rate_finite_all_excluded_is_undefined():
    rate = rate_finite(FiniteFamily([_table(0.0, 0.0)]), B, Y)
    assert rate.outcome == Outcome.UNDEFINED
    assert rate.reason == "all ratios excluded"


def test_identity_rate_is_one():
    fam = FiniteFamily([_table(0.3, 0.9), _table(0.7, None)])
    assert rate_finite(fam, IDENTITY, Y).value == 1.0


@pytest.mark.parametrize("b", [math.sqrt(2), 2.0, 3.0, 10.0, -1.5, 1.0])
def test_closed_form_finite(b):
    rate = rate_conic_closed_form(b, 1.0)
    assert rate.is_finite
    assert rate.value == pytest.approx(math.exp(1 - 1 / b ** 4), rel=1e-12)
    assert not rate.attained


@pytest.mark.parametrize("b", [0.5, 0.1, -0.9])
def test_closed_form_infinite(b):
    rate = rate_conic_closed_form(b, 2.0)
    assert rate.is_infinite
    assert len(rate.certificate.probes) >= 3
    assert rate.certificate.growth_factor >= 10


def test_closed_form_rejects_zero_b():
    with pytest.raises(RateError):
        rate_conic_closed_form(0.0, 1.0)


def test_analytic_matches_closed_form():
    fam = ConicFamily(1.0)
    for b in (1.2, math.sqrt(2), 5.0):
        analytic = rate_conic_analytic(fam, diag(1, b), (0, 1))
        assert analytic.value == pytest.approx(rate_conic_closed_form(b, 1.0).value, rel=1e-12)


def test_analytic_equal_lambdas_attained():
    rate = rate_conic_analytic(ConicFamily(1.0), IDENTITY, (0.5, 0.5))
    assert rate.value == 1.0 and rate.attained


def test_analytic_zero_denominator():
    # F((2, 1)) = 0 на всех кривых, B(y) = (0.5, 1) лежит на кривой mu = 0.75
    rate = rate_conic_analytic(ConicFamily(1.0), diag(0.25, 1), (2, 1))
    assert rate.is_infinite
    assert rate.certificate.kind == "zero_denominator"


@pytest.mark.parametrize("b", np.geomspace(1.0, 10.0, 50).tolist())
def test_grid_matches_closed_form(b):
    rate = compute_rate(ConicFamily(1.0), diag(1, b), (0, 1), method="grid")
    assert rate.is_finite
    assert rate.value == pytest.approx(math.exp(1 - 1 / b ** 4), rel=1e-4)


@pytest.mark.parametrize("b", np.linspace(0.05, 0.95, 20).tolist())
def test_grid_detects_divergence(b):
    rate = compute_rate(ConicFamily(1.0), diag(1, b), (0, 1), method="grid")
    assert rate.is_infinite
    assert rate.certificate.kind == "growth"
    probes = rate.certificate.probes
    assert len(probes) >= 3
    assert all(q.log_ratio - p.log_ratio >= math.log(10) for p, q in zip(probes, probes[1:]))


def test_grid_on_closed_window_is_attained_at_endpoint():
    # Максимум (la - lb)(la + lb - 2 mu) на [0.5, 2] достигается в mu = 0.5
    fam = ConicFamily(1.0).restrict(0.5, 2.0)
    rate = rate_parametric(fam, diag(1, 2), (0, 1))
    assert rate.is_finite
    assert rate.value == pytest.approx(math.exp(0.75 * (1.25 - 1.0)), rel=1e-6)
    assert rate.witness.value == pytest.approx(0.5, abs=1e-6)


def test_grid_certifies_growth_exactly_at_factor():
    """Отношение 1/t на (0, 1]: каждое расширение окна дает рост ровно в 10 раз."""
    y, by = (0.0, 1.0), (0.0, 2.0)
    fam = ParametricFamily(0.0, 1.0, lambda t: TableMembership({y: t, by: 1.0}), open_low=True)
    rate = rate_parametric(fam, diag(1, 2), y)
    assert rate.is_infinite
    assert rate.certificate.kind == "growth"
    samples = rate.certificate.probes
    assert len(samples) >= 3
    assert all(q.parameter < p.parameter for p, q in zip(samples, samples[1:]))


def test_tiny_y_does_not_overflow():
    """При y = 1e-100 lambda огромна: значения нулевые, вычисление не падает."""
    fam = ConicFamily(1.0)
    rate = compute_rate(fam, diag(1, 2), (0, 1e-100), method="grid")
    assert rate.is_undefined
    assert rate.reason == "all ratios excluded"
    assert compute_rate(fam, diag(1, 2), (0, 1e-100)).is_undefined


def test_inconclusive_search_is_undefined():
    cfg = SearchConfig(max_expansions=1)
    rate = rate_parametric(ConicFamily(1.0), diag(1, 2), (0, 1), cfg)
    assert rate.is_undefined
    assert rate.reason == "inconclusive"
    assert rate.witness is not None


def test_compute_rate_dispatch():
    fam = FiniteFamily([_table(0.5, 0.25)])
    assert compute_rate(fam, B, Y).method == "enum"
    assert compute_rate(ConicFamily(1.0), diag(1, 2), (0, 1)).method == "closed"
    with pytest.raises(RateError):
        compute_rate(fam, B, Y, method="closed")
    with pytest.raises(RateError):
        compute_rate(ConicFamily(1.0), diag(1, 2), (0, 1), method="enum")
    with pytest.raises(RateError):
        compute_rate(fam, B, Y, method="bogus")


def test_attained_witness_finite():
    fam = FiniteFamily([_table(0.2, 0.8), _table(0.5, 0.25)])
    rate = rate_finite(fam, B, Y)
    pair = attained_witness(fam, B, Y, rate)
    assert pair.member_id == 0
    assert pair.F is pair.G
    assert pair.residual <= 1e-12


def test_attained_witness_parametric_interior():
    fam = FiniteFamily([ConicMembership(0.625, 1.0)])
    rate = rate_finite(fam, diag(1, 2), (0, 1))
    assert attained_witness(fam, diag(1, 2), (0, 1), rate).residual <= 1e-12


def test_attained_witness_reports_residual_for_limit():
    fam = ConicFamily(1.0)
    rate = compute_rate(fam, diag(1, 2), (0, 1))
    with pytest.raises(RateError) as info:
        attained_witness(fam, diag(1, 2), (0, 1), rate)
    assert info.value.residual > 0


def test_attained_witness_closed_window_endpoint():
    fam = ConicFamily(1.0).restrict(0.5, 2.0)
    B = diag(1, math.sqrt(2))
    rate = rate_parametric(fam, B, (0, 1))
    pair = attained_witness(fam, B, (0, 1), rate)
    assert pair.member_id == pytest.approx(0.5, abs=1e-6)
    assert pair.residual <= 1e-6 * rate.value


def test_attained_witness_rejects_open_window():
    """Для открытого окна свидетель не ищется, но невязка сообщается."""
    fam = ConicFamily(1.0).restrict(0.5, 2.0)
    rate = rate_parametric(fam, diag(1, 2), (0, 1))
    assert attained_witness(fam, diag(1, 2), (0, 1), rate).residual <= 1e-6 * rate.value
    open_fam = ConicFamily(1.0, low=0.5, high=2.0, open_low=True)
    open_rate = rate_parametric(open_fam, diag(1, 2), (0, 1))
    assert open_rate.is_finite
    with pytest.raises(RateError) as info:
        attained_witness(open_fam, diag(1, 2), (0, 1), open_rate)
    assert info.value.residual is not None


def test_attained_witness_requires_finite_rate():
    fam = FiniteFamily([_table(0.0, 0.3)])
    with pytest.raises(RateError):
        attained_witness(fam, B, Y, rate_finite(fam, B, Y))


def test_rotation_radial_rate_is_one():
    fam = FiniteFamily([RadialMembership()])
    assert rate_finite(fam, rotation(math.pi / 2), (1, 0)).value == pytest.approx(1.0, rel=1e-15)


def test_fuzzy_rate_json_round_trip():
    rate = rate_conic_closed_form(0.5, 1.0)
    text = rate.model_dump_json()
    assert '"inf"' in text
    again = FuzzyRate.model_validate_json(text)
    assert again == rate
    assert again.value == math.inf

    finite = rate_conic_closed_form(2.0, 1.0)
    assert '"witness":{"mu":0.001}' in finite.model_dump_json()
    assert FuzzyRate.model_validate_json(finite.model_dump_json()) == finite
