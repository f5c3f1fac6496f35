"""Exact checks of the exponent bookkeeping and the prime selector."""
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from vdc.asymptotics import (
    aggregate_term_exponents,
    aggregate_terms,
    comparison,
    dimension_growth_exponent,
    error_term_exponents,
    improvement_thresholds,
    iroot,
    param_exponents,
    prime_select,
    thm_exponent,
)
from vdc.errors import InputError, PreconditionError
from vdc.mpoly import parse_poly


def test_headline_exponent_frozen_values():
    assert thm_exponent(29) == Fraction(27780, 1069)
    assert thm_exponent(29) == 25 + Fraction(1055, 1069)
    assert thm_exponent(17) == 13 + Fraction(611, 421)
    assert thm_exponent(16) == 12 + Fraction(574, 380)
    assert dimension_growth_exponent(16) == 13 + Fraction(1, 2)


def test_modulus_exponents_frozen_values():
    pe = param_exponents(10)
    assert (pe.alpha, pe.beta, pe.gamma) == (
        Fraction(1, 2), Fraction(1, 2), Fraction(1))
    pe5 = param_exponents(5)
    assert pe5.alpha == Fraction(18, 61)
    assert pe5.gamma == Fraction(36, 61)
    for n in range(5, 201):
        pe = param_exponents(n)
        assert pe.gamma == 2 * pe.alpha
        D = n * n + 8 * n - 4
        assert pe.alpha == Fraction(n * n - n - 2, D)
        assert pe.beta == Fraction(n * n - 2 * n + 8, D)
        assert thm_exponent(n) == n - 4 + Fraction(37 * n - 18, D)


def test_rejects_small_or_non_integer_n():
    for bad in (4, 0, -3):
        with pytest.raises(InputError):
            thm_exponent(bad)
    with pytest.raises(InputError):
        param_exponents(7.5)


def test_benchmark_crossovers():
    assert improvement_thresholds() == {"dimension_growth": 17,
                                        "n_minus_3": 29}
    assert not comparison(16)["beats_dimension_growth"]
    assert comparison(17)["beats_dimension_growth"]
    assert not comparison(28)["beats_n_minus_3"]
    assert comparison(29)["beats_n_minus_3"]


def test_aggregate_leaders_across_range():
    for n in range(5, 201):
        rep = aggregate_term_exponents(n)
        assert len(rep.values) == 10
        assert rep.max_value == max(rep.values)
        if n >= 11:
            assert rep.argmax == [1, 2, 9]
            assert rep.matches_main
            assert rep.expected_leaders
        elif n == 10:
            # alpha == beta at n = 10, so term 3 ties the usual leaders
            assert rep.argmax == [1, 2, 3, 9]
            assert rep.matches_main
            assert not rep.expected_leaders
        else:
            assert rep.expected_leaders is None
            assert not rep.matches_main


def test_aggregate_vectors_match_report():
    rep = aggregate_term_exponents(12)
    vecs = aggregate_terms(12)
    for vec, val in zip(vecs, rep.values):
        assert vec.substitute(rep.alpha, rep.beta, rep.gamma) == val


def test_error_families_and_scales():
    for n in (10, 12, 17, 29, 100):
        rep = error_term_exponents(n)
        assert set(rep.groups) == {"coarse", "first_difference",
                                   "class_defect", "refinement"}
        assert rep.scale == {
            "coarse": "count",
            "first_difference": "variance",
            "class_defect": "per_shift",
            "refinement": "count",
        }
        # count-scale families stay at or below the main exponent; only
        # the variance-scale family lands above it in a naive comparison
        exceeding = {fam for fam, _, _ in rep.exceeds_main}
        assert exceeding == {"first_difference"}
        for fam in ("coarse", "refinement"):
            for _, _, val in rep.groups[fam]:
                assert val <= rep.main, (n, fam, val)


def test_error_report_frozen_values_n12():
    rep = error_term_exponents(12)
    assert rep.main == Fraction(1157, 118)
    coarse = {label: val for label, _, val in rep.groups["coarse"]}
    assert coarse == {
        "sqrt_p": Fraction(530, 59),
        "sqrt_q": Fraction(2109, 236),
        "density": Fraction(451, 59),
    }
    term, samples = rep.parametric["class_defect"]
    assert term.param == "s"
    assert samples == [(-1, Fraction(370, 59)), (0, Fraction(386, 59)),
                       (1, Fraction(402, 59))]


@given(st.integers(min_value=0, max_value=10**30),
       st.integers(min_value=1, max_value=64))
def test_iroot_floor_property(x, k):
    r = iroot(x, k)
    assert r**k <= x
    assert (r + 1) ** k > x


def test_iroot_rejects_bad_inputs():
    with pytest.raises(InputError):
        iroot(-1, 2)
    with pytest.raises(InputError):
        iroot(10, 0)


def test_prime_select_without_form():
    ch = prime_select(64, 12)
    assert (ch.pi, ch.p, ch.q) == (11, 13, 97)
    assert ch.intervals == {"pi": (9, 18), "p": (9, 18), "q": (97, 194)}
    assert ch.regime == "theorem"
    assert not ch.warnings
    for role in ("pi", "p", "q"):
        assert ch.checks[role] == {"geometry": "not-requested"}


def test_prime_select_small_n_regime_warning():
    ch = prime_select(64, 9)
    assert ch.regime == "outside-theorem-regime"
    assert any("gamma" in w for w in ch.warnings)


def test_prime_select_with_form_budget_stamps():
    f = parse_poly("+".join(f"x{i}^4" for i in range(1, 11)), 10)
    ch = prime_select(64, 10, F=f)
    assert (ch.pi, ch.p, ch.q) == (11, 13, 67)
    assert ch.checks["pi"] == {"r0": "certified"}
    assert ch.checks["p"]["r0"] == "certified"
    # full projective direction sweeps at n = 10 dwarf any sane budget;
    # the selector must stamp that honestly rather than pretend
    assert ch.checks["p"]["r1"] == "skipped_budget"
    assert ch.checks["q"]["r2"] == "skipped_budget"
    assert ("p", 11, "already used") in ch.skipped
    assert any("unverified" in w for w in ch.warnings)


def test_prime_select_strict_mode_refuses_unverified():
    f = parse_poly("+".join(f"x{i}^4" for i in range(1, 11)), 10)
    with pytest.raises(PreconditionError):
        prime_select(64, 10, F=f, strict_checks=True)


def test_prime_select_refuses_degenerate_direction_sweep():
    # the diagonal quartic in five variables fails the direction sweep at
    # every prime in the p-interval, so there is nothing to pick
    f = parse_poly("+".join(f"x{i}^4" for i in range(1, 6)), 5)
    with pytest.raises(PreconditionError) as ei:
        prime_select(64, 5, F=f)
    assert ei.value.details["role"] == "p"


def test_prime_select_input_validation():
    with pytest.raises(InputError):
        prime_select(1, 12)
    with pytest.raises(InputError):
        prime_select(64, 12, constants=(1, 1))
    with pytest.raises(InputError):
        prime_select(64, 12, constants=(0, 1, 1))
